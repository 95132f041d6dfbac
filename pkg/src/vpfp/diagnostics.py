"""Norms, energy/dissipation functionals and limit-error metrics.

Spatial derivatives are Fourier multipliers; velocity derivatives and the
weight sqrt(1+v^2) are Hermite recurrences, applied with an extended
Hermite axis so the norms are exact for every represented field (no
truncation loss at the top retained mode).  Sobolev sums run over all
derivative orders up to the requested one, not just the top order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import (
    DistributionField,
    dealiased_product,
    gamma_moment,
    moments,
    project_micro,
    spatial_l2_norm,
    x_derivative,
)
from .spectral import (
    ConfigurationError,
    SpatialGrid,
    SpectralField,
    hermite_shift_coeffs,
    inverse_transform,
)

__all__ = [
    "EnergyReport",
    "sobolev_norm",
    "nu_norm",
    "energy_functionals",
    "legacy_functionals",
    "moment_residuals",
    "limit_error",
    "CSV_COLUMNS",
]

COMPONENT_KEYS = (
    "g_HkxL2v_sq",
    "gradv_micro_Hkm1_sq",
    "ab_Hkm1_sq",
    "micro_nu_Hk_sq",
    "b_Hk_sq",
    "grad_b_Hkm1_sq",
    "grad_a_Hkm1_sq",
    "grad_phi_Hk_sq",
)

CSV_COLUMNS = ("time", "E_k", "D_k") + COMPONENT_KEYS + ("mass_residual", "poisson_residual")


@dataclass
class EnergyReport:
    """One diagnostics sample: functional values plus a labeled breakdown.

    E_k and D_k equal the sum of their component groups; the dissipation
    components carry their 1/eps prefactors already applied.
    """

    time: float
    E_k: float
    D_k: float
    components: dict
    mass_residual: float
    poisson_residual: float

    def csv_row(self) -> str:
        vals = [self.time, self.E_k, self.D_k]
        vals += [self.components[key] for key in COMPONENT_KEYS]
        vals += [self.mass_residual, self.poisson_residual]
        return ",".join(f"{v:.17g}" for v in vals)

    @staticmethod
    def csv_header() -> str:
        return ",".join(CSV_COLUMNS)


# ---------------------------------------------------------------------------
# norm machinery (d = 1)

def _require_1d(grid: SpatialGrid) -> None:
    if grid.d != 1:
        raise NotImplementedError("diagnostics norms are implemented for d = 1")


def _x_weight(grid: SpatialGrid, order: int) -> np.ndarray:
    """Per-mode multiplier sum_{alpha <= order} k^(2 alpha)."""
    k_sq = grid.wavenumbers**2
    w = np.ones_like(k_sq)
    term = np.ones_like(k_sq)
    for _ in range(order):
        term = term * k_sq
        w = w + term
    return w


def _dv_tower(coeffs: np.ndarray, depth: int) -> list[np.ndarray]:
    """[f, d_dv f, ..., d_dv^depth f], each with an extended Hermite axis."""
    tower = [coeffs]
    for _ in range(depth):
        tower.append(hermite_shift_coeffs(tower[-1], "d_dv", extend=1))
    return tower


def _weighted_sq(grid: SpatialGrid, coeffs: np.ndarray, x_order: int) -> float:
    w = _x_weight(grid, x_order)
    return float(grid.volume * np.sum(w[:, None] * np.abs(coeffs) ** 2))


def _nu_sq_of(grid: SpatialGrid, coeffs: np.ndarray, x_order: int) -> float:
    """sum_{alpha <= x_order} || d_x^alpha . ||_nu^2 at fixed v-derivatives."""
    dv = hermite_shift_coeffs(coeffs, "d_dv", extend=1)
    vc = hermite_shift_coeffs(coeffs, "multiply_by_v", extend=1)
    return (
        _weighted_sq(grid, dv, x_order)
        + _weighted_sq(grid, coeffs, x_order)
        + _weighted_sq(grid, vc, x_order)
    )


def _mixed_sq(grid: SpatialGrid, coeffs: np.ndarray, k: int, nu: bool = False) -> float:
    """sum over |alpha| + |beta| <= k of the L^2 (or nu) norms squared."""
    total = 0.0
    for beta, cb in enumerate(_dv_tower(coeffs, k)):
        if nu:
            total += _nu_sq_of(grid, cb, k - beta)
        else:
            total += _weighted_sq(grid, cb, k - beta)
    return total


def _tensor_sq(grid: SpatialGrid, coeffs: np.ndarray, k_x: int, k_v: int) -> float:
    """sum over alpha <= k_x, beta <= k_v."""
    total = 0.0
    for cb in _dv_tower(coeffs, k_v):
        total += _weighted_sq(grid, cb, k_x)
    return total


def _spatial_sobolev_sq(grid: SpatialGrid, values: np.ndarray, order: int) -> float:
    c = np.fft.fft(values) / grid.n_x
    return float(grid.volume * np.sum(_x_weight(grid, order) * np.abs(c) ** 2))


def _unwrap(f) -> SpectralField:
    return f.spectral if isinstance(f, DistributionField) else f


def sobolev_norm(f, k_x: int, k_v: int = 0, grid: SpatialGrid | None = None) -> float:
    """Tensor Sobolev norm: sqrt of the sum over alpha <= k_x, beta <= k_v
    of ||d_x^alpha d_v^beta f||^2.

    Accepts a SpectralField/DistributionField, or a real spatial array
    (pass grid=...; k_v is then ignored).
    """
    if k_x < 0 or k_v < 0:
        raise ConfigurationError("Sobolev orders must be non-negative")
    if isinstance(f, np.ndarray):
        if grid is None:
            raise ConfigurationError("spatial-array input needs an explicit grid")
        return float(np.sqrt(_spatial_sobolev_sq(grid, f, k_x)))
    field = _unwrap(f)
    _require_1d(field.grid)
    return float(np.sqrt(_tensor_sq(field.grid, field.coeffs, k_x, k_v)))


def nu_norm(f) -> float:
    """Dissipation norm: sqrt(||d_v f||^2 + ||sqrt(1+v^2) f||^2)."""
    field = _unwrap(f)
    _require_1d(field.grid)
    return float(np.sqrt(_nu_sq_of(field.grid, field.coeffs, 0)))


# ---------------------------------------------------------------------------
# energy / dissipation functionals

def energy_functionals(state, k: int, epsilon: float) -> EnergyReport:
    """Headline energy and dissipation functionals at one sample.

    E_k = ||g||^2_{H^k_x L^2_v} + ||grad_v (I-P) g||^2_{H^{k-1}_{x,v}}
          + ||(a, b)||^2_{H^{k-1}_x}
    D_k = eps^-2 (||(I-P) g||^2 in the nu-weighted H^k_{x,v} + ||b||^2_{H^k_x})
          + eps^-1 ||(grad b, div b)||^2_{H^{k-1}_x}
          + ||grad a||^2_{H^{k-1}_x} + ||grad phi||^2_{H^k_x}
    """
    if k < 1:
        raise ConfigurationError(f"diagnostics order k must be >= 1, got {k}")
    g = state.g
    grid = g.grid
    _require_1d(grid)
    micro_c = project_micro(g).coeffs
    mac = moments(g)

    g_hk = _tensor_sq(grid, g.coeffs, k, 0)
    gradv_micro = _mixed_sq(grid, hermite_shift_coeffs(micro_c, "d_dv", extend=1), k - 1)
    ab = _spatial_sobolev_sq(grid, mac.a, k - 1) + sum(
        _spatial_sobolev_sq(grid, mac.b[i], k - 1) for i in range(grid.d)
    )

    micro_nu = _mixed_sq(grid, micro_c, k, nu=True) / epsilon**2
    b_hk = sum(_spatial_sobolev_sq(grid, mac.b[i], k) for i in range(grid.d)) / epsilon**2
    grad_b = sum(
        _spatial_sobolev_sq(grid, x_derivative(grid, mac.b[i]), k - 1) for i in range(grid.d)
    )
    div_b = sum(x_derivative(grid, mac.b[i], axis=i) for i in range(grid.d))
    grad_b = (grad_b + _spatial_sobolev_sq(grid, div_b, k - 1)) / epsilon
    grad_a = _spatial_sobolev_sq(grid, x_derivative(grid, mac.a), k - 1)
    grad_phi = sum(
        _spatial_sobolev_sq(grid, state.macro.grad_phi[i], k) for i in range(grid.d)
    )

    components = {
        "g_HkxL2v_sq": g_hk,
        "gradv_micro_Hkm1_sq": gradv_micro,
        "ab_Hkm1_sq": ab,
        "micro_nu_Hk_sq": micro_nu,
        "b_Hk_sq": b_hk,
        "grad_b_Hkm1_sq": grad_b,
        "grad_a_Hkm1_sq": grad_a,
        "grad_phi_Hk_sq": grad_phi,
    }
    mass_residual = float(np.abs(np.mean(mac.a)))
    lap_phi = x_derivative(grid, x_derivative(grid, state.macro.phi))
    denom = spatial_l2_norm(grid, mac.a) or 1.0
    poisson_residual = spatial_l2_norm(grid, lap_phi + mac.a) / denom

    return EnergyReport(
        time=float(state.time),
        E_k=g_hk + gradv_micro + ab,
        D_k=micro_nu + b_hk + grad_b + grad_a + grad_phi,
        components=components,
        mass_residual=mass_residual,
        poisson_residual=poisson_residual,
    )


def legacy_functionals(state, k: int, epsilon: float, weights: dict | None = None) -> dict:
    """The componentwise energy/dissipation family with free weights.

    The per-term weights and the three combination weights default to 1;
    they are non-constructive proof constants, so these values are
    reported diagnostics rather than pass/fail quantities.
    """
    if k < 1:
        raise ConfigurationError(f"diagnostics order k must be >= 1, got {k}")
    weights = weights or {}
    lam = (weights.get("lambda1", 1.0), weights.get("lambda2", 1.0), weights.get("lambda3", 1.0))
    c_ab = weights.get("C_alpha_beta", 1.0)

    g = state.g
    grid = g.grid
    _require_1d(grid)
    micro = project_micro(g)
    mac = moments(g)
    grad_phi = state.macro.grad_phi

    grad_phi_hk = sum(_spatial_sobolev_sq(grid, grad_phi[i], k) for i in range(grid.d))
    grad_phi_hkm1 = sum(_spatial_sobolev_sq(grid, grad_phi[i], k - 1) for i in range(grid.d))

    e_k1 = _tensor_sq(grid, g.coeffs, k, 0) + grad_phi_hk

    # one extra v-derivative (|beta'| = 1) on the microscopic part
    micro_dv = hermite_shift_coeffs(micro.coeffs, "d_dv", extend=1)
    e_k2 = c_ab * _mixed_sq(grid, micro_dv, k - 1)
    d_k2 = c_ab * _mixed_sq(grid, micro_dv, k - 1, nu=True) / epsilon**2

    ab_hkm1 = _spatial_sobolev_sq(grid, mac.a, k - 1) + sum(
        _spatial_sobolev_sq(grid, mac.b[i], k - 1) for i in range(grid.d)
    )
    gamma_micro = gamma_moment(micro)
    cross_gamma = 0.0
    cross_ab = 0.0
    dx = grid.cell_volume
    b0 = mac.b[0]
    for alpha in range(k):
        sym_grad_b = 2.0 * _nth_x_derivative(grid, x_derivative(grid, b0), alpha)
        cross_gamma += 2.0 * dx * float(
            np.sum(sym_grad_b * _nth_x_derivative(grid, gamma_micro, alpha))
        )
        cross_ab += epsilon * dx * float(
            np.sum(_nth_x_derivative(grid, x_derivative(grid, mac.a), alpha)
                   * _nth_x_derivative(grid, b0, alpha))
        )
    e_kf = ab_hkm1 + grad_phi_hkm1 + cross_gamma + cross_ab

    d_k1 = (_nu_sq_of(grid, micro.coeffs, k)
            + sum(_spatial_sobolev_sq(grid, mac.b[i], k) for i in range(grid.d))) / epsilon**2
    grad_b = sum(
        _spatial_sobolev_sq(grid, x_derivative(grid, mac.b[i]), k - 1) for i in range(grid.d)
    )
    div_b = sum(x_derivative(grid, mac.b[i], axis=i) for i in range(grid.d))
    d_kf = ((grad_b + _spatial_sobolev_sq(grid, div_b, k - 1)) / epsilon
            + _spatial_sobolev_sq(grid, x_derivative(grid, mac.a), k - 1)
            + grad_phi_hk)

    return {
        "E_kK1": e_k1,
        "E_kK2": e_k2,
        "E_kF": e_kf,
        "D_kK1": d_k1,
        "D_kK2": d_k2,
        "D_kF": d_kf,
        "E_total": lam[0] * e_k1 + lam[1] * e_k2 + lam[2] * e_kf,
        "D_total": d_k1 + d_k2 + d_kf,
        "cross_gamma": cross_gamma,
        "cross_ab": cross_ab,
    }


def _nth_x_derivative(grid: SpatialGrid, values: np.ndarray, order: int) -> np.ndarray:
    out = values
    for _ in range(order):
        out = x_derivative(grid, out)
    return out


# ---------------------------------------------------------------------------
# residuals of the auxiliary moment system

def moment_residuals(states, epsilon: float) -> dict:
    """Discrete residuals of the density/momentum/stress moment hierarchy.

    states: equally spaced consecutive samples.  Time derivatives are
    centered at interior samples; the endpoints are excluded.  Returns the
    L^2 norms of each equation residual at the interior times.
    """
    states = list(states)
    if len(states) < 3:
        raise ValueError("need at least 3 consecutive samples for time differencing")
    times = np.array([s.time for s in states])
    dts = np.diff(times)
    if not np.allclose(dts, dts[0], rtol=1e-9, atol=1e-14):
        raise ValueError("moment residuals require equally spaced samples")
    dt = float(dts[0])
    grid = states[0].g.grid
    _require_1d(grid)

    a_s, b_s, gam_s, r2_static, r3_static = [], [], [], [], []
    for s in states:
        mac = moments(s.g)
        micro = project_micro(s.g)
        a, b = mac.a, mac.b[0]
        dphi = s.macro.grad_phi[0]
        gamma = gamma_moment(micro)
        micro_dx = micro.coeffs * (1j * grid.wavenumbers)[:, None]
        v_micro_dx = micro.with_coeffs(hermite_shift_coeffs(micro_dx, "multiply_by_v"))
        gamma_vdx = gamma_moment(v_micro_dx)
        a_s.append(a)
        b_s.append(b)
        gam_s.append(gamma)
        r2_static.append(
            (x_derivative(grid, a) + dphi) / epsilon
            + b / epsilon**2
            + dealiased_product(grid, a, dphi) / epsilon
            + x_derivative(grid, gamma) / epsilon
        )
        r3_static.append(
            2.0 * x_derivative(grid, b) / epsilon
            + 2.0 * dealiased_product(grid, b, dphi) / epsilon
            + 2.0 * gamma / epsilon**2
            + gamma_vdx / epsilon
        )

    r1, r2, r3 = [], [], []
    for n in range(1, len(states) - 1):
        da = (a_s[n + 1] - a_s[n - 1]) / (2.0 * dt)
        db = (b_s[n + 1] - b_s[n - 1]) / (2.0 * dt)
        dgam = (gam_s[n + 1] - gam_s[n - 1]) / (2.0 * dt)
        r1.append(spatial_l2_norm(grid, da + x_derivative(grid, b_s[n]) / epsilon))
        r2.append(spatial_l2_norm(grid, db + r2_static[n]))
        r3.append(spatial_l2_norm(grid, dgam + r3_static[n]))

    return {
        "times": times[1:-1],
        "continuity": np.array(r1),
        "momentum": np.array(r2),
        "stress": np.array(r3),
    }


# ---------------------------------------------------------------------------
# kinetic-vs-fluid limit metrics

def limit_error(kinetic_traj, ddp_traj, k: int) -> dict:
    """Error metrics between a kinetic trajectory and the fluid reference.

    Returns sup-in-time L^2 moment and field errors, the time-integrated
    microscopic Sobolev norm (trapezoid over samples), and the pointwise
    sup of the reconstructed distribution against (1 + rho0) M over the
    collocation nodes (the grid analogue of the embedding argument).
    """
    kt = np.asarray(kinetic_traj.times)
    dtt = np.asarray(ddp_traj.times)
    if kt.shape != dtt.shape or not np.allclose(kt, dtt, rtol=1e-9, atol=1e-12):
        raise ValueError("trajectories must share their sampling times")
    grid = kinetic_traj.states[0].g.grid
    basis = kinetic_traj.states[0].g.basis
    _require_1d(grid)

    moment_errs, field_errs, micro_sq, point_errs = [], [], [], []
    sqrt_m = basis.maxwellian_sqrt()
    m_vals = sqrt_m**2
    for ks, ds in zip(kinetic_traj.states, ddp_traj.states):
        mac = moments(ks.g)
        moment_errs.append(spatial_l2_norm(grid, mac.a - ds.rho0))
        field_errs.append(np.sqrt(sum(
            spatial_l2_norm(grid, ks.macro.grad_phi[i] - ds.grad_phi0[i]) ** 2
            for i in range(grid.d)
        )))
        micro_c = ks.g.coeffs.copy()
        micro_c[..., 0] = 0.0  # (I - P0) g
        micro_sq.append(_mixed_sq(grid, micro_c, k))
        g_vals = inverse_transform(ks.g.spectral)
        f_vals = m_vals[None, :] + g_vals * sqrt_m[None, :]
        f_lim = (1.0 + ds.rho0)[:, None] * m_vals[None, :]
        point_errs.append(float(np.max(np.abs(f_vals - f_lim))))

    return {
        "sup_moment_error": float(np.max(moment_errs)),
        "sup_field_error": float(np.max(field_errs)),
        "micro_time_integral": float(np.trapezoid(micro_sq, kt)) if kt.size > 1 else 0.0,
        "pointwise_sup_error": float(np.max(point_errs)),
    }
