"""IMEX time integration of the scaled kinetic system.

Per spatial Fourier mode the two epsilon-singular linear terms -- streaming
(i k / eps) V with V the tridiagonal velocity-multiplication matrix, and the
collision multiplier diag(n) / eps^2 -- are treated implicitly; the field
coupling terms are explicit with the beginning-of-step potential.  The
implicit blocks are constant per (scheme stage, dt), so their inverses are
built once and reused.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .operators import (
    DistributionField,
    MacroFields,
    moments,
    solve_poisson,
    vpfp_rhs,
)
from .spectral import (
    ConfigurationError,
    HermiteBasis,
    SpatialGrid,
    SpectralField,
    inverse_transform,
)

log = logging.getLogger(__name__)

__all__ = [
    "SolverConfig",
    "KineticState",
    "Trajectory",
    "VpfpStepper",
    "make_initial_data",
    "step",
    "run",
]

SCHEMES = ("imex_euler", "imex_bdf2")
NEUTRALITY_TOL = 1e-13


@dataclass(frozen=True)
class SolverConfig:
    """Discretization and stepping parameters for one kinetic run."""

    epsilon: float
    t_final: float
    n_x: int = 64
    n_v: int = 64
    d: int = 1
    length: float = 2.0 * math.pi
    dt_max: float = 5.0e-3
    cfl_scale: float = 0.5
    scheme: str = "imex_euler"
    poisson_correction: bool = False
    # test hooks
    transport_enabled: bool = True
    fields_enabled: bool = True

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 1.0:
            raise ConfigurationError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if self.dt_max <= 0 or self.cfl_scale <= 0:
            raise ConfigurationError("dt_max and cfl_scale must be positive")
        if self.t_final < 0:
            raise ConfigurationError(f"t_final must be non-negative, got {self.t_final}")
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")

    @property
    def dt_nominal(self) -> float:
        return min(self.dt_max, self.cfl_scale * self.epsilon)

    def make_grid(self) -> SpatialGrid:
        return SpatialGrid(n_x=self.n_x, length=self.length, d=self.d)

    def make_basis(self) -> HermiteBasis:
        return HermiteBasis(n_v=self.n_v)


@dataclass(frozen=True)
class KineticState:
    """Solution sample: perturbation g with Poisson-consistent macro fields."""

    time: float
    g: DistributionField
    macro: MacroFields


@dataclass
class Trajectory:
    """Sampled states of one run, equally spaced in time."""

    times: np.ndarray
    states: list


def _macro_with_field(g: DistributionField) -> MacroFields:
    mac = moments(g)
    phi, grad_phi = solve_poisson(g.grid, mac.a)
    return MacroFields(a=mac.a, b=mac.b, phi=phi, grad_phi=grad_phi)


def make_initial_data(grid: SpatialGrid, basis: HermiteBasis, rho_profile,
                      amplitude: float = 1.0,
                      micro_perturbation: DistributionField | None = None) -> KineticState:
    """Well-prepared initial state g = amplitude * profile(x) * sqrt(M).

    rho_profile is a callable of x (or an array on the grid nodes) with zero
    spatial mean; an optional microscopic component must already lie in the
    range of (I - P).  The reconstructed distribution must be positive at
    every collocation node.
    """
    if grid.d != 1:
        raise NotImplementedError("initial data construction is implemented for d = 1")
    profile = rho_profile(grid.nodes) if callable(rho_profile) else np.asarray(rho_profile, float)
    a = amplitude * profile
    mean = float(np.mean(a))
    scale = float(np.max(np.abs(a))) or 1.0
    if abs(mean) > 1e-12 * max(1.0, scale):
        raise ValueError(f"density profile must have zero spatial mean; got mean {mean:.3e}")
    a = a - mean  # remove rounding-level residual

    coeffs = np.zeros(grid.spatial_shape + (basis.n_v,), dtype=complex)
    coeffs[..., 0] = np.fft.fft(a) / grid.n_x
    coeffs[(0,) * grid.d + (0,)] = 0.0  # neutrality: exact zero mean
    if micro_perturbation is not None:
        mc = micro_perturbation.coeffs
        macro_part = float(np.max(np.abs(mc[..., : 1 + grid.d])))
        if macro_part > 1e-12:
            raise ValueError(
                f"micro perturbation must be (I-P)-projected; macro content {macro_part:.3e}"
            )
        coeffs = coeffs + mc

    g = DistributionField(SpectralField(grid, basis, coeffs))
    g_vals = inverse_transform(g.spectral)
    sqrt_m = basis.maxwellian_sqrt()
    f_vals = sqrt_m**2 + g_vals * sqrt_m
    f_min = float(np.min(f_vals))
    if f_min <= 0.0:
        raise ValueError(f"reconstructed distribution is not positive; minimum value {f_min:.3e}")

    state = KineticState(time=0.0, g=g, macro=_macro_with_field(g))
    from .diagnostics import energy_functionals  # deferred: diagnostics imports operators

    report = energy_functionals(state, k=1, epsilon=1.0)
    log.info("initial data: E_1(0) = %.6e (smallness hypothesis is the user's knob)", report.E_k)
    return state


class VpfpStepper:
    """Holds the per-mode implicit factorizations for a fixed config and dt."""

    def __init__(self, cfg: SolverConfig, dt: float):
        if cfg.d != 1:
            raise NotImplementedError("the kinetic stepper is implemented for d = 1")
        self.cfg = cfg
        self.dt = float(dt)
        self.grid = cfg.make_grid()
        self.basis = cfg.make_basis()
        self._inverses: dict[float, np.ndarray] = {}

    # -- implicit blocks ----------------------------------------------------
    def _implicit_inverse(self, dt_eff: float) -> np.ndarray:
        """(I + dt_eff * S_m)^-1 for every Fourier mode m, shape (n_x, n_v, n_v)."""
        inv = self._inverses.get(dt_eff)
        if inv is not None:
            return inv
        cfg = self.cfg
        n_v = self.basis.n_v
        n = np.arange(n_v)
        lam = n / cfg.epsilon**2
        if not cfg.transport_enabled:
            # diagonal: exact reciprocal amplification 1 / (1 + dt n / eps^2)
            inv = np.zeros((self.grid.n_x, n_v, n_v))
            inv[:, n, n] = 1.0 / (1.0 + dt_eff * lam)
            inv = inv.astype(complex)
        else:
            v_mat = np.zeros((n_v, n_v))
            off = np.sqrt(n[1:])
            v_mat[n[1:], n[1:] - 1] = off
            v_mat[n[1:] - 1, n[1:]] = off
            k = self.grid.wavenumbers
            mats = (np.eye(n_v)[None, :, :]
                    + dt_eff * (1j * k / cfg.epsilon)[:, None, None] * v_mat[None, :, :]
                    + dt_eff * np.diag(lam)[None, :, :])
            inv = np.linalg.inv(mats)
            # k = 0 block is diagonal; keep its inverse exact so the
            # neutral mode and the pure-damping amplification are bitwise
            inv[0] = 0.0
            inv[0, n, n] = 1.0 / (1.0 + dt_eff * lam)
        if not np.all(np.isfinite(inv)):
            raise FloatingPointError("implicit solve breakdown: non-finite factor")
        self._inverses[dt_eff] = inv
        return inv

    def _apply_inverse(self, dt_eff: float, coeffs: np.ndarray) -> np.ndarray:
        inv = self._implicit_inverse(dt_eff)
        return np.einsum("mij,mj->mi", inv, coeffs)

    # -- explicit part ------------------------------------------------------
    def explicit_coeffs(self, g: DistributionField, macro: MacroFields) -> np.ndarray:
        """Field-coupling terms of the right-hand side (lagged potential)."""
        if not self.cfg.fields_enabled:
            return np.zeros_like(g.coeffs)
        rhs = vpfp_rhs(g, macro, self.cfg.epsilon,
                       transport=False, fields=True, collision=False)
        return rhs.coeffs

    # -- stepping -----------------------------------------------------------
    def _finish(self, coeffs: np.ndarray, time: float, mass_before: complex) -> KineticState:
        if not np.all(np.isfinite(coeffs)):
            raise FloatingPointError(f"non-finite state detected at t = {time:.6g}")
        mass_after = coeffs[(0,) * self.grid.d + (0,)]
        drift = abs(mass_after - mass_before)
        if drift > NEUTRALITY_TOL * (1.0 + abs(mass_before)):
            raise AssertionError(
                f"Hermite-0 spatial mean changed by {drift:.3e} during a step"
            )
        g = DistributionField(SpectralField(self.grid, self.basis, coeffs))
        return KineticState(time=time, g=g, macro=_macro_with_field(g))

    def step_euler(self, state: KineticState) -> KineticState:
        dt = self.dt
        mass0 = state.g.coeffs[(0,) * self.grid.d + (0,)]
        expl = self.explicit_coeffs(state.g, state.macro)
        coeffs = self._apply_inverse(dt, state.g.coeffs + dt * expl)
        if self.cfg.poisson_correction:
            g_star = DistributionField(SpectralField(self.grid, self.basis, coeffs))
            expl = self.explicit_coeffs(state.g, _macro_with_field(g_star))
            coeffs = self._apply_inverse(dt, state.g.coeffs + dt * expl)
        return self._finish(coeffs, state.time + dt, mass0)

    def step_bdf2(self, state: KineticState, prev: KineticState,
                  expl: np.ndarray, expl_prev: np.ndarray) -> KineticState:
        dt = self.dt
        mass0 = state.g.coeffs[(0,) * self.grid.d + (0,)]
        rhs = (4.0 * state.g.coeffs - prev.g.coeffs + 2.0 * dt * (2.0 * expl - expl_prev)) / 3.0
        coeffs = self._apply_inverse(2.0 * dt / 3.0, rhs)
        return self._finish(coeffs, state.time + dt, mass0)


def step(state: KineticState, cfg: SolverConfig) -> KineticState:
    """Advance one time step of length cfg.dt_nominal (IMEX Euler semantics;
    the multistep scheme needs history and is driven through run)."""
    return VpfpStepper(cfg, cfg.dt_nominal).step_euler(state)


def _fit_dt(dt_nominal: float, interval: float) -> tuple[float, int]:
    n = max(1, math.ceil(interval / dt_nominal - 1e-12))
    return interval / n, n


def run(initial: KineticState, cfg: SolverConfig, observers=(),
        sample_interval: float | None = None) -> Trajectory:
    """Integrate to t_final, sampling every sample_interval.

    The step size divides the sampling interval exactly so that samples
    land on exact multiples; observers are invoked on each sampled state.
    Deterministic for a fixed config.
    """
    if initial.g.grid.n_x != cfg.n_x or initial.g.basis.n_v != cfg.n_v:
        raise ConfigurationError(
            f"initial state discretization ({initial.g.grid.n_x}, {initial.g.basis.n_v}) "
            f"does not match config ({cfg.n_x}, {cfg.n_v})"
        )
    if cfg.t_final == 0.0:
        for obs in observers:
            obs(initial)
        return Trajectory(times=np.array([initial.time]), states=[initial])

    if sample_interval is None or sample_interval > cfg.t_final:
        sample_interval = cfg.t_final
    n_samples = max(1, round(cfg.t_final / sample_interval))
    sample_interval = cfg.t_final / n_samples
    dt, steps_per_sample = _fit_dt(cfg.dt_nominal, sample_interval)
    stepper = VpfpStepper(cfg, dt)

    use_bdf2 = cfg.scheme == "imex_bdf2"
    state = initial
    prev = None
    expl = expl_prev = None
    times = [initial.time]
    states = [initial]
    for obs in observers:
        obs(initial)
    for s in range(n_samples):
        for _ in range(steps_per_sample):
            if use_bdf2:
                expl = stepper.explicit_coeffs(state.g, state.macro)
                if prev is None:
                    new = stepper.step_euler(state)
                else:
                    new = stepper.step_bdf2(state, prev, expl, expl_prev)
                prev, expl_prev = state, expl
                state = new
            else:
                state = stepper.step_euler(state)
        state = replace(state, time=initial.time + (s + 1) * sample_interval)
        times.append(state.time)
        states.append(state)
        for obs in observers:
            obs(state)
    return Trajectory(times=np.array(times), states=states)
