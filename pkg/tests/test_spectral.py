"""Spectral substrate: transforms, derivatives, velocity recurrences.

The recurrences are checked against the Gauss-Hermite quadrature oracle,
which integrates products of basis functions exactly and never touches the
coefficient-space implementation.
"""

import numpy as np
import pytest

from vpfp.spectral import (
    ConfigurationError,
    SpatialGrid,
    forward_transform,
    hermite_shift_apply,
    inverse_transform,
    l2_norm,
    quadrature_oracle_moment,
    spatial_derivative,
)

from conftest import basis_element, random_distribution


class TestGridAndBasis:
    def test_grid_invariants(self, grid):
        assert grid.nodes[0] == 0.0
        assert len(grid.nodes) == grid.n_x
        spacing = np.diff(grid.nodes)
        assert np.allclose(spacing, spacing[0])
        assert grid.nodes[-1] < grid.length  # endpoint-exclusive

    @pytest.mark.parametrize("bad", [3, 5, 2])
    def test_grid_rejects_bad_sizes(self, bad):
        with pytest.raises(ConfigurationError):
            SpatialGrid(n_x=bad)

    def test_orthonormality_under_quadrature(self, basis):
        gram = basis.analysis @ basis.synthesis
        assert np.max(np.abs(gram - np.eye(basis.n_v))) < 1e-12

    def test_psi0_is_sqrt_maxwellian(self, basis):
        v = basis.quad_nodes
        expected = (2 * np.pi) ** (-0.25) * np.exp(-(v**2) / 4)
        assert np.allclose(basis.synthesis[:, 0], expected, atol=1e-14)
        # int psi_0 sqrt(M) dv = 1
        total = np.sum(basis.quad_weights * basis.synthesis[:, 0] ** 2)
        assert abs(total - 1.0) < 1e-12


class TestTransforms:
    def test_constant_maxwellian_field(self, grid, basis):
        values = np.ones((grid.n_x, 1)) * basis.maxwellian_sqrt()[None, :]
        f = forward_transform(grid, basis, values)
        assert abs(f.coeffs[0, 0] - 1.0) < 1e-12
        rest = f.coeffs.copy()
        rest[0, 0] = 0.0
        assert np.max(np.abs(rest)) < 1e-12

    def test_cos_psi1_lands_on_two_modes(self, grid, basis):
        x = grid.nodes
        values = np.cos(x)[:, None] * basis.synthesis[:, 1][None, :]
        f = forward_transform(grid, basis, values)
        assert abs(f.coeffs[1, 1] - 0.5) < 1e-12
        assert abs(f.coeffs[-1, 1] - 0.5) < 1e-12
        masked = f.coeffs.copy()
        masked[1, 1] = masked[-1, 1] = 0.0
        assert np.max(np.abs(masked)) < 1e-12

    def test_round_trip_band_limited(self, grid, basis, rng):
        g = random_distribution(rng, grid, basis, neutral=False)
        values = inverse_transform(g.spectral)
        back = forward_transform(grid, basis, values)
        scale = np.max(np.abs(g.coeffs))
        assert np.max(np.abs(back.coeffs - g.coeffs)) < 1e-12 * scale

    def test_round_trip_against_direct_evaluation(self, grid, basis, rng):
        # oracle: evaluate the basis expansion sum at the nodes directly
        g = random_distribution(rng, grid, basis, neutral=False)
        x = grid.nodes
        wavenumbers = 2 * np.pi * np.fft.fftfreq(grid.n_x, grid.length / grid.n_x)
        modes = np.exp(1j * np.outer(x, wavenumbers))
        direct = np.real(modes @ g.coeffs) @ basis.synthesis.T
        assert np.allclose(direct, inverse_transform(g.spectral), atol=1e-11)

    def test_shape_mismatch_rejected(self, grid, basis):
        with pytest.raises(ConfigurationError):
            forward_transform(grid, basis, np.zeros((grid.n_x, 3)))

    def test_parseval(self, grid, basis, rng):
        g = random_distribution(rng, grid, basis, neutral=False)
        values = inverse_transform(g.spectral)
        dx = grid.length / grid.n_x
        quad_sq = np.sum(basis.quad_weights * values**2) * dx
        coeff_sq = l2_norm(g.spectral) ** 2
        assert abs(quad_sq - coeff_sq) < 1e-10 * coeff_sq


class TestSpatialDerivative:
    def test_sin_to_cos(self, grid, basis):
        x = grid.nodes
        values = np.sin(x)[:, None] * basis.maxwellian_sqrt()[None, :]
        f = forward_transform(grid, basis, values)
        df = spatial_derivative(f)
        expected = np.cos(x)[:, None] * basis.maxwellian_sqrt()[None, :]
        assert np.allclose(inverse_transform(df), expected, atol=1e-12)

    def test_constant_to_zero(self, grid, basis):
        f = basis_element(grid, basis, 0, 0)
        assert np.max(np.abs(spatial_derivative(f.spectral).coeffs)) == 0.0

    def test_cos2x(self, grid, basis):
        x = grid.nodes
        values = np.cos(2 * x)[:, None] * basis.maxwellian_sqrt()[None, :]
        df = spatial_derivative(forward_transform(grid, basis, values))
        expected = -2 * np.sin(2 * x)[:, None] * basis.maxwellian_sqrt()[None, :]
        assert np.allclose(inverse_transform(df), expected, atol=1e-12)

    def test_bad_axis(self, grid, basis):
        f = basis_element(grid, basis, 0, 0)
        with pytest.raises(ConfigurationError):
            spatial_derivative(f.spectral, axis=1)

    def test_hermitian_symmetry_preserved(self, grid, basis, rng):
        # drop the Nyquist mode: ik maps its real coefficient to a purely
        # imaginary one, which no real field can carry
        g = random_distribution(rng, grid, basis)
        g.coeffs[grid.n_x // 2, :] = 0.0
        df = spatial_derivative(g.spectral)
        assert df.hermitian_symmetry_error() < 1e-13

    def test_commutes_with_shifts(self, grid, basis, rng):
        g = random_distribution(rng, grid, basis).spectral
        for kind in ("multiply_by_v", "d_dv", "raising"):
            one = spatial_derivative(hermite_shift_apply(g, kind))
            two = hermite_shift_apply(spatial_derivative(g), kind)
            assert np.max(np.abs(one.coeffs - two.coeffs)) < 1e-13


class TestHermiteShifts:
    """Each recurrence is compared against the quadrature moment oracle."""

    def shift_oracle(self, grid, basis, f, kind):
        """Project the analytically shifted point values onto each psi_k."""
        values = inverse_transform(f.spectral)
        v = basis.quad_nodes
        if kind == "multiply_by_v":
            shifted = values * v[None, :]
        elif kind == "raising":
            shifted = values * (v / 2)[None, :] - self.dv_pointwise(basis, f)
        else:
            shifted = self.dv_pointwise(basis, f)
        out = np.zeros((grid.n_x, basis.n_v))
        for k in range(basis.n_v):
            psi_k = basis.synthesis[:, k]
            out[:, k] = quadrature_oracle_moment(grid, basis, shifted, lambda _v, p=psi_k: p)
        return out

    @staticmethod
    def dv_pointwise(basis, f):
        """d/dv of the expansion, evaluated exactly from the coefficients
        via the derivative of the Hermite functions (chain rule on the
        tabulated recurrence with one extra level)."""
        ext = basis.functions(n_levels=basis.n_v + 1)
        v = basis.quad_nodes
        coeffs_x = np.fft.ifft(f.coeffs * f.grid.n_x, axis=0).real
        # psi_n' = (sqrt(n) psi_{n-1} - sqrt(n+1) psi_{n+1}) / 2  evaluated pointwise
        n = np.arange(basis.n_v)
        dpsi = 0.5 * (np.sqrt(n)[None, :] * np.pad(ext[:, :-2], ((0, 0), (1, 0)))[:, : basis.n_v]
                      - np.sqrt(n + 1)[None, :] * ext[:, 1 : basis.n_v + 1])
        return coeffs_x @ dpsi.T

    @pytest.mark.parametrize("kind,n_in,expected", [
        ("multiply_by_v", 0, {1: 1.0}),
        ("raising", 0, {1: 1.0}),
        ("d_dv", 0, {1: -0.5}),
        ("multiply_by_v", 2, {1: np.sqrt(2.0), 3: np.sqrt(3.0)}),
    ])
    def test_single_mode_against_oracle(self, grid, basis, kind, n_in, expected):
        f = basis_element(grid, basis, 0, n_in)
        shifted = hermite_shift_apply(f.spectral, kind)
        oracle = self.shift_oracle(grid, basis, f, kind)
        for n_out, val in expected.items():
            assert abs(shifted.coeffs[0, n_out] - val) < 1e-10
            assert abs(oracle[0, n_out] - val) < 1e-10
        assert np.max(np.abs(shifted.coeffs[0].real - oracle[0])) < 1e-10

    @pytest.mark.parametrize("kind", ["multiply_by_v", "d_dv", "raising"])
    def test_all_band_limited_modes_match_oracle(self, grid, basis, kind, rng):
        # content below the top mode, so truncation plays no role
        g = random_distribution(rng, grid, basis, band_limit=basis.n_v - 1)
        shifted = hermite_shift_apply(g.spectral, kind)
        oracle = self.shift_oracle(grid, basis, g, kind)
        recon = inverse_transform(shifted)
        oracle_recon = oracle @ basis.synthesis.T
        assert np.max(np.abs(recon - oracle_recon)) < 1e-10

    def test_unknown_kind(self, grid, basis):
        f = basis_element(grid, basis, 0, 0)
        with pytest.raises(ConfigurationError):
            hermite_shift_apply(f.spectral, "lowering")

    def test_truncation_drops_top_spill(self, grid, basis):
        f = basis_element(grid, basis, 0, basis.n_v - 1)
        shifted = hermite_shift_apply(f.spectral, "raising")
        assert np.max(np.abs(shifted.coeffs)) == 0.0  # spill beyond n_v dropped


class TestQuadratureOracle:
    def test_maxwellian_mass(self, grid, basis):
        values = np.ones((grid.n_x, 1)) * basis.maxwellian_sqrt()[None, :]
        sqrt_m = lambda v: (2 * np.pi) ** (-0.25) * np.exp(-(v**2) / 4)
        moment = quadrature_oracle_moment(grid, basis, values, sqrt_m)
        assert np.allclose(moment, 1.0, atol=1e-12)

    def test_unit_variance(self, grid, basis):
        v = basis.quad_nodes
        sqrt_m = (2 * np.pi) ** (-0.25) * np.exp(-(v**2) / 4)
        values = np.ones((grid.n_x, 1)) * (v * sqrt_m)[None, :]
        moment = quadrature_oracle_moment(
            grid, basis, values, lambda v: v * (2 * np.pi) ** (-0.25) * np.exp(-(v**2) / 4))
        assert np.allclose(moment, 1.0, atol=1e-12)

    def test_stress_weight_on_psi2(self, grid, basis):
        # Gaussian moment identity: E[v^4] - 2 E[v^2] + 1 = 2, normalized by
        # the psi_2 coefficient sqrt(2)
        values = np.ones((grid.n_x, 1)) * basis.synthesis[:, 2][None, :]
        weight = lambda v: (v**2 - 1) * (2 * np.pi) ** (-0.25) * np.exp(-(v**2) / 4)
        moment = quadrature_oracle_moment(grid, basis, values, weight)
        assert np.allclose(moment, np.sqrt(2.0), atol=1e-12)
