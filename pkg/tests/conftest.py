import numpy as np
import pytest

from vpfp.operators import DistributionField
from vpfp.spectral import HermiteBasis, SpatialGrid, SpectralField

ACCEPTANCE_LINES = []


def record_acceptance(number, description, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    suffix = f"  ({detail})" if detail else ""
    ACCEPTANCE_LINES.append(f"criterion {number:2d} [{status}] {description}{suffix}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def fd_collision_inner_product(basis, n, j):
    """<L psi_n, psi_j> by finite differences on a uniform v-grid.

    Independent of the spectral diagonal: works with u = g / sqrt(M) and the
    conservative three-point stencil for (M u')', then integrates
    -(M u')' u_j dv by trapezoid.
    """
    v = np.linspace(-12.0, 12.0, 100001)
    h = v[1] - v[0]
    m_half = np.exp(-0.5 * ((v[:-1] + v[1:]) / 2) ** 2) / np.sqrt(2 * np.pi)
    sqrt_m = np.exp(-0.25 * v**2) * (2 * np.pi) ** (-0.25)
    table = basis.functions(n_levels=max(n, j) + 1, v=v)
    u_n = table[:, n] / sqrt_m
    u_j = table[:, j] / sqrt_m
    flux_div = np.zeros_like(v)
    flux_div[1:-1] = (m_half[1:] * (u_n[2:] - u_n[1:-1])
                      - m_half[:-1] * (u_n[1:-1] - u_n[:-2])) / h**2
    return np.trapezoid(-flux_div * u_j, v)


@pytest.fixture(scope="session")
def grid():
    return SpatialGrid(n_x=32)


@pytest.fixture(scope="session")
def basis():
    return HermiteBasis(n_v=16)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_distribution(rng, grid, basis, neutral=True, band_limit=None):
    """Random real-valued distribution field with Hermitian Fourier symmetry."""
    n_keep = band_limit if band_limit is not None else basis.n_v
    values = rng.standard_normal((grid.n_x, basis.n_v))
    values[:, n_keep:] = 0.0
    coeffs = np.fft.fft(values, axis=0) / grid.n_x
    if neutral:
        coeffs[0, 0] = 0.0
    return DistributionField(SpectralField(grid, basis, coeffs))


def basis_element(grid, basis, m, n, amplitude=1.0):
    """Real field amplitude * cos(m x) * psi_n (or psi_n alone for m = 0)."""
    f = DistributionField.zeros(grid, basis)
    if m == 0:
        f.coeffs[0, n] = amplitude
    else:
        f.coeffs[m % grid.n_x, n] = amplitude / 2.0
        f.coeffs[-m % grid.n_x, n] = amplitude / 2.0
    return f
