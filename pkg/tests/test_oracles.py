import math

import numpy as np
import pytest

from pinnlab import problems
from pinnlab.errors import CoincidentPoints, NonConvergence
from pinnlab.oracles import (
    GreenSeriesConfig,
    burgers_cole_hopf,
    burgers_fd,
    compute_c1_c2,
    green_rectangle,
    normal_derivative,
    poisson_fd_solve,
    theoretical_weight,
)
from pinnlab.oracles.poisson_fd import DISK, EXCLUDED, OUTER

P1 = problems.get_problem("poisson-1").domain


# finite-difference Poisson --------------------------------------------------

@pytest.fixture(scope="module")
def fd64():
    return poisson_fd_solve(P1, 1 / 64)


def test_fd_solution_bounded_and_symmetric(fd64):
    v = fd64.masked_values()
    live = v[~np.isnan(v)]
    assert live.min() >= 0.0 and live.max() <= 1.0
    # the geometry is symmetric under both reflections and the diagonal swap
    assert np.allclose(v, v[::-1, :], equal_nan=True, atol=1e-12)
    assert np.allclose(v, v[:, ::-1], equal_nan=True, atol=1e-12)
    assert np.allclose(v, v.T, equal_nan=True, atol=1e-12)


def test_fd_masks(fd64):
    assert np.all(fd64.mask[0, :] == OUTER) and np.all(fd64.mask[:, -1] == OUTER)
    i = int(np.argmin(np.abs(fd64.x - 0.25)))
    assert fd64.mask[i, i] == EXCLUDED  # disk centre
    assert np.any(fd64.mask == DISK)
    assert fd64.residual_norm < 1e-10


def test_fd_grid_convergence(fd64):
    fine = poisson_fd_solve(P1, 1 / 128)
    c = np.array([[0.0, 0.0]])
    assert abs(fd64.interpolate(c)[0] - fine.interpolate(c)[0]) < 5e-3


def test_fd_constant_boundary_gives_constant():
    dom = problems.Domain("rect2d", ((-1, 1), (-1, 1)))
    sol = poisson_fd_solve(dom, 1 / 16, outer_value=0.7)
    assert np.allclose(sol.values, 0.7, atol=1e-10)


def test_fd_rejects_bad_spacing_and_budget():
    with pytest.raises(ValueError):
        poisson_fd_solve(P1, 0.3)
    with pytest.raises(NonConvergence):
        poisson_fd_solve(P1, 1 / 64, max_sweeps=10)


# Burgers ---------------------------------------------------------------------

def test_cole_hopf_initial_condition_and_boundary():
    x = np.linspace(-1, 1, 9)
    assert np.allclose(burgers_cole_hopf(x, 0.0), -np.sin(np.pi * x))
    assert abs(burgers_cole_hopf(1.0, 0.5)) < 1e-10 and abs(burgers_cole_hopf(-1.0, 0.5)) < 1e-10


def test_cole_hopf_odd_symmetry():
    x = np.linspace(0.05, 0.95, 7)
    for t in (0.1, 0.5, 1.0):
        assert np.allclose(burgers_cole_hopf(-x, t), -burgers_cole_hopf(x, t), atol=1e-12)


def test_cole_hopf_order_convergence():
    x = np.linspace(-0.9, 0.9, 13)
    a = burgers_cole_hopf(x, 0.6, quad_order=64)
    b = burgers_cole_hopf(x, 0.6, quad_order=128)
    # the steep front at x = 0 dominates the quadrature error
    assert np.max(np.abs(a - b)) < 1e-4


def test_cole_hopf_matches_fd():
    times = [0.25, 0.5, 0.75, 1.0]
    x, u = burgers_fd(times, n_cells=2048)
    for k, t in enumerate(times):
        assert np.max(np.abs(burgers_cole_hopf(x, t) - u[k])) < 1e-3


def test_cole_hopf_validation():
    with pytest.raises(ValueError):
        burgers_cole_hopf(0.0, 0.5, quad_order=16)
    with pytest.raises(ValueError):
        burgers_cole_hopf(0.0, -0.1)


# Green's function --------------------------------------------------------------

def test_green_symmetric_and_positive():
    x, xi = np.array([0.1, -0.2]), np.array([-0.3, 0.25])
    a = green_rectangle(x, xi, 1.0, 80)
    assert a > 0 and abs(a - green_rectangle(xi, x, 1.0, 80)) < 1e-14


def test_green_log_singularity():
    # G ~ -log(r) / (2 pi) near the diagonal
    x = np.zeros(2)
    r1, r2 = 1e-2, 1e-3
    g1 = green_rectangle(x, np.array([r1, 0.0]), 1.0, 2000)
    g2 = green_rectangle(x, np.array([r2, 0.0]), 1.0, 2000)
    assert abs((g2 - g1) - math.log(r1 / r2) / (2 * math.pi)) < 0.02


def test_green_errors():
    with pytest.raises(CoincidentPoints):
        green_rectangle(np.zeros(2), np.zeros(2), 1.0, 10)
    with pytest.raises(ValueError):
        green_rectangle(np.array([0.6, 0.0]), np.zeros(2) + 0.1, 1.0, 10)


def test_poisson_kernel_integrates_to_one():
    # harmonic measure: the normal derivative integrates to 1 over the boundary
    x = np.array([0.13, -0.21])
    z, w = np.polynomial.legendre.leggauss(400)
    s, w = 0.5 * z, 0.5 * w
    h = np.full_like(s, 0.5)
    edges = [np.column_stack(p) for p in ((s, h), (s, -h), (h, s), (-h, s))]
    total = sum(np.sum(w * normal_derivative(x, e, 1.0, 80)) for e in edges)
    assert abs(total - 1.0) < 1e-8


def test_normal_derivative_matches_differences():
    x = np.array([0.1, 0.05])
    xi = np.array([0.2, 0.5])
    h = 1e-4
    inner = np.array([0.2, 0.5 - h])
    # G vanishes on the edge, so dG/dn ~ -G(x, xi - h n) / h to first order
    fd = green_rectangle(x, inner, 1.0, 400) / h
    assert abs(normal_derivative(x, xi[None, :], 1.0, 400)[0] - fd) / fd < 1e-2


def test_c1_truncation_convergence():
    c40, _ = compute_c1_c2(1.0, GreenSeriesConfig(M=40))
    c80, _ = compute_c1_c2(1.0, GreenSeriesConfig(M=80))
    assert abs(c40 - c80) / c80 < 0.01


def test_c1_c2_scaling():
    # C1 ~ s^4 and C2 ~ s^2 on a square of side s
    c1a, c2a = compute_c1_c2(1.0, GreenSeriesConfig(M=40))
    c1b, c2b = compute_c1_c2(2.0, GreenSeriesConfig(M=40))
    assert abs(c1b / c1a - 16) < 1e-9 and abs(c2b / c2a - 4) < 1e-9


def test_quadrature_agrees_with_series():
    cfg = GreenSeriesConfig(M=30, inner=48, outer=6, edge=96)
    s = compute_c1_c2(1.0, cfg)
    q = compute_c1_c2(1.0, GreenSeriesConfig(M=30, inner=48, outer=6, edge=96, method="quadrature"))
    assert abs(s[0] - q[0]) / s[0] < 1e-3 and abs(s[1] - q[1]) / s[1] < 1e-3


def test_theoretical_weight_rejects_bad_side():
    with pytest.raises(ValueError):
        theoretical_weight(0.0)
    with pytest.raises(ValueError):
        compute_c1_c2(-1.0)
