"""Dirichlet Green's function of the Laplacian on a square and the loss-weight
constants built from it.

For the square of side ``s`` centred at the origin the orthonormal
eigenfunctions are

    phi_mn(x) = (2/s) sin(m pi (x1 + s/2) / s) sin(n pi (x2 + s/2) / s),
    lambda_mn = pi^2 (m^2 + n^2) / s^2,

and ``G(x, xi) = sum phi_mn(x) phi_mn(xi) / lambda_mn``. The constants are

    C1 = int_Omega sqrt(|Omega| int_Omega G(x, xi)^2 dxi) dx,
    C2 = int_Omega sqrt(|dOmega| int_dOmega (grad_xi G . n)^2 ds) dx.

Both inner integrals have closed forms (orthonormality), which is what
:func:`compute_c1_c2` uses by default. ``M`` truncates the double series for
``G``; the single series for the normal derivative converges exponentially
inside the square and is summed until its terms drop below roundoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from pinnlab.errors import CoincidentPoints


@dataclass(frozen=True)
class GreenSeriesConfig:
    M: int = 80  # modes per axis
    inner: int = 64  # quadrature nodes per axis for the inner area integral
    outer: int = 128  # nodes per axis for the outer integral over x
    edge: int = 256  # nodes per edge for the inner boundary integral
    method: str = "series"  # "series" (closed-form inner integrals) | "quadrature"

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if min(self.inner, self.outer, self.edge) < 1:
            raise ValueError("quadrature sizes must be >= 1")
        if self.method not in ("series", "quadrature"):
            raise ValueError(f"unknown method {self.method!r}")


def _check_side(side):
    if not side > 0:
        raise ValueError(f"side must be positive, got {side}")


def _sines(coord, side, M, first=1):
    """``sin(k pi (c + s/2) / s)`` for k = first..M, shape (len(coord), M - first + 1)."""
    k = np.arange(first, M + 1)
    return np.sin(np.pi * np.outer(np.asarray(coord, dtype=np.float64) + side / 2, k) / side)


def _eigvals(side, M):
    k = np.arange(1, M + 1)
    return np.pi ** 2 * (k[:, None] ** 2 + k[None, :] ** 2) / side ** 2


def green_rectangle(x, xi, side: float, M: int) -> float:
    """Truncated eigenfunction series for ``G(x, xi)``."""
    _check_side(side)
    x, xi = np.asarray(x, dtype=np.float64), np.asarray(xi, dtype=np.float64)
    if math.dist(x, xi) < 1e-9:
        raise CoincidentPoints("G is singular at x = xi")
    for p in (x, xi):
        if np.any(np.abs(p) >= side / 2):
            raise ValueError(f"point {p} is not strictly inside the square of side {side}")
    a = _sines([x[0], xi[0]], side, M)
    b = _sines([x[1], xi[1]], side, M)
    terms = np.outer(a[0] * a[1], b[0] * b[1]) / _eigvals(side, M)
    return float((2.0 / side) ** 2 * terms.sum())


def green_matrix(x, xi, side: float, M: int) -> np.ndarray:
    """``G(x_p, xi_q)`` for point sets ``x`` (P, 2) and ``xi`` (Q, 2)."""
    x, xi = np.atleast_2d(x), np.atleast_2d(xi)
    ax, bx = _sines(x[:, 0], side, M), _sines(x[:, 1], side, M)
    ai, bi = _sines(xi[:, 0], side, M), _sines(xi[:, 1], side, M)
    inv = 1.0 / _eigvals(side, M)
    # sum_mn ax[p,m] bx[p,n] ai[q,m] bi[q,n] / lambda_mn
    left = np.einsum("pm,pn,mn->pmn", ax, bx, inv).reshape(len(x), -1)
    right = np.einsum("qm,qn->qmn", ai, bi).reshape(len(xi), -1)
    return (2.0 / side) ** 2 * left @ right.T


def _edge_modes(dist, side, M):
    """Modes needed for the per-edge series at distance ``dist`` from the
    edge: terms decay like ``exp(-2 k pi dist / s)``, cut below 1e-31."""
    return max(M, math.ceil(36.0 * side / (math.pi * max(dist, 1e-12 * side))))


def _edge_profile(u, side, M, first=1):
    """``sinh(k pi u / s) / sinh(k pi)`` for k = first..M, overflow-free."""
    k = np.arange(first, M + 1)
    r = np.outer(np.asarray(u, dtype=np.float64) / side, k) * np.pi
    kp = np.pi * k
    return np.exp(r - kp) * (-np.expm1(-2.0 * r)) / (-np.expm1(-2.0 * kp))


def normal_derivative(x, xi, side: float, M: int) -> np.ndarray:
    """``|d G(x, xi) / d n_xi|`` at boundary points ``xi`` (the Poisson kernel).

    Summing the eigenfunction series over the mode along the edge normal in
    closed form leaves a single sine series per edge that converges
    exponentially for ``x`` inside.
    """
    x = np.asarray(x, dtype=np.float64)
    xi = np.atleast_2d(np.asarray(xi, dtype=np.float64))
    h = side / 2
    out = np.empty(len(xi))
    for q, (e1, e2) in enumerate(xi):
        if abs(e2 - h) < 1e-12:  # top: distance along x1, height x2
            along, xa, xn = e1, x[0], x[1] + h
        elif abs(e2 + h) < 1e-12:
            along, xa, xn = e1, x[0], h - x[1]
        elif abs(e1 - h) < 1e-12:
            along, xa, xn = e2, x[1], x[0] + h
        elif abs(e1 + h) < 1e-12:
            along, xa, xn = e2, x[1], h - x[0]
        else:
            raise ValueError(f"{(e1, e2)} is not on the boundary")
        k = _edge_modes(side - xn, side, M)
        s_xi = _sines([along], side, k)[0]
        s_x = _sines([xa], side, k)[0]
        out[q] = abs((2.0 / side) * np.sum(s_xi * s_x * _edge_profile([xn], side, k)[0]))
    return out


def _inner_area_series(xs, ys, side, M):
    """``int G(x, xi)^2 dxi`` on the tensor grid xs x ys (Parseval)."""
    a2 = _sines(xs, side, M) ** 2
    b2 = _sines(ys, side, M) ** 2
    return (2.0 / side) ** 2 * a2 @ (1.0 / _eigvals(side, M) ** 2) @ b2.T


def _inner_boundary_series(xs, ys, side, M, chunk=2048):
    """``int (dG/dn)^2 ds`` summed over the four edges (Parseval per edge)."""
    h = side / 2
    xs, ys = np.asarray(xs, dtype=np.float64), np.asarray(ys, dtype=np.float64)
    K = _edge_modes(h - max(np.abs(xs).max(), np.abs(ys).max()), side, M)
    total = np.zeros((len(xs), len(ys)))
    for first in range(1, K + 1, chunk):
        last = min(K, first + chunk - 1)
        sx2 = _sines(xs, side, last, first) ** 2
        sy2 = _sines(ys, side, last, first) ** 2
        vert = _edge_profile(ys + h, side, last, first) ** 2 + _edge_profile(h - ys, side, last, first) ** 2
        horiz = _edge_profile(xs + h, side, last, first) ** 2 + _edge_profile(h - xs, side, last, first) ** 2
        total += sx2 @ vert.T + horiz @ sy2.T
    return (2.0 / side) * total


def _gauss(n, lo, hi):
    z, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (hi - lo) * z + 0.5 * (hi + lo), 0.5 * (hi - lo) * w


def _inner_quadrature(xs, ys, side, cfg):
    """Both inner integrals by tensor-product Gauss-Legendre over xi."""
    h = side / 2
    qi, wi = _gauss(cfg.inner, -h, h)
    QX, QY = np.meshgrid(qi, qi, indexing="ij")
    nodes = np.column_stack([QX.ravel(), QY.ravel()])
    wa = np.outer(wi, wi).ravel()
    qe, we = _gauss(cfg.edge, -h, h)
    ones = np.full_like(qe, h)
    edges = np.concatenate([
        np.column_stack([qe, ones]), np.column_stack([qe, -ones]),
        np.column_stack([ones, qe]), np.column_stack([-ones, qe]),
    ])
    ws = np.tile(we, 4)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    area = np.empty(len(pts))
    bnd = np.empty(len(pts))
    for p, x in enumerate(pts):
        d = np.hypot(nodes[:, 0] - x[0], nodes[:, 1] - x[1])
        live = d >= 1e-9  # the truncated series is finite, but skip exact hits anyway
        g = green_matrix(x[None, :], nodes[live], side, cfg.M)[0]
        area[p] = np.sum(wa[live] * g * g)
        dn = normal_derivative(x, edges, side, cfg.M)
        bnd[p] = np.sum(ws * dn * dn)
    return area.reshape(X.shape), bnd.reshape(X.shape)


def compute_c1_c2(side: float, cfg: GreenSeriesConfig = GreenSeriesConfig()):
    """``(C1, C2)`` on the square of the given side centred at the origin."""
    _check_side(side)
    h = side / 2
    xs, wo = _gauss(cfg.outer, -h, h)
    if cfg.method == "series":
        area = _inner_area_series(xs, xs, side, cfg.M)
        bnd = _inner_boundary_series(xs, xs, side, cfg.M)
    else:
        area, bnd = _inner_quadrature(xs, xs, side, cfg)
    w2 = np.outer(wo, wo)
    c1 = float(np.sum(w2 * np.sqrt(side * side * area)))
    c2 = float(np.sum(w2 * np.sqrt(4.0 * side * bnd)))
    return c1, c2


def theoretical_weight(side: float, cfg: GreenSeriesConfig = GreenSeriesConfig()) -> float:
    """PDE-loss weight ``C1^2 / C2^2`` with the boundary weight set to 1."""
    c1, c2 = compute_c1_c2(side, cfg)
    return c1 * c1 / (c2 * c2)
