"""Viscous Burgers reference: Cole-Hopf integrals and a finite-difference solve.

Both assume ``u_t + u u_x = nu u_xx`` on ``[-1, 1]`` with ``u(x, 0) = -sin(pi x)``
and ``u(+-1, t) = 0``.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from numba import njit
from scipy.linalg import eigh_tridiagonal
from scipy.special import logsumexp

from pinnlab.errors import QuadratureUnderflow
from pinnlab.problems import BURGERS_NU

DEFAULT_ORDER = 64


@lru_cache(maxsize=16)
def _hermite(order: int):
    """Gauss-Hermite nodes and log-weights (Golub-Welsch).

    Weights beyond double range underflow to zero and their nodes are
    dropped; they sit where ``exp(-z^2)`` is below 1e-308.
    """
    off = np.sqrt(0.5 * np.arange(1, order))
    z, vecs = eigh_tridiagonal(np.zeros(order), off)
    with np.errstate(divide="ignore"):
        logw = 0.5 * math.log(math.pi) + 2.0 * np.log(np.abs(vecs[0]))
    keep = np.isfinite(logw)
    return z[keep], logw[keep]


def burgers_cole_hopf(x, t, quad_order: int = DEFAULT_ORDER, nu: float = BURGERS_NU):
    """Exact solution via Cole-Hopf with Gauss-Hermite quadrature.

    With ``eta = sqrt(4 nu t) z`` the heat kernel becomes the Hermite weight:

        u = -sum w_k sin(pi y_k) f(y_k) / sum w_k f(y_k),   y_k = x - eta_k,
        f(y) = exp(-cos(pi y) / (2 pi nu)).

    Sums are formed in log space since ``f`` spans ``exp(+-1/(2 pi nu))``.
    Accepts scalars or broadcastable arrays.
    """
    if quad_order < 32:
        raise ValueError("quad_order must be >= 32")
    x, t = np.broadcast_arrays(np.asarray(x, dtype=np.float64), np.asarray(t, dtype=np.float64))
    shape = x.shape
    x, t = x.ravel(), t.ravel()
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    z, logw = _hermite(quad_order)
    out = -np.sin(math.pi * x)
    live = t > 0
    if np.any(live):
        xs, ts = x[live][:, None], t[live][:, None]
        y = xs - np.sqrt(4.0 * nu * ts) * z[None, :]
        logterm = logw[None, :] - np.cos(math.pi * y) / (2.0 * math.pi * nu)
        den = logsumexp(logterm, axis=1)
        if not np.all(np.isfinite(den)):
            raise QuadratureUnderflow("every quadrature weight underflowed")
        num, sign = logsumexp(logterm, axis=1, b=np.sin(math.pi * y), return_sign=True)
        out[live] = -sign * np.exp(num - den)
    return float(out[0]) if shape == () else out.reshape(shape)


@njit(cache=True)
def _rhs(u, nu, dx, out):
    # fourth-order central differences, periodic; flux form for the advection
    n = u.shape[0]
    c1 = 1.0 / (12.0 * dx)
    c2 = nu / (12.0 * dx * dx)
    for i in range(n):
        im2, im1, ip1, ip2 = (i - 2) % n, (i - 1) % n, (i + 1) % n, (i + 2) % n
        flux = (0.5 * u[im2] * u[im2] - 8.0 * 0.5 * u[im1] * u[im1]
                + 8.0 * 0.5 * u[ip1] * u[ip1] - 0.5 * u[ip2] * u[ip2]) * c1
        lap = (-u[im2] + 16.0 * u[im1] - 30.0 * u[i] + 16.0 * u[ip1] - u[ip2]) * c2
        out[i] = lap - flux


@njit(cache=True)
def _rk4(u, nu, dx, dt, steps):
    n = u.shape[0]
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    for _ in range(steps):
        _rhs(u, nu, dx, k1)
        for i in range(n):
            tmp[i] = u[i] + 0.5 * dt * k1[i]
        _rhs(tmp, nu, dx, k2)
        for i in range(n):
            tmp[i] = u[i] + 0.5 * dt * k2[i]
        _rhs(tmp, nu, dx, k3)
        for i in range(n):
            tmp[i] = u[i] + dt * k3[i]
        _rhs(tmp, nu, dx, k4)
        for i in range(n):
            u[i] += dt * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0


def burgers_fd(times, n_cells: int = 4096, nu: float = BURGERS_NU, cfl: float = 0.2):
    """Method-of-lines solve on nodes ``x_i = -1 + 2 i / n_cells``.

    The odd, 2-periodic initial data keeps the solution odd about ``x = +-1``,
    so the Dirichlet problem equals the periodic one on ``[-1, 1)``.
    Returns ``(x, u)`` with ``u[k]`` the solution at ``times[k]``.
    """
    times = np.asarray(times, dtype=np.float64)
    if np.any(np.diff(times) < 0) or np.any(times < 0):
        raise ValueError("times must be non-negative and sorted")
    dx = 2.0 / n_cells
    x = -1.0 + dx * np.arange(n_cells)
    u = -np.sin(math.pi * x)
    # diffusion limit for RK4 with the 4th-order stencil, advection limit |u| <= 1
    dt_max = cfl * min(dx * dx / nu, dx)
    out = np.empty((len(times), n_cells))
    now = 0.0
    for k, target in enumerate(times):
        span = target - now
        if span > 0:
            steps = max(1, math.ceil(span / dt_max))
            _rk4(u, nu, dx, span / steps, steps)
            now = target
        out[k] = u
    return x, out
