"""Finite-difference reference for Laplace's equation on a perforated square.

5-point Laplacian on a uniform node grid, Dirichlet data on the outer square
and on the disks, red-black SOR with the optimal relaxation factor. Disks are
staircased: nodes within half a cell of a circle or inside it are held at
the disk value, so the discrete boundary is the set of nodes nearest it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import njit

from pinnlab.errors import NonConvergence
from pinnlab.problems import Domain

INSIDE, OUTER, DISK, EXCLUDED = 0, 1, 2, 3


@dataclass(frozen=True, eq=False)
class FdSolution:
    h: float
    x: np.ndarray  # node coordinates along axis 0
    y: np.ndarray
    values: np.ndarray  # indexed [i, j] -> (x[i], y[j])
    mask: np.ndarray
    residual_norm: float
    iterations: int

    def masked_values(self) -> np.ndarray:
        """Values with NaN at nodes strictly inside a disk."""
        out = self.values.copy()
        out[self.mask == EXCLUDED] = np.nan
        return out

    def interpolate(self, pts) -> np.ndarray:
        """Bilinear interpolation; nodes inside disks carry the disk value."""
        pts = np.asarray(pts, dtype=np.float64)
        fx = (pts[:, 0] - self.x[0]) / self.h
        fy = (pts[:, 1] - self.y[0]) / self.h
        i = np.clip(np.floor(fx).astype(int), 0, len(self.x) - 2)
        j = np.clip(np.floor(fy).astype(int), 0, len(self.y) - 2)
        a, b = fx - i, fy - j
        v = self.values
        return ((1 - a) * (1 - b) * v[i, j] + a * (1 - b) * v[i + 1, j]
                + (1 - a) * b * v[i, j + 1] + a * b * v[i + 1, j + 1])


@njit(cache=True)
def _sor(u, inside, omega, sweeps):
    nx, ny = u.shape
    for _ in range(sweeps):
        for color in range(2):
            for i in range(1, nx - 1):
                for j in range(1 + (i + color + 1) % 2, ny - 1, 2):
                    if inside[i, j]:
                        r = 0.25 * (u[i - 1, j] + u[i + 1, j] + u[i, j - 1] + u[i, j + 1]) - u[i, j]
                        u[i, j] += omega * r


@njit(cache=True)
def _residual(u, inside):
    nx, ny = u.shape
    worst = 0.0
    for i in range(1, nx - 1):
        for j in range(1, ny - 1):
            if inside[i, j]:
                r = abs(u[i - 1, j] + u[i + 1, j] + u[i, j - 1] + u[i, j + 1] - 4.0 * u[i, j])
                if r > worst:
                    worst = r
    return worst


def _grid_count(lo, hi, h):
    n = (hi - lo) / h
    k = round(n)
    if k < 2 or abs(n - k) > 1e-9 * max(1.0, n):
        raise ValueError(f"h={h} does not divide the interval [{lo}, {hi}] evenly")
    return k


def poisson_fd_solve(domain: Domain, h: float, tol: float = 1e-10, outer_value: float = 1.0,
                     disk_value: float = 0.0, max_sweeps: int | None = None) -> FdSolution:
    """Solve ``Laplace u = 0`` with ``u = outer_value`` on the square and
    ``u = disk_value`` on the disks.

    ``tol`` bounds the max-norm of the h^2-scaled 5-point residual.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if domain.kind == "spacetime1d":
        raise ValueError("the finite-difference oracle handles spatial 2-D domains only")
    (x0, x1), (y0, y1) = domain.bounds
    nx, ny = _grid_count(x0, x1, h), _grid_count(y0, y1, h)
    x = x0 + h * np.arange(nx + 1)
    y = y0 + h * np.arange(ny + 1)
    X, Y = np.meshgrid(x, y, indexing="ij")

    mask = np.full(X.shape, INSIDE, dtype=np.int8)
    mask[[0, -1], :] = OUTER
    mask[:, [0, -1]] = OUTER
    in_disk = np.zeros(X.shape, dtype=bool)
    for d in domain.disks:
        in_disk |= np.hypot(X - d.center[0], Y - d.center[1]) <= d.radius + 0.5 * h
    # disk nodes next to a free node carry the boundary condition
    free = ~in_disk & (mask == INSIDE)
    near = np.zeros_like(free)
    near[1:, :] |= free[:-1, :]
    near[:-1, :] |= free[1:, :]
    near[:, 1:] |= free[:, :-1]
    near[:, :-1] |= free[:, 1:]
    mask[in_disk] = EXCLUDED
    mask[in_disk & near] = DISK

    u = np.zeros(X.shape)
    u[mask == OUTER] = outer_value
    u[in_disk] = disk_value
    u[free] = 0.5 * (outer_value + disk_value)

    n = max(nx, ny)
    omega = 2.0 / (1.0 + math.sin(math.pi / n))
    budget = max_sweeps if max_sweeps is not None else 200 * n + 2000
    done, res = 0, math.inf
    while done < budget:
        chunk = min(50, budget - done)
        _sor(u, free, omega, chunk)
        done += chunk
        res = _residual(u, free)
        if res < tol:
            return FdSolution(h, x, y, u, mask, res, done)
    raise NonConvergence(f"SOR residual {res:.3e} after {done} sweeps (tol {tol:.1e})")


@lru_cache(maxsize=8)
def poisson_reference(domain: Domain, n: int = 512, outer_value: float = 1.0,
                      disk_value: float = 0.0, tol: float = 1e-10) -> FdSolution:
    """Cached solve on an ``n x n`` cell grid of ``domain``."""
    h = (domain.bounds[0][1] - domain.bounds[0][0]) / n
    return poisson_fd_solve(domain, h, tol, outer_value, disk_value)
