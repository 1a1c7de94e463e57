"""Independent reference solutions and the Green's-function weight constants."""

from pinnlab.oracles.burgers import burgers_cole_hopf, burgers_fd
from pinnlab.oracles.green import (
    GreenSeriesConfig,
    compute_c1_c2,
    green_rectangle,
    normal_derivative,
    theoretical_weight,
)
from pinnlab.oracles.poisson_fd import FdSolution, poisson_fd_solve, poisson_reference

__all__ = [
    "FdSolution",
    "GreenSeriesConfig",
    "burgers_cole_hopf",
    "burgers_fd",
    "compute_c1_c2",
    "green_rectangle",
    "normal_derivative",
    "poisson_fd_solve",
    "poisson_reference",
    "theoretical_weight",
]
