"""Error metrics, gradient histograms and evaluation grids."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pinnlab import network
from pinnlab.errors import ZeroReference
from pinnlab.oracles import burgers_cole_hopf, poisson_reference
from pinnlab.problems import PdeProblem


def _pair(pred, ref):
    pred = np.asarray(pred, dtype=np.float64).ravel()
    ref = np.asarray(ref, dtype=np.float64).ravel()
    if pred.shape != ref.shape:
        raise ValueError(f"length mismatch: {pred.size} predictions vs {ref.size} references")
    if pred.size == 0:
        raise ValueError("empty input")
    return pred, ref


def relative_l2(pred, ref) -> float:
    pred, ref = _pair(pred, ref)
    denom = np.linalg.norm(ref)
    if denom == 0:
        raise ZeroReference("reference is identically zero")
    return float(np.linalg.norm(pred - ref) / denom)


def mean_absolute_error(pred, ref) -> float:
    pred, ref = _pair(pred, ref)
    return float(np.mean(np.abs(pred - ref)))


@dataclass(frozen=True)
class HistogramSpec:
    bins: int = 51
    range: tuple[float, float] | None = None  # None: symmetric, 99th percentile of |g|
    group: str = "pde"

    def __post_init__(self):
        if self.bins < 1:
            raise ValueError("bins must be >= 1")


def gradient_histogram(grad, spec: HistogramSpec = HistogramSpec()):
    """``(edges, counts)``; entries outside the range land in the end bins."""
    g = np.asarray(grad, dtype=np.float64).ravel()
    if not np.all(np.isfinite(g)):
        raise ValueError("gradient has non-finite entries")
    if spec.range is None:
        r = float(np.percentile(np.abs(g), 99)) if g.size else 0.0
        if r == 0.0:
            r = float(np.abs(g).max()) or 1.0
        lo, hi = -r, r
    else:
        lo, hi = spec.range
    edges = np.linspace(lo, hi, spec.bins + 1)
    counts, _ = np.histogram(np.clip(g, lo, hi), bins=edges)
    return edges, counts


def central_fraction(edges, counts) -> float:
    """Share of entries in the bin containing zero."""
    k = int(np.clip(np.searchsorted(edges, 0.0, side="right") - 1, 0, len(counts) - 1))
    return float(counts[k] / counts.sum())


@dataclass(frozen=True, eq=False)
class EvalGrid:
    points: np.ndarray
    reference: np.ndarray

    def __post_init__(self):
        if len(self.points) != len(self.reference):
            raise ValueError("points and reference values differ in length")

    def score(self, params, config) -> tuple[float, float]:
        """``(mae, rel_l2)`` of the network on this grid."""
        pred = network.predict(params, config, self.points)
        return mean_absolute_error(pred, self.reference), relative_l2(pred, self.reference)


def grid_points(problem: PdeProblem) -> np.ndarray:
    dom = problem.domain
    (x0, x1), (y0, y1) = dom.bounds
    if dom.kind == "spacetime1d":
        X, T = np.meshgrid(np.linspace(x0, x1, 256), np.linspace(y0, y1, 100), indexing="ij")
        return np.column_stack([X.ravel(), T.ravel()])
    X, Y = np.meshgrid(np.linspace(x0, x1, 101), np.linspace(y0, y1, 101), indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    return pts[dom.outside_disks(pts)]


def reference_values(problem: PdeProblem, points, fd_cells: int = 512) -> np.ndarray:
    if problem.exact is not None:
        return problem.exact_at(points)
    if problem.kind == "poisson":
        probe = np.zeros((1, 2))
        values = {tag: float(g(probe)[0]) for tag, g in problem.boundary_targets.items()}
        disk = {v for tag, v in values.items() if tag != "outer"} or {0.0}
        if len(disk) > 1:
            raise ValueError("the finite-difference reference needs one common disk value")
        sol = poisson_reference(problem.domain, fd_cells, values["outer"], disk.pop())
        return sol.interpolate(points)
    if problem.kind == "burgers":
        return burgers_cole_hopf(points[:, 0], points[:, 1], nu=problem.params["nu"])
    raise ValueError(f"no reference solution for {problem.name}")


def eval_grid(problem: PdeProblem, fd_cells: int = 512) -> EvalGrid:
    pts = grid_points(problem)
    return EvalGrid(pts, reference_values(problem, pts, fd_cells))
