"""Benchmark PDEs: geometry, samplers, residual operators and exact solutions.

Residual operators are written against the common jet interface
(``val``, ``grad[i]``, ``hess[i][j]``, ``laplacian()``), so the same code
builds a scalar-tape graph for one point or an array-tape graph for a batch.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from pinnlab import rng
from pinnlab.autodiff.arrays import JetLayout
from pinnlab.errors import RejectionBudgetExceeded

KINDS = ("rect2d", "rect2d_minus_disks", "spacetime1d")


@dataclass(frozen=True)
class Disk:
    center: tuple[float, float]
    radius: float


@dataclass(frozen=True)
class Domain:
    kind: str
    bounds: tuple[tuple[float, float], ...]
    disks: tuple[Disk, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown domain kind {self.kind!r}")
        object.__setattr__(self, "bounds", tuple((float(lo), float(hi)) for lo, hi in self.bounds))
        if len(self.bounds) != 2:
            raise ValueError("only two-dimensional domains are supported")
        for lo, hi in self.bounds:
            if not lo < hi:
                raise ValueError(f"empty interval [{lo}, {hi}]")
        if self.disks and self.kind != "rect2d_minus_disks":
            raise ValueError(f"{self.kind} domains cannot have holes")
        (x0, x1), (y0, y1) = self.bounds
        for k, a in enumerate(self.disks):
            (cx, cy), r = a.center, a.radius
            if r <= 0 or cx - r <= x0 or cx + r >= x1 or cy - r <= y0 or cy + r >= y1:
                raise ValueError(f"disk {a} is not strictly inside {self.bounds}")
            for b in self.disks[k + 1:]:
                if math.dist(a.center, b.center) <= a.radius + b.radius:
                    raise ValueError(f"disks {a} and {b} overlap")

    def scaled(self, t: float) -> Domain:
        """The same shape with every length divided by ``t``."""
        return Domain(
            self.kind,
            tuple((lo / t, hi / t) for lo, hi in self.bounds),
            tuple(Disk((a.center[0] / t, a.center[1] / t), a.radius / t) for a in self.disks),
        )

    @property
    def dim(self) -> int:
        return len(self.bounds)

    def outside_disks(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=np.float64)
        keep = np.ones(len(pts), dtype=bool)
        for a in self.disks:
            d2 = (pts[:, 0] - a.center[0]) ** 2 + (pts[:, 1] - a.center[1]) ** 2
            keep &= d2 >= a.radius ** 2
        return keep

    def contains(self, pts) -> np.ndarray:
        """Strict interior test."""
        pts = np.asarray(pts, dtype=np.float64)
        inside = np.ones(len(pts), dtype=bool)
        for i, (lo, hi) in enumerate(self.bounds):
            inside &= (pts[:, i] > lo) & (pts[:, i] < hi)
        for a in self.disks:
            d2 = (pts[:, 0] - a.center[0]) ** 2 + (pts[:, 1] - a.center[1]) ** 2
            inside &= d2 > a.radius ** 2
        return inside

    def components(self) -> list[tuple[str, float]]:
        """Boundary components as ``(tag, 1-D measure)``."""
        (x0, x1), (y0, y1) = self.bounds
        if self.kind == "spacetime1d":
            # axes are (x, t); no condition at the final time
            return [("initial", x1 - x0), ("left", y1 - y0), ("right", y1 - y0)]
        comps = [("outer", 2.0 * ((x1 - x0) + (y1 - y0)))]
        comps += [(f"disk{k}", 2.0 * math.pi * a.radius) for k, a in enumerate(self.disks)]
        return comps

    def sample_component(self, tag: str, n: int, gen: np.random.Generator) -> np.ndarray:
        (x0, x1), (y0, y1) = self.bounds
        if tag == "initial":
            return np.column_stack([gen.uniform(x0, x1, n), np.full(n, y0)])
        if tag in ("left", "right"):
            x = x0 if tag == "left" else x1
            return np.column_stack([np.full(n, x), gen.uniform(y0, y1, n)])
        if tag == "outer":
            w, h = x1 - x0, y1 - y0
            s = gen.uniform(0.0, 2.0 * (w + h), n)
            pts = np.empty((n, 2))
            for lo, hi, fn in (
                (0.0, w, lambda u: (x0 + u, np.full_like(u, y0))),
                (w, w + h, lambda u: (np.full_like(u, x1), y0 + u)),
                (w + h, 2 * w + h, lambda u: (x1 - u, np.full_like(u, y1))),
                (2 * w + h, 2 * (w + h), lambda u: (np.full_like(u, x0), y1 - u)),
            ):
                m = (s >= lo) & (s < hi)
                pts[m, 0], pts[m, 1] = fn(s[m] - lo)
            return pts
        if tag.startswith("disk"):
            a = self.disks[int(tag[4:])]
            theta = gen.uniform(0.0, 2.0 * math.pi, n)
            return np.column_stack([
                a.center[0] + a.radius * np.cos(theta),
                a.center[1] + a.radius * np.sin(theta),
            ])
        raise KeyError(f"unknown boundary component {tag!r}")


def allocate(measures, n: int) -> list[int]:
    """Split ``n`` points proportionally to ``measures`` by largest remainder,
    then lift empty components to one point (taken from the largest)."""
    k = len(measures)
    if n < k:
        raise ValueError(f"need at least {k} points for {k} boundary components, got {n}")
    measures = np.asarray(measures, dtype=np.float64)
    share = n * measures / measures.sum()
    counts = np.floor(share).astype(int)
    rest = n - counts.sum()
    order = np.argsort(-(share - counts), kind="stable")
    counts[order[:rest]] += 1
    for i in np.flatnonzero(counts == 0):
        counts[np.argmax(counts)] -= 1
        counts[i] = 1
    return [int(c) for c in counts]


def sample_interior(domain: Domain, n: int, seed: int) -> np.ndarray:
    """``n`` uniform points strictly inside ``domain`` (rejection for holes)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    gen = rng.generator(seed, rng.INTERIOR)
    lo = np.array([b[0] for b in domain.bounds])
    hi = np.array([b[1] for b in domain.bounds])
    out, have, drawn = [], 0, 0
    batch = max(2 * n, 1024)
    while have < n:
        cand = gen.uniform(lo, hi, size=(batch, domain.dim))
        keep = cand[domain.contains(cand)]
        drawn += batch
        have += len(keep)
        out.append(keep)
        if have < 0.01 * drawn:
            raise RejectionBudgetExceeded(
                f"only {have} of {drawn} candidates fell inside the domain"
            )
    return np.concatenate(out)[:n]


@dataclass(frozen=True)
class BoundarySample:
    points: np.ndarray
    tags: np.ndarray


def sample_boundary(domain: Domain, n: int, seed: int) -> BoundarySample:
    """``n`` boundary points split across components by arc length."""
    gen = rng.generator(seed, rng.BOUNDARY)
    comps = domain.components()
    counts = allocate([m for _, m in comps], n)
    pts, tags = [], []
    for (tag, _), c in zip(comps, counts):
        pts.append(domain.sample_component(tag, c, gen))
        tags += [tag] * c
    return BoundarySample(np.concatenate(pts), np.array(tags))


# residual operators ---------------------------------------------------------

def poisson_residual(jet):
    return jet.laplacian()


def helmholtz_source(x, k, a1, a2):
    x = np.asarray(x, dtype=np.float64)
    c = k * k - (a1 * a1 + a2 * a2) * math.pi ** 2
    return c * np.sin(a1 * math.pi * x[..., 0]) * np.sin(a2 * math.pi * x[..., 1])


def helmholtz_exact(x, a1, a2):
    x = np.asarray(x, dtype=np.float64)
    return np.sin(a1 * math.pi * x[..., 0]) * np.sin(a2 * math.pi * x[..., 1])


def helmholtz_residual(jet, x, k, a1, a2):
    f = helmholtz_source(x, k, a1, a2)
    if np.ndim(f) == 0:
        f = float(f)
    return jet.laplacian() + (k * k) * jet.val - f


def burgers_residual(jet, nu):
    """``u_t + u u_x - nu u_xx`` with axes ordered ``(x, t)``."""
    return jet.grad[1] + jet.val * jet.grad[0] - nu * jet.hess[0][0]


BURGERS_NU = 0.01 / math.pi


@dataclass(frozen=True)
class PdeProblem:
    """A PDE posed on ``base_domain`` shrunk by ``scale``.

    Boundary targets and the exact solution are functions of base
    coordinates; the ``*_at`` helpers compose them with ``x -> scale * x``.
    """

    name: str
    base_domain: Domain
    kind: str  # "poisson" | "helmholtz" | "burgers"
    params: dict = field(default_factory=dict)
    boundary_targets: dict = field(default_factory=dict)  # tag -> g(x_base)
    exact: Callable | None = None
    order: int = 2
    homogeneous: bool = False
    scale: float = 1.0
    activation: str = "tanh"

    @property
    def domain(self) -> Domain:
        return self.base_domain if self.scale == 1.0 else self.base_domain.scaled(self.scale)

    @property
    def boundary_sets(self):
        return list(self.boundary_targets.items())

    @property
    def layout(self) -> JetLayout:
        if self.kind == "burgers":
            return JetLayout.pairs(2, [(0, 0)])
        return JetLayout.laplacian(2)

    def residual(self, jet, x):
        p = self.params
        if self.kind == "poisson":
            return poisson_residual(jet)
        if self.kind == "helmholtz":
            return helmholtz_residual(jet, x, p["k"], p["a1"], p["a2"])
        if self.kind == "burgers":
            return burgers_residual(jet, p["nu"])
        raise ValueError(f"unknown residual kind {self.kind!r}")

    def boundary_value(self, tags, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64) * self.scale
        out = np.empty(len(x))
        tags = np.asarray(tags)
        for tag, g in self.boundary_targets.items():
            m = tags == tag
            if m.any():
                out[m] = g(x[m])
        return out

    def exact_at(self, x):
        if self.exact is None:
            return None
        return self.exact(np.asarray(x, dtype=np.float64) * self.scale)


def scale_domain(problem: PdeProblem, t: float, name: str | None = None) -> PdeProblem:
    """Pose ``problem`` on coordinates ``x' = x / t``."""
    if t <= 0:
        raise ValueError("scale factor must be positive")
    return dataclasses.replace(problem, scale=problem.scale * t, name=name or problem.name)


@dataclass(frozen=True)
class SampleSet:
    interior: np.ndarray
    boundary: np.ndarray
    boundary_tags: np.ndarray
    boundary_targets: np.ndarray
    seed: int


def sample_problem(problem: PdeProblem, n_interior: int, n_boundary: int, seed: int) -> SampleSet:
    dom = problem.domain
    inner = sample_interior(dom, n_interior, seed)
    bnd = sample_boundary(dom, n_boundary, seed)
    targets = problem.boundary_value(bnd.tags, bnd.points)
    return SampleSet(inner, bnd.points, bnd.tags, targets, seed)


# registry -------------------------------------------------------------------

def _const(v):
    return lambda x: np.full(len(x), float(v))


def make_poisson8() -> PdeProblem:
    disks = tuple(Disk((sx * 2.0, sy * 2.0), 1.0) for sx in (-1, 1) for sy in (-1, 1))
    dom = Domain("rect2d_minus_disks", ((-4.0, 4.0), (-4.0, 4.0)), disks)
    targets = {"outer": _const(1.0)}
    targets.update({f"disk{k}": _const(0.0) for k in range(len(disks))})
    return PdeProblem("poisson-8", dom, "poisson", {}, targets, None, order=2, homogeneous=True)


def make_helmholtz(k: float, a1: float, a2: float, b: float, name: str) -> PdeProblem:
    dom = Domain("rect2d", ((-b / 2, b / 2), (-b / 2, b / 2)))
    exact = lambda x: helmholtz_exact(x, a1, a2)  # noqa: E731
    return PdeProblem(
        name, dom, "helmholtz", {"k": k, "a1": a1, "a2": a2, "b": b},
        {"outer": exact}, exact, order=2, homogeneous=False, activation="sin",
    )


def make_burgers() -> PdeProblem:
    dom = Domain("spacetime1d", ((-1.0, 1.0), (0.0, 1.0)))
    targets = {
        "initial": lambda x: -np.sin(math.pi * x[:, 0]),
        "left": _const(0.0),
        "right": _const(0.0),
    }
    return PdeProblem("burgers-1", dom, "burgers", {"nu": BURGERS_NU}, targets, None, order=2)


PROBLEMS: dict[str, Callable[[], PdeProblem]] = {
    "poisson-8": make_poisson8,
    "poisson-1": lambda: scale_domain(make_poisson8(), 8.0, name="poisson-1"),
    "helmholtz-1": lambda: make_helmholtz(1.0, 1.0, 1.0, 1.0, "helmholtz-1"),
    "helmholtz-0.2": lambda: make_helmholtz(1.0, 10.0, 10.0, 0.2, "helmholtz-0.2"),
    "burgers-1": make_burgers,
}

# Display names as printed in the result tables.
TABLE_NAMES = {
    "poisson-8": "Poisson-8",
    "poisson-1": "Poisson-1",
    "helmholtz-1": "Helmholtz-1",
    "helmholtz-0.2": "Helmholtz-0.2",
    "burgers-1": "Burgers-1",
}


def get_problem(name: str) -> PdeProblem:
    try:
        return PROBLEMS[name]()
    except KeyError:
        raise KeyError(
            f"unknown problem {name!r}; registered problems: {', '.join(sorted(PROBLEMS))}"
        ) from None


def problem_from_config(spec: dict) -> PdeProblem:
    """Custom rectangle problem built from a registered residual operator.

    ``spec`` keys: ``name``, ``residual`` (poisson | helmholtz | burgers),
    ``bounds`` ([[lo, hi], [lo, hi]]), optional ``params`` and
    ``boundary_value`` (a number, or ``"exact"`` for helmholtz).
    """
    missing = [k for k in ("residual", "bounds") if k not in spec]
    if missing:
        raise KeyError(f"custom problem needs {' and '.join(missing)}")
    kind = spec["residual"]
    bounds = tuple(tuple(b) for b in spec["bounds"])
    params = dict(spec.get("params", {}))
    bv = spec.get("boundary_value", 0.0)
    name = spec.get("name", f"custom-{kind}")
    if kind == "poisson":
        return PdeProblem(name, Domain("rect2d", bounds), "poisson", {}, {"outer": _const(bv)},
                          order=2, homogeneous=True)
    if kind == "helmholtz":
        k, a1, a2 = params.get("k", 1.0), params.get("a1", 1.0), params.get("a2", 1.0)
        exact = lambda x: helmholtz_exact(x, a1, a2)  # noqa: E731
        g = exact if bv == "exact" else _const(bv)
        return PdeProblem(name, Domain("rect2d", bounds), "helmholtz",
                          {"k": k, "a1": a1, "a2": a2}, {"outer": g}, exact, activation="sin")
    if kind == "burgers":
        nu = params.get("nu", BURGERS_NU)
        targets = {
            "initial": lambda x: -np.sin(math.pi * x[:, 0]),
            "left": _const(bv), "right": _const(bv),
        }
        return PdeProblem(name, Domain("spacetime1d", bounds), "burgers", {"nu": nu}, targets)
    raise KeyError(f"unknown residual operator {kind!r}; choose poisson, helmholtz or burgers")
