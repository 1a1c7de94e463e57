"""Loss groups, their weighted total and per-group parameter gradients."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from pinnlab import network
from pinnlab.autodiff.arrays import ArrayTape
from pinnlab.autodiff.tape import Tape
from pinnlab.errors import EmptyGroup
from pinnlab.network import MlpConfig, MlpParams
from pinnlab.problems import PdeProblem, SampleSet, sample_problem, scale_domain


@dataclass(frozen=True, eq=False)
class LossGroup:
    id: str
    kind: str  # "pde" | "boundary"
    points: np.ndarray
    targets: np.ndarray | None = None
    weight: float = 1.0

    def __post_init__(self):
        if self.kind not in ("pde", "boundary"):
            raise ValueError(f"group kind must be 'pde' or 'boundary', got {self.kind!r}")
        if self.weight < 0:
            raise ValueError("group weights must be non-negative")
        if self.kind == "boundary" and self.targets is None:
            raise ValueError("boundary groups need target values")


@dataclass(frozen=True)
class LossReport:
    losses: dict[str, float]
    total: float
    epoch: int = 0


@dataclass
class GroupEval:
    """Loss values and gradients of every group at one parameter vector."""

    losses: list[float]
    grads: list[np.ndarray] = field(default_factory=list)


def make_groups(samples: SampleSet, pde_weight: float = 1.0, boundary_weight: float = 1.0):
    """One PDE group plus the merged boundary group."""
    return [
        LossGroup("pde", "pde", samples.interior, weight=pde_weight),
        LossGroup("boundary", "boundary", samples.boundary, samples.boundary_targets,
                  weight=boundary_weight),
    ]


def group_loss(params: MlpParams, config: MlpConfig, problem: PdeProblem, group: LossGroup, tape):
    """Mean squared residual (pde) or boundary mismatch, as a tape node."""
    n = len(group.points)
    if n == 0:
        raise EmptyGroup(f"group {group.id!r} has no points")
    if isinstance(tape, Tape):
        acc = None
        for k, x in enumerate(group.points):
            if group.kind == "pde":
                r = problem.residual(network.jet_forward(params, config, tape, x), x)
            else:
                r = network.forward(params, config, tape, x) - float(group.targets[k])
            sq = r.square()
            acc = sq if acc is None else acc + sq
        return acc / n
    if group.kind == "pde":
        jet = network.jet_forward(params, config, tape, group.points, problem.layout)
        r = problem.residual(jet, group.points)
    else:
        r = network.forward(params, config, tape, group.points) - group.targets
    return r.square().mean()


def evaluate_groups(params: MlpParams, config: MlpConfig, problem: PdeProblem, groups,
                    with_grads: bool = True) -> GroupEval:
    """Losses and (optionally) one gradient per group from a shared array tape."""
    if not groups:
        raise ValueError("need at least one loss group")
    tape = ArrayTape()
    try:
        nodes = [group_loss(params, config, problem, g, tape) for g in groups]
        out = GroupEval([float(n.value) for n in nodes])
        if with_grads:
            out.grads = [network.param_gradient(params, tape, n) for n in nodes]
    finally:
        tape.clear()
    return out


def group_gradients(params: MlpParams, config: MlpConfig, problem: PdeProblem, groups):
    return evaluate_groups(params, config, problem, groups).grads


def report(losses, groups, epoch: int = 0) -> LossReport:
    total = sum(g.weight * l for g, l in zip(groups, losses))
    return LossReport({g.id: l for g, l in zip(groups, losses)}, total, epoch)


def _mean_pde_loss(params, config, problem, x):
    tape = ArrayTape()
    jet = network.jet_forward(params, config, tape, x, problem.layout)
    r = problem.residual(jet, x).value
    return float(np.mean(r * r))


def _mean_boundary_loss(params, config, problem, x, tags):
    pred = network.predict(params, config, x)
    err = pred - problem.boundary_value(tags, x)
    return float(np.mean(err * err))


def scale_first_layer(params: MlpParams, t: float) -> MlpParams:
    """Network ``x -> u(t x)``."""
    flat = params.flat.copy()
    l = params.layout[0]
    flat[l.w_off:l.b_off] *= t
    return params.replace(flat)


def verify_scaling(problem: PdeProblem, params: MlpParams, config: MlpConfig, t: float,
                   seed: int, n_interior: int = 500, n_boundary: int = 200):
    """``(L_f' / L_f, L_b' / L_b)`` for the problem narrowed by ``t``.

    Both losses are evaluated at matched points ``x' = x / t`` with the
    network ``u'(x') = u(t x')``, so the ratios are exact identities.
    """
    if not problem.homogeneous:
        raise ValueError(
            f"{problem.name} is not a homogeneous PDE; the loss-scaling identity does not apply"
        )
    if t <= 0:
        raise ValueError("t must be positive")
    narrowed = scale_domain(problem, t)
    s = sample_problem(problem, n_interior, n_boundary, seed)
    scaled = scale_first_layer(params, t)
    lf = _mean_pde_loss(params, config, problem, s.interior)
    lf2 = _mean_pde_loss(scaled, config, narrowed, s.interior / t)
    lb = _mean_boundary_loss(params, config, problem, s.boundary, s.boundary_tags)
    lb2 = _mean_boundary_loss(scaled, config, narrowed, s.boundary / t, s.boundary_tags)
    return lf2 / lf, lb2 / lb

