"""Full-batch PINN training runs and multi-seed suites."""

from __future__ import annotations

import dataclasses
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from pinnlab import losses, metrics, network, optim
from pinnlab.errors import NonFiniteGradient, NonFiniteLoss, ZeroMomentum
from pinnlab.losses import LossReport
from pinnlab.metrics import HistogramSpec
from pinnlab.network import MlpConfig, MlpParams
from pinnlab.optim import HyperParams
from pinnlab.problems import PdeProblem, get_problem, problem_from_config, sample_problem

NA = "N/A"


@dataclass(frozen=True)
class TrainConfig:
    problem: str = "poisson-1"
    optimizer: str = "multiadam"
    gamma: float = 1e-3
    beta1: float | None = None  # None: the optimizer's default
    beta2: float | None = None
    epsilon: float = 1e-8
    lra_alpha: float = 0.1
    epochs: int = 5000
    n_interior: int = 2000
    n_boundary: int = 400
    seeds: tuple[int, ...] = (0, 1, 2)
    hidden_widths: tuple[int, ...] = (32, 32, 32)
    activation: str | None = None  # None: the problem's default
    eval_every: int = 500
    histogram_epochs: tuple[int, ...] = ()
    histogram_bins: int = 51
    pde_weight: float = 1.0
    boundary_weight: float = 1.0
    fd_cells: int = 512
    label: str = ""
    custom_problem: dict | None = None

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        object.__setattr__(self, "histogram_epochs", tuple(int(e) for e in self.histogram_epochs))
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        if self.eval_every < 1:
            raise ValueError("eval_every must be >= 1")
        if self.optimizer not in optim.OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {optim.OPTIMIZERS}, got {self.optimizer!r}")
        self.hyperparams()  # validates the ranges

    def hyperparams(self) -> HyperParams:
        base = optim.MULTIADAM_DEFAULTS if self.optimizer == "multiadam" else optim.ADAM_DEFAULTS
        return HyperParams(
            self.gamma,
            base.beta1 if self.beta1 is None else self.beta1,
            base.beta2 if self.beta2 is None else self.beta2,
            self.epsilon,
        )

    def resolve_problem(self) -> PdeProblem:
        if self.custom_problem is not None:
            return problem_from_config(self.custom_problem)
        return get_problem(self.problem)

    def network_config(self, problem: PdeProblem) -> MlpConfig:
        return MlpConfig(problem.domain.dim, self.hidden_widths, 1,
                         self.activation or problem.activation)

    @property
    def name(self) -> str:
        return self.label or self.optimizer


@dataclass
class RunResult:
    run_id: str
    problem: str
    optimizer: str
    label: str
    seed: int
    params: MlpParams
    net: MlpConfig | None = None
    history: list[LossReport] = field(default_factory=list)
    evals: list[dict] = field(default_factory=list)
    weights: list[dict] = field(default_factory=list)
    histograms: dict = field(default_factory=dict)  # epoch -> group -> (edges, counts)
    aborted_epoch: int | None = None
    wall_time: float = 0.0

    @property
    def aborted(self) -> bool:
        return self.aborted_epoch is not None

    @property
    def final(self) -> dict | None:
        if self.aborted or not self.evals:
            return None
        return self.evals[-1]


def _init_state(cfg: TrainConfig, size: int, n_groups: int):
    if cfg.optimizer == "multiadam":
        return optim.MultiAdamState.zeros(size, n_groups)
    if cfg.optimizer == "lra":
        return optim.LraState(optim.AdamState.zeros(size))
    return optim.AdamState.zeros(size)


def _step(cfg, state, grads, groups, hp, seed):
    with np.errstate(invalid="ignore", over="ignore"):
        # non-finite products are caught by the optimizer's gradient check
        weighted = [g.weight * gr for g, gr in zip(groups, grads)]
    if cfg.optimizer == "multiadam":
        return optim.multiadam_step(state, weighted, hp)
    if cfg.optimizer == "lra":
        return optim.lra_step(state, weighted, hp, cfg.lra_alpha)
    if cfg.optimizer == "pcgrad":
        return optim.pcgrad_step(state, weighted, hp, seed)
    return optim.adam_step(state, np.sum(weighted, axis=0), hp)


def _weight_row(cfg, state):
    """Normalized PDE-loss weight tracked by the optimizer, if it has one."""
    if cfg.optimizer == "multiadam":
        try:
            raw = optim.weight_estimate(state)
        except ZeroMomentum:
            return None
        eff = optim.effective_weight(state)
        return {"weight_estimate_pde": float(raw[0]), "effective_weight_pde": float(eff[0])}
    if cfg.optimizer == "lra":
        # LRA scales the boundary term by lam, i.e. PDE weight 1/lam
        return {"weight_estimate_pde": 1.0 / state.lam, "effective_weight_pde": 1.0 / state.lam}
    return None


def train(cfg: TrainConfig, seed: int, grid: metrics.EvalGrid | None = None) -> RunResult:
    """One full-batch run; non-finite losses or updates end it early."""
    t0 = time.perf_counter()
    problem = cfg.resolve_problem()
    net = cfg.network_config(problem)
    hp = cfg.hyperparams()
    samples = sample_problem(problem, cfg.n_interior, cfg.n_boundary, seed)
    groups = losses.make_groups(samples, cfg.pde_weight, cfg.boundary_weight)
    params = network.init_glorot_normal(net, seed)
    state = _init_state(cfg, params.size, len(groups))
    grid = grid or metrics.eval_grid(problem, cfg.fd_cells)
    res = RunResult(f"{problem.name}/{cfg.name}/s{seed}", problem.name, cfg.optimizer,
                    cfg.name, seed, params, net)
    hist_at = set(cfg.histogram_epochs)
    weight = None

    def evaluate(epoch, ls):
        mae, rel = grid.score(params, net)
        res.evals.append({
            "run_id": res.run_id, "problem": problem.name, "optimizer": cfg.name, "seed": seed,
            "epoch": epoch, "loss_pde": ls[0], "loss_boundary": ls[1], "mae": mae, "rel_l2": rel,
            "weight_estimate_pde": weight["weight_estimate_pde"] if weight else math.nan,
        })

    evaluate(0, losses.evaluate_groups(params, net, problem, groups, with_grads=False).losses)
    for epoch in range(1, cfg.epochs + 1):
        ev = losses.evaluate_groups(params, net, problem, groups)
        try:
            if not all(math.isfinite(l) for l in ev.losses):
                raise NonFiniteLoss(f"non-finite loss {ev.losses}", epoch=epoch)
            res.history.append(losses.report(ev.losses, groups, epoch))
            if epoch in hist_at:
                res.histograms[epoch] = {
                    g.id: metrics.gradient_histogram(gr, HistogramSpec(cfg.histogram_bins, None, g.id))
                    for g, gr in zip(groups, ev.grads)
                }
            try:
                state, update = _step(cfg, state, ev.grads, groups, hp, seed)
            except NonFiniteGradient as exc:
                raise NonFiniteLoss(str(exc), epoch=epoch) from exc
            if not np.all(np.isfinite(update)):
                raise NonFiniteLoss("non-finite parameter update", epoch=epoch)
        except NonFiniteLoss as exc:
            res.aborted_epoch = exc.epoch
            break
        params = params.replace(params.flat + update)
        weight = _weight_row(cfg, state)
        if weight is not None:
            res.weights.append({"epoch": epoch, **weight})
        if epoch % cfg.eval_every == 0 or epoch == cfg.epochs:
            ls = losses.evaluate_groups(params, net, problem, groups, with_grads=False).losses
            if not all(math.isfinite(l) for l in ls):
                res.aborted_epoch = epoch + 1
                break
            evaluate(epoch, ls)
    res.params = params
    res.wall_time = time.perf_counter() - t0
    return res


def _run_one(args):
    cfg, seed = args
    return train(cfg, seed)


def run_suite(configs, workers: int = 1) -> tuple[list[RunResult], list[dict]]:
    """Every config over its seeds; returns the runs and one summary row per config."""
    configs = list(configs)
    if not configs:
        raise ValueError("need at least one configuration")
    jobs = [(cfg, seed) for cfg in configs for seed in cfg.seeds]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            runs = list(pool.map(_run_one, jobs))
    else:
        runs = [_run_one(job) for job in jobs]
    rows, k = [], 0
    for cfg in configs:
        batch = runs[k:k + len(cfg.seeds)]
        k += len(cfg.seeds)
        rows.append(summarize(cfg, batch))
    return runs, rows


def summarize(cfg: TrainConfig, runs: list[RunResult]) -> dict:
    """Mean final metrics over seeds; any aborted seed makes the cell N/A."""
    hp = cfg.hyperparams()
    row = {
        "problem": runs[0].problem if runs else cfg.problem,
        "optimizer": cfg.name,
        "beta1": hp.beta1,
        "beta2": hp.beta2,
        "seeds": [r.seed for r in runs],
        "aborted": [r.seed for r in runs if r.aborted],
    }
    if not runs or any(r.aborted for r in runs):
        row["mae"] = row["rel_l2"] = NA
    else:
        row["mae"] = float(np.mean([r.final["mae"] for r in runs]))
        row["rel_l2"] = float(np.mean([r.final["rel_l2"] for r in runs]))
    return row


def with_overrides(cfg: TrainConfig, **changes) -> TrainConfig:
    return dataclasses.replace(cfg, **changes)
