import math

import numpy as np
import pytest

from pinnlab import metrics, network, optim, trainer
from pinnlab.trainer import NA, TrainConfig

TINY = dict(epochs=20, n_interior=50, n_boundary=20, hidden_widths=(8,), eval_every=10,
            fd_cells=64, seeds=(0,))


def tiny(**kw):
    return TrainConfig(**{**TINY, **kw})


def test_config_validation():
    with pytest.raises(ValueError):
        tiny(optimizer="sgd")
    with pytest.raises(ValueError):
        tiny(epochs=0)
    with pytest.raises(ValueError):
        tiny(beta2=1.0)
    assert tiny().hyperparams().beta1 == 0.99
    assert tiny(optimizer="adam").hyperparams().beta2 == 0.999


def test_zero_learning_rate_keeps_initialization():
    cfg = tiny(gamma=0.0, epochs=1, eval_every=1)
    r = trainer.train(cfg, 0)
    problem = cfg.resolve_problem()
    init = network.init_glorot_normal(cfg.network_config(problem), 0)
    assert np.array_equal(r.params.flat, init.flat)
    assert r.evals[0]["mae"] == r.evals[-1]["mae"]


@pytest.mark.parametrize("opt", optim.OPTIMIZERS)
def test_runs_are_bit_identical(opt):
    a, b = trainer.train(tiny(optimizer=opt), 1), trainer.train(tiny(optimizer=opt), 1)
    assert np.array_equal(a.params.flat, b.params.flat)
    assert [h.losses for h in a.history] == [h.losses for h in b.history]
    assert a.evals == b.evals


def test_history_and_eval_schedule():
    r = trainer.train(tiny(epochs=25), 0)
    assert [h.epoch for h in r.history] == list(range(1, 26))
    assert [e["epoch"] for e in r.evals] == [0, 10, 20, 25]
    assert set(r.evals[0]) == {"run_id", "problem", "optimizer", "seed", "epoch", "loss_pde",
                               "loss_boundary", "mae", "rel_l2", "weight_estimate_pde"}
    assert math.isnan(r.evals[0]["weight_estimate_pde"])
    assert len(r.weights) == 25


def test_histograms_recorded():
    r = trainer.train(tiny(histogram_epochs=(5,), histogram_bins=11), 0)
    edges, counts = r.histograms[5]["pde"]
    assert len(edges) == 12 and counts.sum() == r.params.size


def test_non_finite_run_is_aborted_and_reported():
    cfg = tiny(pde_weight=math.inf)
    r = trainer.train(cfg, 0)
    assert r.aborted and r.aborted_epoch == 1 and r.final is None
    row = trainer.summarize(cfg, [r])
    assert row["mae"] == NA and row["rel_l2"] == NA and row["aborted"] == [0]


def test_suite_means():
    cfgs = [tiny(seeds=(0, 1)), tiny(optimizer="adam", seeds=(0, 1))]
    runs, rows = trainer.run_suite(cfgs)
    assert len(runs) == 4 and len(rows) == 2
    for row, pair in zip(rows, (runs[:2], runs[2:])):
        assert row["rel_l2"] == pytest.approx(np.mean([r.final["rel_l2"] for r in pair]), abs=1e-12)
        assert row["mae"] == pytest.approx(np.mean([r.final["mae"] for r in pair]), abs=1e-12)


def test_run_uses_fixed_grid():
    cfg = tiny()
    grid = metrics.eval_grid(cfg.resolve_problem(), 64)
    assert trainer.train(cfg, 0, grid).evals == trainer.train(cfg, 0).evals


def test_custom_problem_trains():
    cfg = tiny(problem="box", custom_problem={"name": "box", "residual": "poisson",
                                              "bounds": [[0, 1], [0, 1]], "boundary_value": 1.0})
    r = trainer.train(cfg, 0)
    assert r.problem == "box" and not r.aborted


def test_burgers_and_helmholtz_smoke():
    for name in ("burgers-1", "helmholtz-0.2"):
        r = trainer.train(tiny(problem=name), 0)
        assert not r.aborted and np.isfinite(r.final["rel_l2"])
