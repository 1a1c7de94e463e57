import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pinnlab import metrics, network, problems
from pinnlab.errors import ZeroReference
from pinnlab.metrics import HistogramSpec
from pinnlab.network import MlpConfig


def test_relative_l2_and_mae():
    ref = np.array([3.0, 4.0])
    assert metrics.relative_l2(ref, ref) == 0.0
    assert metrics.relative_l2(np.zeros(2), ref) == 1.0
    assert abs(metrics.relative_l2(ref + np.array([0.3, 0.4]), ref) - 0.1) < 1e-15
    assert metrics.mean_absolute_error([1.0, -1.0], [0.0, 0.0]) == 1.0
    with pytest.raises(ZeroReference):
        metrics.relative_l2([1.0], [0.0])
    with pytest.raises(ValueError):
        metrics.mean_absolute_error([1.0, 2.0], [1.0])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=200), st.integers(1, 80))
def test_histogram_counts_every_entry(values, bins):
    edges, counts = metrics.gradient_histogram(np.array(values), HistogramSpec(bins))
    assert counts.sum() == len(values) and len(edges) == bins + 1
    assert np.all(np.diff(edges) > 0)


def test_histogram_auto_range_is_symmetric():
    g = np.random.default_rng(0).normal(size=10_000)
    edges, _ = metrics.gradient_histogram(g)
    assert edges[0] == -edges[-1]
    assert abs(edges[-1] - np.percentile(np.abs(g), 99)) < 1e-12


def test_central_fraction():
    edges, counts = metrics.gradient_histogram(np.array([0.0, 0.0, 0.0, 5.0, -5.0]),
                                               HistogramSpec(5, (-5.0, 5.0)))
    assert metrics.central_fraction(edges, counts) == 0.6
    with pytest.raises(ValueError):
        metrics.gradient_histogram(np.array([np.nan]))


def test_grid_points():
    p1 = problems.get_problem("poisson-1")
    pts = metrics.grid_points(p1)
    assert len(pts) < 101 * 101 and np.all(p1.domain.outside_disks(pts))
    assert metrics.grid_points(problems.get_problem("burgers-1")).shape == (25_600, 2)


def test_reference_values():
    h = problems.get_problem("helmholtz-1")
    x = np.array([[0.1, 0.2]])
    assert np.allclose(metrics.reference_values(h, x), problems.helmholtz_exact(x, 1, 1))
    b = problems.get_problem("burgers-1")
    assert np.allclose(metrics.reference_values(b, np.array([[0.5, 0.0]])), -1.0)
    p8 = problems.get_problem("poisson-8")
    v = metrics.reference_values(p8, np.array([[4.0, 0.0], [3.0, 2.0], [0.0, 0.0]]), fd_cells=128)
    assert abs(v[0] - 1.0) < 1e-12 and abs(v[1]) < 1e-12 and 0 < v[2] < 1


def test_eval_grid_scores_exact_network_zero():
    # the 2-unit sin network that reproduces the Helmholtz-1 solution
    p = problems.get_problem("helmholtz-1")
    cfg = MlpConfig(2, (2,), 1, "sin")
    h = np.pi / 2
    params = network.init_glorot_normal(cfg, 0).replace(
        np.array([np.pi, -np.pi, np.pi, np.pi, h, h, 0.5, -0.5, 0.0]))
    mae, rel = metrics.eval_grid(p).score(params, cfg)
    assert mae < 1e-14 and rel < 1e-14
