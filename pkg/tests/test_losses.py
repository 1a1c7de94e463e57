import gc

import numpy as np
import pytest

from pinnlab import losses, network, problems
from pinnlab.autodiff import ArrayTape, Tape
from pinnlab.errors import EmptyGroup
from pinnlab.losses import LossGroup
from pinnlab.network import MlpConfig

NAMES = ["poisson-8", "helmholtz-1", "burgers-1"]


def setup(name, widths=(6, 6), n_int=12, n_b=10, seed=0):
    p = problems.get_problem(name)
    cfg = MlpConfig(2, widths, 1, p.activation)
    params = network.init_glorot_normal(cfg, seed)
    s = problems.sample_problem(p, n_int, n_b, seed)
    return p, cfg, params, losses.make_groups(s)


def test_make_groups():
    _, _, _, groups = setup("poisson-8")
    assert [g.id for g in groups] == ["pde", "boundary"]
    assert groups[1].targets is not None


def test_empty_group():
    p, cfg, params, _ = setup("poisson-8")
    g = LossGroup("pde", "pde", np.zeros((0, 2)))
    with pytest.raises(EmptyGroup):
        losses.group_loss(params, cfg, p, g, ArrayTape())


def test_boundary_loss_zero_when_interpolating():
    p, cfg, params, _ = setup("poisson-8")
    x = np.random.default_rng(0).uniform(-1, 1, size=(7, 2))
    g = LossGroup("boundary", "boundary", x, network.predict(params, cfg, x))
    assert float(losses.group_loss(params, cfg, p, g, ArrayTape()).value) == 0.0


def test_helmholtz_pde_loss_vanishes_on_exact_solution():
    # a 2-unit sin network represents sin(pi x) sin(pi y) = (cos(pi(x-y)) - cos(pi(x+y))) / 2
    p = problems.get_problem("helmholtz-1")
    cfg = MlpConfig(2, (2,), 1, "sin")
    h = np.pi / 2
    flat = np.array([np.pi, -np.pi, np.pi, np.pi, h, h, 0.5, -0.5, 0.0])
    params = network.init_glorot_normal(cfg, 0).replace(flat)
    x = np.random.default_rng(1).uniform(-0.5, 0.5, size=(50, 2))
    assert np.allclose(network.predict(params, cfg, x), problems.helmholtz_exact(x, 1, 1), atol=1e-14)
    g = LossGroup("pde", "pde", x)
    assert float(losses.group_loss(params, cfg, p, g, ArrayTape()).value) < 1e-16


@pytest.mark.parametrize("name", NAMES)
def test_scalar_and_array_losses_agree(name):
    p, cfg, params, groups = setup(name)
    for g in groups:
        a = float(losses.group_loss(params, cfg, p, g, ArrayTape()).value)
        s = losses.group_loss(params, cfg, p, g, Tape()).value
        assert abs(a - s) <= 1e-12 * max(1.0, abs(a))


def test_scalar_tape_gradients_match_array_tape():
    p, cfg, params, groups = setup("burgers-1", widths=(4,), n_int=4, n_b=3)
    ev = losses.evaluate_groups(params, cfg, p, groups)
    for g, ga in zip(groups, ev.grads):
        t = Tape()
        loss = losses.group_loss(params, cfg, p, g, t)
        gs = network.param_gradient(params, t, loss)
        assert np.allclose(ga, gs, rtol=1e-11, atol=1e-14)


@pytest.mark.parametrize("name", NAMES)
def test_group_gradients_match_differences(name):
    p, cfg, params, groups = setup(name, widths=(8, 8))
    assert params.size <= 200
    grads = losses.group_gradients(params, cfg, p, groups)
    h = 1e-6
    gen = np.random.default_rng(42)
    for k in gen.choice(params.size, size=50, replace=False):
        up, dn = params.flat.copy(), params.flat.copy()
        up[k] += h
        dn[k] -= h
        lu = losses.evaluate_groups(params.replace(up), cfg, p, groups, with_grads=False).losses
        ld = losses.evaluate_groups(params.replace(dn), cfg, p, groups, with_grads=False).losses
        for gi in range(len(groups)):
            fd = (lu[gi] - ld[gi]) / (2 * h)
            assert abs(fd - grads[gi][k]) <= 1e-5 * max(abs(fd), 1e-3), (name, gi, k)


def test_duplicated_group_gives_identical_gradients():
    p, cfg, params, groups = setup("poisson-8")
    g1, g2 = losses.group_gradients(params, cfg, p, [groups[0], groups[0]])
    assert np.array_equal(g1, g2)


def test_weighted_total_gradient_is_linear():
    p, cfg, params, groups = setup("helmholtz-1")
    gf, gb = losses.group_gradients(params, cfg, p, groups)
    wf, wb = 0.3, 2.5
    tape = ArrayTape()
    lf, lb = (losses.group_loss(params, cfg, p, g, tape) for g in groups)
    total = lf * wf + lb * wb
    gt = network.param_gradient(params, tape, total)
    assert np.allclose(gt, wf * gf + wb * gb, rtol=0, atol=1e-10)


def test_group_loss_permutation_invariant():
    p, cfg, params, groups = setup("poisson-8", n_int=64)
    g = groups[0]
    perm = LossGroup("pde", "pde", g.points[::-1].copy())
    a = float(losses.group_loss(params, cfg, p, g, ArrayTape()).value)
    b = float(losses.group_loss(params, cfg, p, perm, ArrayTape()).value)
    assert abs(a - b) <= 1e-14 * a


def test_report_total():
    _, _, _, groups = setup("poisson-8")
    groups = [LossGroup("pde", "pde", groups[0].points, weight=2.0), groups[1]]
    r = losses.report([0.5, 0.25], groups, epoch=3)
    assert r.total == 1.25 and r.losses == {"pde": 0.5, "boundary": 0.25} and r.epoch == 3


@pytest.mark.parametrize("t", [2.0, 4.0, 8.0])
def test_scaling_identity(t):
    p = problems.get_problem("poisson-8")
    cfg = MlpConfig(2, (32, 32, 32), 1, "tanh")
    params = network.init_glorot_normal(cfg, 11)
    rf, rb = losses.verify_scaling(p, params, cfg, t, seed=0)
    assert abs(rf / t ** 4 - 1) < 1e-9
    assert abs(rb - 1) < 1e-12


def test_scaling_refuses_inhomogeneous():
    p = problems.get_problem("helmholtz-1")
    cfg = MlpConfig(2, (4,), 1, "sin")
    with pytest.raises(ValueError, match="homogeneous"):
        losses.verify_scaling(p, network.init_glorot_normal(cfg, 0), cfg, 2.0, 0)


def test_evaluation_leaves_no_cyclic_garbage():
    # a training loop must not depend on the cycle collector to free tapes
    p, cfg, params, groups = setup("helmholtz-1")
    losses.evaluate_groups(params, cfg, p, groups)
    gc.collect()
    gc.disable()
    try:
        losses.evaluate_groups(params, cfg, p, groups)
        assert gc.collect() == 0
    finally:
        gc.enable()
