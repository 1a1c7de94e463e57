"""Adam, MultiAdam and the LRA / PCGrad baselines.

Every step function is pure: it takes a state and gradients and returns a
new state together with the parameter update (to be added to the params).
Epsilon sits outside the square root: ``m_hat / (sqrt(v_hat) + eps)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pinnlab import rng
from pinnlab.errors import DegenerateGradient, GroupCountMismatch, NonFiniteGradient, ZeroMomentum

OPTIMIZERS = ("adam", "multiadam", "lra", "pcgrad")


@dataclass(frozen=True)
class HyperParams:
    gamma: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")
        for name in ("beta1", "beta2"):
            b = getattr(self, name)
            if not 0.0 <= b < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {b}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be non-negative, got {self.epsilon}")


ADAM_DEFAULTS = HyperParams(1e-3, 0.9, 0.999, 1e-8)
MULTIADAM_DEFAULTS = HyperParams(1e-3, 0.99, 0.99, 1e-8)

# rows of the betas ablation grid
BETA_GRID = ((0.99, 0.99), (0.9, 0.999), (0.9, 0.9), (0.9, 0.0), (0.0, 0.9))


@dataclass(frozen=True, eq=False)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, size: int) -> AdamState:
        return cls(np.zeros(size), np.zeros(size), 0)


@dataclass(frozen=True, eq=False)
class MultiAdamState:
    m: tuple[np.ndarray, ...]
    v: tuple[np.ndarray, ...]
    t: int = 0

    @property
    def n(self) -> int:
        return len(self.m)

    @classmethod
    def zeros(cls, size: int, n: int) -> MultiAdamState:
        return cls(tuple(np.zeros(size) for _ in range(n)), tuple(np.zeros(size) for _ in range(n)), 0)


@dataclass(frozen=True, eq=False)
class LraState:
    adam: AdamState
    lam: float = 1.0


def _check_finite(*grads):
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient("gradient contains NaN or infinite entries")


def _moments(m, v, g, t, hp):
    """Decayed moments and the bias-corrected direction ``m_hat/(sqrt(v_hat)+eps)``."""
    m = hp.beta1 * m + (1.0 - hp.beta1) * g
    v = hp.beta2 * v + (1.0 - hp.beta2) * (g * g)
    m_hat = m / (1.0 - hp.beta1 ** t)
    v_hat = v / (1.0 - hp.beta2 ** t)
    denom = np.sqrt(v_hat) + hp.epsilon
    with np.errstate(invalid="ignore", divide="ignore"):
        # 0/0 (an exactly-zero history with eps=0) contributes no movement
        direction = np.where(denom > 0, m_hat / denom, 0.0)
    return m, v, direction


def adam_step(state: AdamState, g, hp: HyperParams):
    g = np.asarray(g, dtype=np.float64)
    if g.shape != state.m.shape:
        raise ValueError(f"gradient length {g.shape} does not match state {state.m.shape}")
    _check_finite(g)
    t = state.t + 1
    m, v, direction = _moments(state.m, state.v, g, t, hp)
    return AdamState(m, v, t), -hp.gamma * direction


def multiadam_step(state: MultiAdamState, grads, hp: HyperParams):
    """Adam moments kept per loss group; the update averages the groups'
    preconditioned directions."""
    if len(grads) != state.n:
        raise GroupCountMismatch(f"got {len(grads)} gradients for {state.n} groups")
    grads = [np.asarray(g, dtype=np.float64) for g in grads]
    for g in grads:
        if g.shape != state.m[0].shape:
            raise ValueError(f"gradient length {g.shape} does not match state {state.m[0].shape}")
    _check_finite(*grads)
    t = state.t + 1
    ms, vs = [], []
    acc = np.zeros_like(state.m[0])
    for m, v, g in zip(state.m, state.v, grads):
        m, v, direction = _moments(m, v, g, t, hp)
        ms.append(m)
        vs.append(v)
        acc += direction
    return MultiAdamState(tuple(ms), tuple(vs), t), -(hp.gamma / state.n) * acc


def lra_step(state: LraState, grads, hp: HyperParams, alpha: float = 0.1):
    """Learning-rate annealing: rescale the boundary gradient by a running
    estimate of ``max|g_f| / mean|g_b|`` and take one Adam step."""
    if len(grads) != 2:
        raise GroupCountMismatch(f"LRA needs exactly two groups (pde, boundary), got {len(grads)}")
    g_f, g_b = (np.asarray(g, dtype=np.float64) for g in grads)
    _check_finite(g_f, g_b)
    denom = float(np.mean(np.abs(g_b)))
    if denom < 1e-300:
        raise DegenerateGradient("boundary gradient is identically zero")
    lam_hat = float(np.max(np.abs(g_f))) / denom
    lam = (1.0 - alpha) * state.lam + alpha * lam_hat
    adam, update = adam_step(state.adam, g_f + lam * g_b, hp)
    return LraState(adam, lam), update


def lra_estimate(grads) -> float:
    g_f, g_b = grads
    return float(np.max(np.abs(g_f)) / np.mean(np.abs(g_b)))


def pcgrad_surgery(grads, gen: np.random.Generator) -> np.ndarray:
    """Project each gradient off every other one it conflicts with, then sum."""
    grads = [np.asarray(g, dtype=np.float64) for g in grads]
    out = []
    for i, g in enumerate(grads):
        g = g.copy()
        others = [j for j in range(len(grads)) if j != i]
        for j in gen.permutation(others):
            h = grads[j]
            dot = float(g @ h)
            if dot < 0:
                nn = float(h @ h)
                if nn > 0:
                    g -= (dot / nn) * h
        out.append(g)
    return np.sum(out, axis=0)


def pcgrad_step(state: AdamState, grads, hp: HyperParams, seed: int):
    """PCGrad surgery (order reshuffled per step from ``(seed, step)``) then Adam."""
    if len(grads) < 2:
        raise GroupCountMismatch("PCGrad needs at least two groups")
    _check_finite(*grads)
    gen = rng.generator(seed, rng.PCGRAD, step=state.t)
    return adam_step(state, pcgrad_surgery(grads, gen), hp)


def weight_estimate(state: MultiAdamState, boundary: int = -1) -> np.ndarray:
    """``||v_i||_2`` for each group divided by the boundary group's value."""
    if state.t < 1:
        raise ValueError("no steps taken yet")
    norms = np.array([np.linalg.norm(v) for v in state.v])
    ref = norms[boundary]
    if ref == 0:
        raise ZeroMomentum("boundary second momentum is zero")
    return norms / ref


def effective_weight(state: MultiAdamState, boundary: int = -1) -> np.ndarray:
    """Loss weight MultiAdam implicitly applies to each group relative to the
    boundary group: the inverse ratio of typical gradient sizes,
    ``sqrt(||v_b|| / ||v_i||)``. Rescaling a loss by ``c`` moves this by ``1/c``."""
    w = weight_estimate(state, boundary)
    with np.errstate(divide="ignore"):
        return 1.0 / np.sqrt(w)

