"""Fused single-pass loops for the batched jet activation.

The numpy formulation of the activation forward/VJP is memory-bound (about
thirty full-array passes per layer); these kernels avoid the temporaries.
"""

import numpy as np
from numba import njit

TANH, SIN, LINEAR = 0, 1, 2
ACT_CODES = {"tanh": TANH, "sin": SIN, "linear": LINEAR}


def transcendentals(z, act):
    """Vectorised ``phi(z)`` (and ``cos z`` for sin); libm calls inside the
    loops are several times slower than numpy's."""
    if act == TANH:
        return np.tanh(z), z
    if act == SIN:
        return np.sin(z), np.cos(z)
    return z.copy(), z


@njit(cache=True)
def _derivs(y, cz, act):
    # y = phi(z); cz = cos(z) for sin, unused otherwise
    m = y.shape[0]
    s1 = np.empty(m)
    s2 = np.empty(m)
    s3 = np.empty(m)
    if act == TANH:
        for e in range(m):
            v = y[e]
            a = 1.0 - v * v
            s1[e] = a
            s2[e] = -2.0 * v * a
            s3[e] = -2.0 * a * (1.0 - 3.0 * v * v)
    elif act == SIN:
        for e in range(m):
            s1[e] = cz[e]
            s2[e] = -y[e]
            s3[e] = -cz[e]
    else:
        s1[:] = 1.0
        s2[:] = 0.0
        s3[:] = 0.0
    return s1, s2, s3


# Arrays below are flattened to (slots, N * width); loops run slot-outer so
# the inner element loop vectorises.

@njit(cache=True)
def activation_forward(s, y, cz, d, ns, t_slot, t_i, t_j, t_c, act):
    m = s.shape[1]
    out = np.empty_like(s)
    s1, s2, _ = _derivs(y, cz, act)
    for e in range(m):
        out[0, e] = y[e]
    for i in range(1, 1 + d + ns):
        for e in range(m):
            out[i, e] = s1[e] * s[i, e]
    for t in range(t_slot.shape[0]):
        sl, gi, gj, c = 1 + d + t_slot[t], 1 + t_i[t], 1 + t_j[t], t_c[t]
        for e in range(m):
            out[sl, e] += c * s2[e] * s[gi, e] * s[gj, e]
    return out


@njit(cache=True)
def activation_vjp(s, y, cz, a, d, ns, t_slot, t_i, t_j, t_c, act):
    m = s.shape[1]
    res = np.empty_like(s)
    s1, s2, s3 = _derivs(y, cz, act)
    for e in range(m):
        res[0, e] = a[0, e] * s1[e]
    for i in range(1, 1 + d + ns):
        for e in range(m):
            res[0, e] += s2[e] * a[i, e] * s[i, e]
            res[i, e] = a[i, e] * s1[e]
    for t in range(t_slot.shape[0]):
        sl, gi, gj, c = 1 + d + t_slot[t], 1 + t_i[t], 1 + t_j[t], t_c[t]
        for e in range(m):
            w = c * a[sl, e]
            res[0, e] += w * s3[e] * s[gi, e] * s[gj, e]
            w *= s2[e]
            res[gi, e] += w * s[gj, e]
            res[gj, e] += w * s[gi, e]
    return res
