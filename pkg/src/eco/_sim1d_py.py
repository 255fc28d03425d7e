"""Pure-Python fallback for the scalar-quadratic regime simulator.

Mirrors ``_sim1d.pyx`` statement for statement; both must produce bit-identical
results (the compiled extension is built without FMA contraction to keep the
floating-point semantics aligned). Used when the compiled kernel is missing,
and by the benchmark that compares the two.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_STEP_SALT = 0xA0761D6478BD642F
_TENSOR_SALT = 0xE7037ED1A0B428DB
_INDEX_SALT = 0x8EBC6AF09C88C6E3
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB
_INV_2_53 = 1.0 / 9007199254740992.0

REGIME_MW = 0
REGIME_NAIVE = 1
REGIME_ECO = 2


def _mix64(z):
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MIX_A) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX_B) & _MASK64
    return z ^ (z >> 31)


def _noise(h1, step):
    # continues the keyed-uniform chain after the seed stage, with
    # tensor_id = 0 and index = 0
    h = _mix64(((h1 ^ step) + _STEP_SALT) & _MASK64)
    h = _mix64((h + _TENSOR_SALT) & _MASK64)
    h = _mix64((h + _INDEX_SALT) & _MASK64)
    return (h >> 11) * _INV_2_53


def simulate(regime, L, eta, beta, delta, steps, burn_in, seed, x0=0.0, m0=0.0):
    """Simulate one regime; returns (sum of sampled xhat^2, samples, x, m, diverged).

    Samples are the post-burn-in values of the quantized coordinate seen by
    the gradient. The noise for the value quantized at time s is keyed by
    step = s, matching the tensor-path key schedule.
    """
    h1 = _mix64((seed + _GOLDEN) & _MASK64)
    acc = 0.0
    n = 0
    diverged = False

    if regime == REGIME_MW:
        x = x0
        m = m0
        for t in range(steps):
            u = _noise(h1, t)
            xi = delta * (u - 0.5)
            xhat = x + xi
            if t >= burn_in:
                acc += xhat * xhat
                n += 1
            m = beta * m + (1.0 - beta) * L * xhat
            x = x - eta * m
            if not (abs(x) < 1e150):
                diverged = True
                break
        return acc, n, x, m, diverged

    gamma = (1.0 - beta) / (eta * beta)
    u = _noise(h1, 0)
    xhat = x0 + delta * (u - 0.5)
    m = m0
    for t in range(steps):
        if t >= burn_in:
            acc += xhat * xhat
            n += 1
        mt = beta * m + (1.0 - beta) * L * xhat
        xt = xhat - eta * mt
        u = _noise(h1, t + 1)
        xi = delta * (u - 0.5)
        xhat = xt + xi
        if regime == REGIME_ECO:
            m = mt + gamma * xi
        else:
            m = mt
        if not (abs(xhat) < 1e150):
            diverged = True
            break
    return acc, n, xhat, m, diverged
