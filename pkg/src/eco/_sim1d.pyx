# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel for the scalar-quadratic regime simulator.

Keep in lockstep with ``_sim1d_py.py``: same statements, same evaluation
order. Compiled with -ffp-contract=off so both paths are bit-identical.
"""

from libc.math cimport fabs

cdef unsigned long long _GOLDEN = 0x9E3779B97F4A7C15
cdef unsigned long long _STEP_SALT = 0xA0761D6478BD642F
cdef unsigned long long _TENSOR_SALT = 0xE7037ED1A0B428DB
cdef unsigned long long _INDEX_SALT = 0x8EBC6AF09C88C6E3
cdef unsigned long long _MIX_A = 0xBF58476D1CE4E5B9
cdef unsigned long long _MIX_B = 0x94D049BB133111EB
cdef double _INV_2_53 = 1.0 / 9007199254740992.0

REGIME_MW = 0
REGIME_NAIVE = 1
REGIME_ECO = 2


cdef inline unsigned long long _mix64(unsigned long long z) nogil:
    z = (z ^ (z >> 30)) * _MIX_A
    z = (z ^ (z >> 27)) * _MIX_B
    return z ^ (z >> 31)


cdef inline double _noise(unsigned long long h1, unsigned long long step) nogil:
    cdef unsigned long long h = _mix64((h1 ^ step) + _STEP_SALT)
    h = _mix64(h + _TENSOR_SALT)
    h = _mix64(h + _INDEX_SALT)
    return <double> (h >> 11) * _INV_2_53


def simulate(int regime, double L, double eta, double beta, double delta,
             long long steps, long long burn_in, unsigned long long seed,
             double x0=0.0, double m0=0.0):
    """Simulate one regime; returns (sum of sampled xhat^2, samples, x, m, diverged)."""
    cdef unsigned long long h1 = _mix64(seed + _GOLDEN)
    cdef double acc = 0.0
    cdef long long n = 0
    cdef bint diverged = False
    cdef double x, m, xhat, u, xi, mt, xt, gamma
    cdef long long t

    if regime == 0:
        x = x0
        m = m0
        with nogil:
            for t in range(steps):
                u = _noise(h1, <unsigned long long> t)
                xi = delta * (u - 0.5)
                xhat = x + xi
                if t >= burn_in:
                    acc += xhat * xhat
                    n += 1
                m = beta * m + (1.0 - beta) * L * xhat
                x = x - eta * m
                if not (fabs(x) < 1e150):
                    diverged = True
                    break
        return acc, n, x, m, diverged

    gamma = (1.0 - beta) / (eta * beta)
    u = _noise(h1, 0)
    xhat = x0 + delta * (u - 0.5)
    m = m0
    with nogil:
        for t in range(steps):
            if t >= burn_in:
                acc += xhat * xhat
                n += 1
            mt = beta * m + (1.0 - beta) * L * xhat
            xt = xhat - eta * mt
            u = _noise(h1, <unsigned long long> (t + 1))
            xi = delta * (u - 0.5)
            xhat = xt + xi
            if regime == 2:
                m = mt + gamma * xi
            else:
                m = mt
            if not (fabs(xhat) < 1e150):
                diverged = True
                break
    return acc, n, xhat, m, diverged
