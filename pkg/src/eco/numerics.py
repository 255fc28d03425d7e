"""Dense float64 helpers and counter-based keyed randomness.

Everything here is pure: values in, values out. All randomness flows through
an explicit ``(seed, step, tensor_id, index)`` key, so any single draw can be
reproduced in isolation and independent consumers share or avoid each other's
streams by construction rather than by locking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_STEP_SALT = 0xA0761D6478BD642F
_TENSOR_SALT = 0xE7037ED1A0B428DB
_INDEX_SALT = 0x8EBC6AF09C88C6E3
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB
_INV_2_53 = 2.0 ** -53


@dataclass(frozen=True)
class RngKey:
    """Key for one uniform draw. Equal keys always produce equal draws."""

    seed: int = 0
    step: int = 0
    tensor_id: int = 0
    index: int = 0


def _mix64(z: int) -> int:
    """64-bit finalizer with full avalanche (splitmix-style)."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MIX_A) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX_B) & _MASK64
    return z ^ (z >> 31)


def _prefix_hash(seed: int, step: int, tensor_id: int) -> int:
    h = _mix64((seed + _GOLDEN) & _MASK64)
    h = _mix64(((h ^ step) + _STEP_SALT) & _MASK64)
    return _mix64(((h ^ tensor_id) + _TENSOR_SALT) & _MASK64)


def key_hash(seed: int, step: int, tensor_id: int, index: int) -> int:
    """Hash the four key fields to a 64-bit word."""
    h = _prefix_hash(seed, step, tensor_id)
    return _mix64(((h ^ index) + _INDEX_SALT) & _MASK64)


def keyed_uniform(key: RngKey) -> float:
    """Uniform draw on [0, 1) as a pure function of the key."""
    return (key_hash(key.seed, key.step, key.tensor_id, key.index) >> 11) * _INV_2_53


def uniform_array(seed: int, step: int, tensor_id: int, n: int, base_index: int = 0) -> np.ndarray:
    """Vectorized ``keyed_uniform`` for indices base_index .. base_index+n-1.

    Bit-identical to calling ``keyed_uniform`` element by element.
    """
    prefix = np.uint64(_prefix_hash(seed, step, tensor_id))
    idx = np.arange(n, dtype=np.uint64) + np.uint64(base_index)
    with np.errstate(over="ignore"):
        z = (prefix ^ idx) + np.uint64(_INDEX_SALT)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX_A)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX_B)
        z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) * _INV_2_53


def as_tensor(x, name: str = "x") -> np.ndarray:
    """Coerce to a float64 array and reject NaN/Inf."""
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite (no NaN/Inf)")
    return arr


def cosine_similarity(a, b) -> float:
    """<a, b> / (|a| |b|), in [-1, 1]. Raises on zero-norm input."""
    av = as_tensor(a, "a").ravel()
    bv = as_tensor(b, "b").ravel()
    if av.shape != bv.shape:
        raise ValueError("cosine_similarity requires equal shapes")
    na = float(np.linalg.norm(av))
    nb = float(np.linalg.norm(bv))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine_similarity is undefined for zero-norm input")
    return float(np.clip(float(av @ bv) / (na * nb), -1.0, 1.0))


def relative_norm(a, b) -> float:
    """|a| / |b|. Raises when |b| is zero."""
    av = as_tensor(a, "a")
    bv = as_tensor(b, "b")
    nb = float(np.linalg.norm(bv))
    if nb == 0.0:
        raise ValueError("relative_norm is undefined for zero-norm denominator")
    return float(np.linalg.norm(av)) / nb
