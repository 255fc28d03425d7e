"""Weight quantizers: grids, scale policies, rounding modes, granularities.

Every quantizer returns the quantized tensor together with its residual
``error = x - quantized``, so ``quantized + error`` reconstructs the input
(to within an ulp of the element scale; the subtraction itself rounds when
stochastic rounding jumps a near-zero value to a distant grid point).
Scales follow the symmetric scheme ``s = max|x| / rho`` per group
(zero-point 0), with a 0 sentinel for all-zero groups, which then quantize
to zeros with zero error.

Grids:

* ``UniformMax(rho)``   -- dynamic scale, integer codes up to magnitude rho.
* ``IntSymmetric(bits)``-- integer grid with levels -(2^(b-1)-1)..(2^(b-1)-1).
* ``FixedStep(delta)``  -- absolute grid delta * Z; the scale is delta itself.
* ``Fp8E4M3``           -- emulated 8-bit float (4 exponent / 3 mantissa bits,
                           max magnitude 448) via a precomputed value table.
* ``NoiseModel(delta)`` -- additive uniform dither on [-delta/2, delta/2]; an
                           analysis stand-in with error variance delta^2 / 12.
* ``Identity``          -- pass-through, zero error.

Stochastic rounding (SR) draws one keyed uniform per element, keyed by the
element's flat index, so results are independent of call order and shared
across runs that use the same key schedule. Round-to-nearest (RTN) breaks
ties half-to-even.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

from .numerics import RngKey, as_tensor, uniform_array


@dataclass(frozen=True)
class UniformMax:
    rho: float

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be > 0")


@dataclass(frozen=True)
class FixedStep:
    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be > 0")


@dataclass(frozen=True)
class IntSymmetric:
    bits: int

    def __post_init__(self):
        if self.bits < 2:
            raise ValueError("bits must be >= 2")


@dataclass(frozen=True)
class Fp8E4M3:
    pass


@dataclass(frozen=True)
class NoiseModel:
    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be > 0")


@dataclass(frozen=True)
class Identity:
    pass


Grid = Union[UniformMax, FixedStep, IntSymmetric, Fp8E4M3, NoiseModel, Identity]


class Rounding(str, Enum):
    RTN = "rtn"
    SR = "sr"


class Granularity(str, Enum):
    TENSOR = "tensor"
    ROW = "row"


@dataclass(frozen=True)
class QuantSpec:
    grid: Grid
    rounding: Rounding = Rounding.RTN
    granularity: Granularity = Granularity.TENSOR
    zero_point: float = 0.0


@dataclass
class QuantOutcome:
    quantized: np.ndarray
    error: np.ndarray  # input - quantized
    scale: np.ndarray  # one entry per granularity group (0 = degenerate group)


FP8_MAX = 448.0


def _build_e4m3_magnitudes() -> np.ndarray:
    mags = [0.0]
    # subnormals: m/8 * 2^-6 for m = 1..7
    for m in range(1, 8):
        mags.append(m * 2.0 ** -9)
    # normals: (1 + m/8) * 2^e for e = -6..8; the top (e=8, m=7) code is NaN
    for e in range(-6, 9):
        for m in range(8):
            if e == 8 and m == 7:
                continue
            mags.append((1.0 + m / 8.0) * 2.0 ** e)
    return np.array(sorted(mags))


_E4M3_MAGS = _build_e4m3_magnitudes()


def e4m3_magnitudes() -> np.ndarray:
    """Sorted non-negative representable magnitudes of the emulated FP8 format."""
    return _E4M3_MAGS.copy()


def _as_rows(x: np.ndarray, granularity: Granularity) -> np.ndarray:
    if granularity == Granularity.TENSOR:
        return x.reshape(1, -1)
    if x.ndim < 2:
        raise ValueError("row-wise granularity requires at least 2 dimensions")
    return x.reshape(x.shape[0], -1)


def compute_scale(x, rho: float, granularity: Granularity = Granularity.TENSOR) -> np.ndarray:
    """Per-group scale max|x| / rho; 0 sentinel for all-zero groups."""
    if not rho > 0:
        raise ValueError("rho must be > 0")
    rows = _as_rows(as_tensor(x), granularity)
    return np.max(np.abs(rows), axis=1) / rho


def round_rtn(y) -> np.ndarray:
    """Round to nearest integer, ties to even."""
    return np.rint(y)


def round_sr(y, u) -> np.ndarray:
    """Stochastic rounding: floor(y) + 1 with probability frac(y).

    ``u`` is the uniform draw on [0, 1) deciding the coin; on-grid inputs are
    returned unchanged for any u. Expectation over u equals y.
    """
    y = np.asarray(y, dtype=np.float64)
    lo = np.floor(y)
    return lo + (np.asarray(u) < (y - lo))


def _fp8_round_magnitudes(mag: np.ndarray, rounding: Rounding, u: np.ndarray | None) -> np.ndarray:
    """Map magnitudes in [0, 448] onto the E4M3 table."""
    mag = np.minimum(mag, FP8_MAX)
    hi_idx = np.searchsorted(_E4M3_MAGS, mag, side="left")
    hi_idx = np.clip(hi_idx, 0, len(_E4M3_MAGS) - 1)
    lo_idx = np.maximum(hi_idx - 1, 0)
    lo = _E4M3_MAGS[lo_idx]
    hi = _E4M3_MAGS[hi_idx]
    if rounding == Rounding.SR:
        span = hi - lo
        p_up = np.where(span > 0, (mag - lo) / np.where(span > 0, span, 1.0), 0.0)
        return np.where(u < p_up, hi, lo)
    d_lo = mag - lo
    d_hi = hi - mag
    # ties go to the candidate with even table index, mirroring ties-to-even
    tie_pick_hi = (d_lo == d_hi) & (hi_idx % 2 == 0)
    return np.where((d_hi < d_lo) | tie_pick_hi, hi, lo)


def fp8_nearest(x):
    """Nearest E4M3 value with sign; magnitudes beyond 448 saturate."""
    arr = as_tensor(x, "x")
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    out = np.sign(arr) * _fp8_round_magnitudes(np.abs(arr), Rounding.RTN, None)
    out = out + 0.0  # normalize -0.0
    return float(out[0]) if scalar else out


def _integer_levels(grid: Grid) -> float | None:
    """Largest integer code magnitude, or None when the grid is unbounded."""
    if isinstance(grid, UniformMax):
        return float(np.floor(grid.rho))
    if isinstance(grid, IntSymmetric):
        return float(2 ** (grid.bits - 1) - 1)
    return None


def quantize(x, spec: QuantSpec, key: RngKey = RngKey()) -> QuantOutcome:
    """Quantize ``x`` per spec; returns (quantized, error, scale).

    SR draws use ``key`` with the element's flat index added to ``key.index``,
    so two calls with the same key consume identical randomness.
    """
    arr = as_tensor(x, "x")
    grid = spec.grid

    if isinstance(grid, Identity):
        return QuantOutcome(arr.copy(), np.zeros_like(arr), np.zeros(1))

    if isinstance(grid, NoiseModel):
        u = uniform_array(key.seed, key.step, key.tensor_id, arr.size, key.index)
        xi = (grid.delta * (u - 0.5)).reshape(arr.shape)
        q = arr + xi
        return QuantOutcome(q, -xi, np.full(1, grid.delta))

    rows = _as_rows(arr, spec.granularity)
    n_groups = rows.shape[0]
    z = spec.zero_point

    if isinstance(grid, FixedStep):
        scale = np.full(n_groups, grid.delta)
    elif isinstance(grid, Fp8E4M3):
        scale = compute_scale(arr, FP8_MAX, spec.granularity)
    else:
        rho = grid.rho if isinstance(grid, UniformMax) else float(2 ** (grid.bits - 1) - 1)
        scale = compute_scale(arr, rho, spec.granularity)

    safe = np.where(scale > 0, scale, 1.0)[:, None]
    y = (rows - z) / safe

    u = None
    if spec.rounding == Rounding.SR:
        u = uniform_array(key.seed, key.step, key.tensor_id, arr.size, key.index)
        u = u.reshape(rows.shape)

    if isinstance(grid, Fp8E4M3):
        codes = np.sign(y) * _fp8_round_magnitudes(np.abs(y), spec.rounding, u)
    else:
        codes = round_rtn(y) if spec.rounding == Rounding.RTN else round_sr(y, u)
        levels = _integer_levels(grid)
        if levels is not None:
            codes = np.clip(codes, -levels, levels)

    q_rows = scale[:, None] * codes + z
    q_rows = np.where(scale[:, None] > 0, q_rows, 0.0)
    q = q_rows.reshape(arr.shape)
    return QuantOutcome(q, arr - q, scale)
