"""Signed 32-bit Q3.28 fixed-point complex arithmetic.

Every value is a two's complement int32 ``raw`` with ``value = raw / 2**28``.
Multiplications round to nearest, ties to even, at bit 28; additions
saturate to the int32 range. Overflow never raises: it clamps and sets the
sticky ``saturated`` flag of the :class:`FixedContext` passed in.

All kernels operate on ``numpy.int64`` arrays holding int32-range raws, so
one definition serves scalars (0-d arrays) and whole matrices. No floating
point is used anywhere inside the arithmetic path.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

FRAC_BITS = 28
WORD_BITS = 32
SCALE = 1 << FRAC_BITS
RAW_MIN = -(1 << (WORD_BITS - 1))
RAW_MAX = (1 << (WORD_BITS - 1)) - 1
_MASK = SCALE - 1
_HALF = 1 << (FRAC_BITS - 1)

RAW_MAGIC = b"QFXCPLX1"
_HEADER = struct.Struct("<8sII")


@dataclass
class FixedContext:
    """Sticky saturation bookkeeping for one computation."""

    saturated: bool = False
    events: int = 0

    def flag(self, count: int) -> None:
        if count:
            self.saturated = True
            self.events += int(count)


def _flag(ctx: FixedContext | None, mask: np.ndarray) -> None:
    if ctx is not None:
        ctx.flag(int(np.count_nonzero(mask)))


def _saturate(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    over = (v > RAW_MAX) | (v < RAW_MIN)
    return np.clip(v, RAW_MIN, RAW_MAX), over


@dataclass(frozen=True)
class Fixed32:
    raw: int

    def __post_init__(self):
        if not RAW_MIN <= self.raw <= RAW_MAX:
            raise ValueError(f"raw value {self.raw} outside int32 range")

    @property
    def value(self) -> float:
        return dequantize(self)


def quantize(x: float, ctx: FixedContext | None = None) -> Fixed32:
    """Round ``x`` to the nearest Q3.28 grid point (ties to even), saturating."""
    if math.isnan(x):
        raise ValueError("cannot quantize NaN")
    if math.isinf(x):
        raw = RAW_MAX if x > 0 else RAW_MIN
        if ctx is not None:
            ctx.flag(1)
        return Fixed32(raw)
    # scaling by a power of two is exact, Python's round() is half-to-even
    raw = round(x * SCALE)
    if raw > RAW_MAX or raw < RAW_MIN:
        raw = RAW_MAX if raw > RAW_MAX else RAW_MIN
        if ctx is not None:
            ctx.flag(1)
    return Fixed32(raw)


def dequantize(f: Fixed32 | int) -> float:
    raw = f.raw if isinstance(f, Fixed32) else int(f)
    return raw / SCALE


class FixedComplex:
    """Array (or scalar) of Q3.28 complex numbers stored as raw int64 pairs."""

    __slots__ = ("re", "im")

    def __init__(self, re, im):
        re = np.asarray(re, dtype=np.int64)
        im = np.asarray(im, dtype=np.int64)
        if re.shape != im.shape:
            raise ValueError(f"re/im shape mismatch {re.shape} vs {im.shape}")
        self.re = re
        self.im = im

    @classmethod
    def zeros(cls, shape) -> FixedComplex:
        return cls(np.zeros(shape, np.int64), np.zeros(shape, np.int64))

    @classmethod
    def from_complex(cls, z, ctx: FixedContext | None = None) -> FixedComplex:
        """Vectorised quantisation of a complex scalar or array."""
        z = np.asarray(z, dtype=np.complex128)
        if np.isnan(z.real).any() or np.isnan(z.imag).any():
            raise ValueError("cannot quantize NaN")
        parts = []
        for part in (z.real, z.imag):
            with np.errstate(over="ignore", invalid="ignore"):
                scaled = np.rint(part * SCALE)
            clipped = np.clip(scaled, RAW_MIN, RAW_MAX)
            _flag(ctx, clipped != scaled)
            parts.append(clipped.astype(np.int64))
        return cls(*parts)

    def to_complex(self) -> np.ndarray:
        return (self.re / SCALE) + 1j * (self.im / SCALE)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.re.shape

    def __getitem__(self, item) -> FixedComplex:
        return FixedComplex(self.re[item], self.im[item])

    def reshape(self, *shape) -> FixedComplex:
        return FixedComplex(self.re.reshape(*shape), self.im.reshape(*shape))

    def transpose(self, axes) -> FixedComplex:
        return FixedComplex(self.re.transpose(axes), self.im.transpose(axes))

    def __eq__(self, other) -> bool:
        if not isinstance(other, FixedComplex):
            return NotImplemented
        return np.array_equal(self.re, other.re) and np.array_equal(self.im, other.im)

    def __repr__(self) -> str:
        if self.re.ndim == 0:
            return f"FixedComplex(re={int(self.re)}, im={int(self.im)})"
        return f"FixedComplex(shape={self.shape})"


def round_product_sum(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Return ``round((p - q) / 2**28)`` exactly, ties to even.

    ``p`` and ``q`` are exact int64 products of two int32 raws. Their
    difference can reach 2**63, so the high and low parts are combined
    separately to stay inside int64.
    """
    hi = (p >> FRAC_BITS) - (q >> FRAC_BITS)
    lo = (p & _MASK) - (q & _MASK)
    hi = hi + (lo >> FRAC_BITS)
    lo = lo & _MASK
    up = (lo > _HALF) | ((lo == _HALF) & ((hi & 1) == 1))
    return hi + up.astype(np.int64)


def mul_arrays(ar, ai, br, bi):
    """Raw complex product; returns ``(re, im, saturated_mask)``."""
    re = round_product_sum(ar * br, ai * bi)
    im = round_product_sum(ar * bi, -(ai * br))
    re, sre = _saturate(re)
    im, sim = _saturate(im)
    return re, im, sre | sim


def add_arrays(ar, ai, br, bi):
    re, sre = _saturate(ar + br)
    im, sim = _saturate(ai + bi)
    return re, im, sre | sim


def mac_arrays(accr, acci, ar, ai, br, bi):
    """``acc + a*b`` as ``fc_mul`` followed by ``fc_add``."""
    pr, pi, s1 = mul_arrays(ar, ai, br, bi)
    re, im, s2 = add_arrays(accr, acci, pr, pi)
    return re, im, s1 | s2


def fc_add(a: FixedComplex, b: FixedComplex, ctx: FixedContext | None = None) -> FixedComplex:
    re, im, sat = add_arrays(a.re, a.im, b.re, b.im)
    _flag(ctx, sat)
    return FixedComplex(re, im)


def fc_mul(a: FixedComplex, b: FixedComplex, ctx: FixedContext | None = None) -> FixedComplex:
    re, im, sat = mul_arrays(a.re, a.im, b.re, b.im)
    _flag(ctx, sat)
    return FixedComplex(re, im)


def fc_mac(
    acc: FixedComplex, a: FixedComplex, b: FixedComplex, ctx: FixedContext | None = None
) -> FixedComplex:
    """Multiply-accumulate shared by every fixed-point GEMM backend."""
    re, im, sat = mac_arrays(acc.re, acc.im, a.re, a.im, b.re, b.im)
    _flag(ctx, sat)
    return FixedComplex(re, im)


def write_raw(path: str | Path, m: FixedComplex) -> None:
    """Dump a matrix as little-endian int32 (re, im) pairs, row-major.

    The 16-byte header holds the 8-byte magic ``QFXCPLX1`` then uint32 rows
    and uint32 cols.
    """
    if len(m.shape) != 2:
        raise ValueError("raw dump requires a 2-D matrix")
    rows, cols = m.shape
    data = np.empty((rows, cols, 2), dtype="<i4")
    data[..., 0] = m.re
    data[..., 1] = m.im
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(RAW_MAGIC, rows, cols))
        fh.write(data.tobytes())


def read_raw(path: str | Path) -> FixedComplex:
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise ValueError("raw file shorter than header")
    magic, rows, cols = _HEADER.unpack_from(blob)
    if magic != RAW_MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    expected = _HEADER.size + rows * cols * 8
    if len(blob) != expected:
        raise ValueError(f"expected {expected} bytes, got {len(blob)}")
    data = np.frombuffer(blob, dtype="<i4", offset=_HEADER.size).reshape(rows, cols, 2)
    return FixedComplex(data[..., 0].astype(np.int64), data[..., 1].astype(np.int64))
