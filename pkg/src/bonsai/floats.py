"""Reduced-precision float formats and worst-case conversion error tables.

The tree stores leaf coordinates as IEEE half precision (1 sign, 5
exponent, 10 mantissa bits). Narrowing a single-precision value rounds
to the nearest representable half (ties to even), and the magnitude of
that rounding error is at most half an ULP of the destination binade,
which depends only on the stored exponent field:

    e >= 1:  2^(e - 15) * 2^-11      (normal binade e)
    e == 0:  2^-25                   (subnormal grid)

Those bounds, doubled and squared, are precomputed in two 31-entry
tables indexed by exponent field; the classifier reads them to build a
worst-case error shell around approximate squared distances. Looking up
by the exponent of the *stored* value is conservative at binade
boundaries (a value that rounds upward into the next binade gets a
bound twice its true error), so the tables never understate.

Alternate formats (bfloat16, a 24-bit custom layout) exist only for the
representation study; the codec and search paths are half-only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ReducedFormat",
    "BINARY32",
    "HALF",
    "BFLOAT16",
    "CUSTOM24",
    "STUDY_FORMATS",
    "to_reduced",
    "to_reduced_array",
    "widen",
    "widen_array",
    "exponent_field",
    "single_to_half_bits",
    "half_bits_to_single",
    "max_rounding_error",
    "HALF_TWO_DELTA",
    "HALF_DELTA_SQ",
    "HALF_FINITE_EXPONENT_FIELDS",
]


@dataclass(frozen=True)
class ReducedFormat:
    """A 1 + exponent_bits + mantissa_bits binary float layout.

    Bounds keep every finite value of the format exactly representable
    in single precision, so widening is lossless: at most 8 exponent
    bits, at most 23 mantissa bits, at most 32 bits total.
    """

    name: str
    exponent_bits: int
    mantissa_bits: int

    def __post_init__(self) -> None:
        if not 2 <= self.exponent_bits <= 8:
            raise ValueError("exponent_bits must be in [2, 8]")
        if not 1 <= self.mantissa_bits <= 23:
            raise ValueError("mantissa_bits must be in [1, 23]")
        if 1 + self.exponent_bits + self.mantissa_bits > 32:
            raise ValueError("format wider than 32 bits")

    @property
    def bias(self) -> int:
        return (1 << (self.exponent_bits - 1)) - 1

    @property
    def total_bits(self) -> int:
        return 1 + self.exponent_bits + self.mantissa_bits

    @property
    def max_exponent_field(self) -> int:
        # the all-ones field encodes Inf/NaN, not finite values
        return (1 << self.exponent_bits) - 2

    @property
    def max_finite(self) -> float:
        frac = 2.0 - 2.0 ** -self.mantissa_bits
        return frac * 2.0 ** (self.max_exponent_field - self.bias)

    @property
    def overflow_threshold(self) -> float:
        """Smallest magnitude that rounds past max_finite to infinity."""
        frac = 2.0 - 2.0 ** -(self.mantissa_bits + 1)
        return frac * 2.0 ** (self.max_exponent_field - self.bias)


BINARY32 = ReducedFormat("binary32", 8, 23)
HALF = ReducedFormat("half", 5, 10)
BFLOAT16 = ReducedFormat("bfloat16", 8, 7)
CUSTOM24 = ReducedFormat("custom24", 5, 18)

STUDY_FORMATS = (BINARY32, HALF, BFLOAT16, CUSTOM24)

HALF_FINITE_EXPONENT_FIELDS = 31  # fields 0..30; 31 is Inf/NaN


def to_reduced_array(values, fmt: ReducedFormat = HALF) -> np.ndarray:
    """Round single-precision values to `fmt` bit patterns, ties to even.

    Returns uint32 patterns right-aligned in the low `fmt.total_bits`
    bits, same shape as the input. Raises ValueError on non-finite
    input and OverflowError when a value would round to infinity.
    """
    v = np.asarray(values, dtype=np.float32)
    if not np.all(np.isfinite(v)):
        raise ValueError("cannot reduce non-finite values")
    mb, bias = fmt.mantissa_bits, fmt.bias

    a = np.abs(v.astype(np.float64))
    _, bexp = np.frexp(a)  # a = m * 2^bexp with m in [0.5, 1)
    exp = bexp.astype(np.int64) - 1
    min_normal_exp = 1 - bias
    sub = a < 2.0 ** min_normal_exp  # includes +-0
    exp = np.where(sub, min_normal_exp, exp)

    # Scale so the target mantissa sits at integer precision, then round.
    # The scaling is a power of two, hence exact in float64.
    sig = np.rint(np.ldexp(a, (mb - exp).astype(np.int64)))
    carry = ~sub & (sig >= 2.0 ** (mb + 1))  # mantissa overflow bumps the binade
    exp = exp + carry
    sig = np.where(carry, 2.0 ** mb, sig)

    field = exp + bias
    if np.any(~sub & (field > fmt.max_exponent_field)):
        raise OverflowError(f"value overflows {fmt.name}")

    isig = sig.astype(np.int64)
    # Subnormal patterns are the raw significand; a significand that
    # rounded up to 2^mb lands on the min-normal pattern by construction.
    norm_bits = (field << mb) | (isig - (1 << mb))
    bits = np.where(sub, isig, norm_bits).astype(np.uint32)
    sign = np.signbit(v).astype(np.uint32)
    return bits | (sign << np.uint32(fmt.total_bits - 1))


def to_reduced(value: float, fmt: ReducedFormat = HALF) -> int:
    """Scalar `to_reduced_array`: one value to one bit pattern."""
    f = float(value)
    if f != f:
        raise ValueError("cannot reduce NaN")
    return int(to_reduced_array(np.float32(f), fmt))


def widen_array(bits, fmt: ReducedFormat = HALF) -> np.ndarray:
    """Decode `fmt` bit patterns to float32, exactly (no rounding).

    Raises ValueError if any pattern has the all-ones exponent field
    (Inf/NaN are never stored).
    """
    b = np.asarray(bits, dtype=np.uint32)
    mb, eb, bias = fmt.mantissa_bits, fmt.exponent_bits, fmt.bias
    field = ((b >> np.uint32(mb)) & np.uint32((1 << eb) - 1)).astype(np.int64)
    if np.any(field == (1 << eb) - 1):
        raise ValueError("non-finite bit pattern")
    man = (b & np.uint32((1 << mb) - 1)).astype(np.int64)
    sign = (b >> np.uint32(fmt.total_bits - 1)) & np.uint32(1)

    norm = field > 0
    sig = np.where(norm, man + (1 << mb), man)
    exp = np.where(norm, field - bias - mb, 1 - bias - mb)
    mag = np.ldexp(sig.astype(np.float64), exp)
    return np.where(sign == 1, -mag, mag).astype(np.float32)


def widen(bits: int, fmt: ReducedFormat = HALF) -> np.float32:
    """Scalar `widen_array`: one bit pattern to one float32."""
    h = int(bits)
    if not 0 <= h < (1 << fmt.total_bits):
        raise ValueError(f"pattern out of range for {fmt.name}")
    return widen_array(h, fmt)[()]


def exponent_field(bits: int, fmt: ReducedFormat = HALF) -> int:
    """Biased exponent field of a bit pattern."""
    return (int(bits) >> fmt.mantissa_bits) & ((1 << fmt.exponent_bits) - 1)


def single_to_half_bits(values) -> np.ndarray:
    """float32 array to half bit patterns via the IEEE cast.

    Overflow produces the Inf pattern silently; callers decide whether
    that poisons the batch. Matches `to_reduced_array(values, HALF)` on
    every value that fits (tests hold the two paths together).
    """
    v = np.asarray(values, dtype=np.float32)
    with np.errstate(over="ignore"):
        return v.astype(np.float16).view(np.uint16)


def half_bits_to_single(bits) -> np.ndarray:
    """Half bit patterns to float32, exact."""
    b = np.ascontiguousarray(bits, dtype=np.uint16)
    return b.view(np.float16).astype(np.float32)


def max_rounding_error(exp_field: int) -> np.float32:
    """Worst-case |widen(to_reduced(v)) - v| for halves stored with this exponent.

    Half an ULP of the binade the value was rounded into. Field 0 is the
    subnormal grid whose spacing is 2^-24 everywhere.
    """
    e = int(exp_field)
    if not 0 <= e < HALF_FINITE_EXPONENT_FIELDS:
        raise ValueError("exponent field must be in [0, 30]")
    if e == 0:
        return np.float32(2.0 ** -25)
    return np.float32(2.0 ** (e - 26))


def _build_error_tables() -> tuple[np.ndarray, np.ndarray]:
    mre = np.array(
        [max_rounding_error(e) for e in range(HALF_FINITE_EXPONENT_FIELDS)],
        dtype=np.float64,
    )
    two_delta = (2.0 * mre).astype(np.float32)
    delta_sq = (mre * mre).astype(np.float32)  # powers of two, exact in float32
    return two_delta, delta_sq


# Indexed by the exponent field of the stored half: 2*max(|rounding error|)
# and max(|rounding error|)^2, the two terms of the per-coordinate bound.
HALF_TWO_DELTA, HALF_DELTA_SQ = _build_error_tables()
