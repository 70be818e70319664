"""Leaf compression: half floats with shared sign/exponent tuples.

A leaf of up to 16 points is serialized into one blob. Every field is
appended LSB-first into a little-endian bitstream (bit k of the stream
lives in byte k // 8 at bit k % 8):

    byte 0   header: bit0 = cX, bit1 = cY, bit2 = cZ, bits 3..7 zero
    next     count x 10-bit mantissas for x, then for y, then for z
    next     one 6-bit <sign, exponent> tuple per *compressed* coordinate,
             in x, y, z order
    next     count 6-bit tuples per *uncompressed* coordinate, x, y, z
             order, point order within a coordinate
    finally  zero padding up to a multiple of 16 bytes

The 6-bit tuple is the top of the half pattern, (sign << 5) | exponent,
so a half reassembles as (tuple << 10) | mantissa. Flag cC is set when
every point in the leaf stores identical sign and exponent bits for
coordinate c; the leaf then pays 6 bits once instead of per point. The
point count is not stored here, it lives in the leaf node.

Unpadded size in bits is 8 + 30n + 6k + 6n(3 - k) for n points and k
set flags; the padded byte size is ceil(bits / 128) * 16. A full leaf
of 15 points with all three flags set packs into 64 bytes against 180
bytes of raw float32 storage.

Any coordinate at or beyond 65520 in magnitude would round to infinity
in half precision; such a leaf is uncompressible and the tree stores it
as raw 32-bit points instead.
"""

from __future__ import annotations

import numpy as np

from .floats import single_to_half_bits

__all__ = [
    "MAX_LEAF_POINTS",
    "SLICE_BYTES",
    "RAW_POINT_BYTES",
    "blob_size",
    "unpadded_bits",
    "compress_leaf",
    "decompress_leaf",
    "header_flags",
]

MAX_LEAF_POINTS = 16
SLICE_BYTES = 16  # blobs are padded to whole 128-bit slices
RAW_POINT_BYTES = 12  # 3 coordinates x 4 bytes, the uncompressed layout

_MANT_BITS = 10
_TUPLE_BITS = 6


def _check_count(count: int) -> int:
    n = int(count)
    if not 1 <= n <= MAX_LEAF_POINTS:
        raise ValueError(f"leaf holds 1..{MAX_LEAF_POINTS} points, got {n}")
    return n


def unpadded_bits(count: int, flags: int) -> int:
    """Bit length of the stream before slice padding."""
    n = _check_count(count)
    if not 0 <= flags <= 7:
        raise ValueError("flags is a 3-bit mask")
    k = bin(flags).count("1")
    return 8 + 3 * n * _MANT_BITS + _TUPLE_BITS * k + _TUPLE_BITS * n * (3 - k)


def blob_size(count: int, flags: int) -> int:
    """Padded blob size in bytes for a leaf of `count` points."""
    bits = unpadded_bits(count, flags)
    slices = -(-bits // (SLICE_BYTES * 8))
    return slices * SLICE_BYTES


def _append_fields(buf: np.ndarray, pos: int, values: np.ndarray, width: int) -> int:
    """Append fixed-width fields LSB-first at bit offset `pos`."""
    vals = np.asarray(values, dtype=np.uint16)
    starts = pos + np.arange(vals.size, dtype=np.intp) * width
    for j in range(width):
        buf[starts + j] = (vals >> j) & 1
    return pos + vals.size * width


def _read_fields(bits: np.ndarray, pos: int, n_values: int, width: int):
    seg = bits[pos : pos + n_values * width].reshape(n_values, width)
    weights = 1 << np.arange(width, dtype=np.int64)
    vals = (seg.astype(np.int64) * weights).sum(axis=1).astype(np.uint16)
    return vals, pos + n_values * width


def compress_leaf(points) -> bytes | None:
    """Serialize a leaf's points, or None when half precision overflows.

    `points` is (count, 3) float32. Flags are computed, never chosen:
    a coordinate is compressed exactly when all its sign/exponent pairs
    coincide. Output is deterministic for identical input.
    """
    pts = np.ascontiguousarray(points, dtype=np.float32)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError("expected (count, 3) points")
    n = _check_count(pts.shape[0])
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")

    halves = single_to_half_bits(pts)  # (n, 3) uint16
    tuples = halves >> _MANT_BITS
    if np.any((tuples & 0x1F) == 0x1F):  # rounded to infinity
        return None
    mantissas = halves & 0x3FF

    flags = 0
    for c in range(3):
        if np.all(tuples[:, c] == tuples[0, c]):
            flags |= 1 << c

    buf = np.zeros(blob_size(n, flags) * 8, dtype=np.uint8)
    pos = _append_fields(buf, 0, np.array([flags], dtype=np.uint16), 8)
    pos = _append_fields(buf, pos, mantissas.T.ravel(), _MANT_BITS)
    for c in range(3):
        if flags & (1 << c):
            pos = _append_fields(buf, pos, tuples[:1, c], _TUPLE_BITS)
    for c in range(3):
        if not flags & (1 << c):
            pos = _append_fields(buf, pos, tuples[:, c], _TUPLE_BITS)
    return np.packbits(buf, bitorder="little").tobytes()


def decompress_leaf(blob, count: int) -> np.ndarray:
    """Recover the (count, 3) half bit patterns from a blob.

    Raises ValueError on reserved header bits or a length that does not
    match the count and flags.
    """
    n = _check_count(count)
    data = np.frombuffer(blob, dtype=np.uint8)
    bits = np.unpackbits(data, bitorder="little")
    if bits[3:8].any():
        raise ValueError("reserved header bits set")
    flags = int(bits[0]) | int(bits[1]) << 1 | int(bits[2]) << 2
    if data.size != blob_size(n, flags):
        raise ValueError(
            f"blob is {data.size} bytes, expected {blob_size(n, flags)} "
            f"for count={n} flags={flags:03b}"
        )

    mans, pos = _read_fields(bits, 8, 3 * n, _MANT_BITS)
    mans = mans.reshape(3, n)

    tuples = np.empty((3, n), dtype=np.uint16)
    for c in range(3):
        if flags & (1 << c):
            val, pos = _read_fields(bits, pos, 1, _TUPLE_BITS)
            tuples[c, :] = val[0]
    for c in range(3):
        if not flags & (1 << c):
            tuples[c], pos = _read_fields(bits, pos, n, _TUPLE_BITS)

    halves = (tuples << _MANT_BITS) | mans
    return np.ascontiguousarray(halves.T)


def header_flags(blob) -> int:
    """The 3-bit coordinate-sharing mask of a blob."""
    b = blob[0] if isinstance(blob, (bytes, bytearray, memoryview)) else int(blob[0])
    if b & ~0x07:
        raise ValueError("reserved header bits set")
    return b & 0x07
