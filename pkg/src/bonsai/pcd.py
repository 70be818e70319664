"""PCD v0.7 reader and writer, x/y/z float32 only.

Reads ascii and binary bodies, tolerates extra fields (ignored) and
drops non-finite points, reporting how many. Writes minimal three-field
files. binary_compressed is out of scope.
"""

from __future__ import annotations

import io
from typing import NamedTuple

import numpy as np

from .tree import PointCloud

__all__ = ["PcdReadResult", "read_pcd", "write_pcd", "read_pcd_file", "write_pcd_file"]

_HEADER_KEYS = (
    "VERSION",
    "FIELDS",
    "SIZE",
    "TYPE",
    "COUNT",
    "WIDTH",
    "HEIGHT",
    "VIEWPOINT",
    "POINTS",
    "DATA",
)


class PcdReadResult(NamedTuple):
    cloud: PointCloud
    dropped: int  # points removed for NaN/Inf coordinates


def _parse_header(data: bytes):
    header: dict[str, list[str]] = {}
    pos = 0
    while True:
        eol = data.find(b"\n", pos)
        if eol < 0:
            raise ValueError("truncated PCD header")
        line = data[pos:eol].decode("ascii", errors="replace").strip()
        pos = eol + 1
        if not line or line.startswith("#"):
            continue
        key, *rest = line.split()
        key = key.upper()
        if key not in _HEADER_KEYS:
            raise ValueError(f"unexpected header line {line!r}")
        header[key] = rest
        if key == "DATA":
            break
    for required in ("FIELDS", "SIZE", "TYPE", "COUNT", "DATA"):
        if required not in header:
            raise ValueError(f"header missing {required}")
    return header, pos


def read_pcd(data: bytes) -> PcdReadResult:
    """Parse one PCD blob into a cloud plus the dropped-point count."""
    header, body_start = _parse_header(data)
    fields = header["FIELDS"]
    sizes = [int(s) for s in header["SIZE"]]
    types = [t.upper() for t in header["TYPE"]]
    counts = [int(c) for c in header["COUNT"]]
    if not len(fields) == len(sizes) == len(types) == len(counts):
        raise ValueError("FIELDS/SIZE/TYPE/COUNT lengths disagree")

    if "POINTS" in header:
        n_points = int(header["POINTS"][0])
    else:
        n_points = int(header["WIDTH"][0]) * int(header.get("HEIGHT", ["1"])[0])
    if "WIDTH" in header and "HEIGHT" in header and "POINTS" in header:
        if int(header["WIDTH"][0]) * int(header["HEIGHT"][0]) != n_points:
            raise ValueError("POINTS does not equal WIDTH * HEIGHT")

    for axis in ("x", "y", "z"):
        if axis not in fields:
            raise ValueError(f"missing field {axis}")
        i = fields.index(axis)
        if types[i] != "F" or sizes[i] != 4 or counts[i] != 1:
            raise ValueError(f"field {axis} must be a scalar 4-byte float")

    mode = header["DATA"][0].lower()
    body = data[body_start:]
    if mode == "ascii":
        xyz = _read_ascii(body, fields, counts, n_points)
    elif mode == "binary":
        xyz = _read_binary(body, fields, sizes, types, counts, n_points)
    else:
        raise ValueError(f"unsupported DATA mode {mode!r}")

    finite = np.isfinite(xyz).all(axis=1)
    dropped = int(xyz.shape[0] - np.count_nonzero(finite))
    frame_id = ""
    return PcdReadResult(PointCloud(xyz[finite], frame_id), dropped)


def _read_ascii(body: bytes, fields, counts, n_points) -> np.ndarray:
    cols = {}
    col = 0
    for name, c in zip(fields, counts):
        cols[name] = col
        col += c
    text = body.decode("ascii", errors="replace")
    usecols = (cols["x"], cols["y"], cols["z"])
    if n_points == 0:
        return np.empty((0, 3), dtype=np.float32)
    try:
        arr = np.loadtxt(io.StringIO(text), dtype=np.float64, usecols=usecols, ndmin=2)
    except ValueError as exc:
        raise ValueError(f"malformed ascii body: {exc}") from None
    if arr.shape[0] != n_points:
        raise ValueError(f"expected {n_points} rows, found {arr.shape[0]}")
    return arr.astype(np.float32)


def _read_binary(body: bytes, fields, sizes, types, counts, n_points) -> np.ndarray:
    type_map = {"F": "f", "U": "u", "I": "i"}
    names, formats, offsets = [], [], []
    off = 0
    for name, size, typ, count in zip(fields, sizes, types, counts):
        for sub in range(count):
            names.append(f"{name}_{sub}" if count > 1 else name)
            formats.append(f"<{type_map[typ]}{size}")
            offsets.append(off)
            off += size
    stride = off
    if len(body) < stride * n_points:
        raise ValueError("binary body shorter than POINTS * stride")
    dt = np.dtype({"names": names, "formats": formats, "offsets": offsets, "itemsize": stride})
    rec = np.frombuffer(body, dtype=dt, count=n_points)
    return np.column_stack([rec["x"], rec["y"], rec["z"]]).astype(np.float32)


def _fmt(v: np.float32) -> str:
    # 9 significant digits round-trip any float32 exactly
    return f"{float(v):.9g}"


def write_pcd(cloud: PointCloud, mode: str = "binary") -> bytes:
    """Serialize a cloud. ascii keeps full float32 precision."""
    if mode not in ("ascii", "binary"):
        raise ValueError(f"unsupported DATA mode {mode!r}")
    n = len(cloud)
    head = (
        "# .PCD v0.7 - Point Cloud Data file format\n"
        "VERSION 0.7\n"
        "FIELDS x y z\n"
        "SIZE 4 4 4\n"
        "TYPE F F F\n"
        "COUNT 1 1 1\n"
        f"WIDTH {n}\n"
        "HEIGHT 1\n"
        "VIEWPOINT 0 0 0 1 0 0 0\n"
        f"POINTS {n}\n"
        f"DATA {mode}\n"
    ).encode("ascii")
    if mode == "binary":
        return head + cloud.xyz.astype("<f4").tobytes()
    rows = "".join(
        f"{_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])}\n" for p in cloud.xyz
    )
    return head + rows.encode("ascii")


def read_pcd_file(path) -> PcdReadResult:
    with open(path, "rb") as fh:
        return read_pcd(fh.read())


def write_pcd_file(cloud: PointCloud, path, mode: str = "binary") -> None:
    with open(path, "wb") as fh:
        fh.write(write_pcd(cloud, mode))
