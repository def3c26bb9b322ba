"""Output tables (CSV and gnuplot data) and portable bitmap input."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray


@dataclass(frozen=True, eq=False)
class OutputTable:
    """Rectangular numeric table; column names carry units, e.g. ``x_mm``."""

    columns: tuple[str, ...]
    data: NDArray
    metadata: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2 or data.shape[1] != len(self.columns):
            raise ValueError("table data must be 2D with one column per name")
        if not np.all(np.isfinite(data)):
            raise ValueError("table values must be finite")
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "data", data)

    @classmethod
    def from_columns(cls, columns: dict, metadata: dict | None = None) -> "OutputTable":
        names = tuple(columns)
        data = np.column_stack([np.asarray(columns[n], dtype=float).ravel() for n in names])
        return cls(names, data, dict(metadata or {}))

    def column(self, name: str) -> NDArray:
        return self.data[:, self.columns.index(name)]


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_csv(table: OutputTable, path) -> None:
    buf = io.StringIO()
    for key in sorted(table.metadata):
        buf.write(f"# {key}: {table.metadata[key]}\n")
    buf.write(",".join(table.columns) + "\n")
    for row in table.data:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="\n")


def read_csv(path) -> OutputTable:
    meta = {}
    rows = []
    header = None
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(": ")
            meta[key] = value
        elif header is None:
            header = tuple(line.split(","))
        elif line:
            rows.append([float(v) for v in line.split(",")])
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return OutputTable(header, data, meta)


def write_gnuplot(table: OutputTable, path, block: int | None = None) -> None:
    """Whitespace columns; a blank line every ``block`` rows for gnuplot ``splot`` maps."""
    buf = io.StringIO()
    buf.write("# " + " ".join(table.columns) + "\n")
    for i, row in enumerate(table.data):
        if block and i and i % block == 0:
            buf.write("\n")
        buf.write(" ".join(_fmt(v) for v in row) + "\n")
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="\n")


# ---------------------------------------------------------------------------
# Netpbm


def _tokens(data: bytes, count: int, pos: int):
    out = []
    while len(out) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise ValueError("truncated netpbm header")
        out.append(data[start:pos])
    return out, pos


def read_pnm(path) -> NDArray:
    """Read PBM/PGM as transmission in [0, 1], rows top to bottom.

    PBM set pixels (1, drawn black) transmit; PGM grey level / maxval is the transmission.
    """
    data = Path(path).read_bytes()
    magic = data[:2]
    if magic not in (b"P1", b"P2", b"P4", b"P5"):
        raise ValueError(f"unsupported netpbm format {magic!r}")
    is_pbm = magic in (b"P1", b"P4")
    (w, h), pos = _tokens(data, 2, 2)
    w, h = int(w), int(h)
    maxval = 1
    if not is_pbm:
        (mv,), pos = _tokens(data, 1, pos)
        maxval = int(mv)
    if magic == b"P1":
        bits = [c for c in data[pos:].decode("ascii") if c in "01"]
        img = np.array(bits[: w * h], dtype=float)
    elif magic == b"P2":
        vals, _ = _tokens(data, w * h, pos)
        img = np.array([int(v) for v in vals], dtype=float) / maxval
    else:
        raw = data[pos + 1:]
        if magic == b"P4":
            stride = (w + 7) // 8
            packed = np.frombuffer(raw[: stride * h], dtype=np.uint8).reshape(h, stride)
            return np.unpackbits(packed, axis=1)[:, :w].astype(float)
        dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
        img = np.frombuffer(raw, dtype=dtype, count=w * h).astype(float) / maxval
    if img.size != w * h:
        raise ValueError("netpbm pixel data is truncated")
    return img.reshape(h, w)


def write_pbm(bitmap: NDArray, path) -> None:
    bitmap = np.asarray(bitmap)
    h, w = bitmap.shape
    lines = [f"P1\n{w} {h}"] + [" ".join("1" if v else "0" for v in row) for row in bitmap]
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def bitmap_on_grid(bitmap: NDArray, width: float, height: float, x: NDArray, y: NDArray) -> NDArray:
    """Sample a bitmap of physical size ``width x height`` (centred) at points (x, y)."""
    h, w = bitmap.shape
    col = np.floor((np.asarray(x) + width / 2) / width * w).astype(int)
    row = np.floor((height / 2 - np.asarray(y)) / height * h).astype(int)
    inside = (col >= 0) & (col < w) & (row >= 0) & (row < h)
    return np.where(inside, bitmap[np.clip(row, 0, h - 1), np.clip(col, 0, w - 1)], 0.0)


def fixture_path(name: str = "umbc.pbm") -> Path:
    return Path(__file__).with_name("data") / name


def cell_count(extent: float, spacing: float) -> int:
    return int(math.ceil(extent / spacing))
