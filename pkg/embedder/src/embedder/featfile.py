"""FVEC1 feature-file container.

Layout: magic ``FVEC1``, then u32 row count n, u32 dimension d, u16 tag
length (all little-endian), the UTF-8 layer tag, and n*d float32 values,
little-endian, row-major. The declared n*d must match the body exactly,
with no trailing bytes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"FVEC1"
_HEADER = struct.Struct("<5sIIH")


class FeatureFileError(Exception):
    """Structurally invalid feature file."""


def write_fvec(path, data: np.ndarray, tag: str = "") -> None:
    """Serialize an n x d float matrix."""
    arr = np.ascontiguousarray(np.asarray(data, dtype="<f4"))
    if arr.ndim != 2:
        raise ValueError("feature data must be a 2-D (n, d) matrix")
    raw_tag = tag.encode("utf-8")
    if len(raw_tag) > 0xFFFF:
        raise ValueError("layer tag too long")
    with open(Path(path), "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, arr.shape[0], arr.shape[1], len(raw_tag)))
        fh.write(raw_tag)
        fh.write(arr.tobytes())


def read_fvec(path):
    """Parse a feature file into (float32 matrix, layer tag)."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FeatureFileError(f"{path}: truncated header")
    magic, n, d, tlen = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FeatureFileError(f"{path}: bad magic {magic!r}")
    offset = _HEADER.size
    if len(raw) < offset + tlen:
        raise FeatureFileError(f"{path}: truncated layer tag")
    try:
        tag = raw[offset : offset + tlen].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FeatureFileError(f"{path}: layer tag is not UTF-8") from exc
    offset += tlen
    body = raw[offset:]
    expected = n * d * 4
    if len(body) != expected:
        raise FeatureFileError(
            f"{path}: body holds {len(body)} bytes, header declares {expected}"
        )
    data = np.frombuffer(body, dtype="<f4").reshape(n, d).copy()
    return data, tag


@dataclass
class CheckReport:
    """Outcome of a structural and numeric feature-file audit."""

    path: str
    ok: bool = True
    problems: list = field(default_factory=list)
    n: int = 0
    d: int = 0
    tag: str = ""
    stats: dict = field(default_factory=dict)

    def lines(self):
        head = "OK" if self.ok else "FLAGGED"
        out = [f"{head} {self.path}: n={self.n} d={self.d} tag={self.tag!r}"]
        for key in ("min", "max", "mean", "std"):
            if key in self.stats:
                out.append(f"  {key} = {self.stats[key]!r}")
        out.extend(f"  problem: {p}" for p in self.problems)
        return out


def selfcheck(path) -> CheckReport:
    """Audit one feature file: structure, finiteness, moment summary."""
    report = CheckReport(path=str(path))
    try:
        data, tag = read_fvec(path)
    except FeatureFileError as exc:
        report.ok = False
        report.problems.append(str(exc))
        return report
    report.n, report.d = data.shape
    report.tag = tag
    if data.size:
        report.stats = {
            "min": float(np.nanmin(data)),
            "max": float(np.nanmax(data)),
            "mean": float(np.nanmean(data)),
            "std": float(np.nanstd(data)),
        }
        bad = int(np.size(data) - np.count_nonzero(np.isfinite(data)))
        if bad:
            report.ok = False
            report.problems.append(f"{bad} non-finite entries")
    return report
