"""Dataset manifests and the train/validation/test split protocol.

A manifest is an ordered list of image records serialized as CSV with header
``id,path,class,split,origin,annotated``. The split protocol assigns, per
class: 150 random clean images to validation, 100 random clean images to
test, every remaining clean image to training, and up to 200 random
annotated images to test (annotated images never train); leftover annotated
images are excluded.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import (
    EmptyManifestError,
    InsufficientImagesError,
    InvalidParamError,
    ParseError,
)
from .rng import make_rng

SPLITS = ("none", "train", "val", "test", "excluded")
ORIGINS = ("real", "dup", "aug")
HEADER = ["id", "path", "class", "split", "origin", "annotated"]

VAL_PER_CLASS = 150
TEST_CLEAN_PER_CLASS = 100
TEST_ANNOTATED_CAP = 200


@dataclass(frozen=True)
class Record:
    """One image entry; ``cls`` is the class label (CSV column ``class``)."""

    id: str
    path: str
    cls: str
    split: str = "none"
    origin: str = "real"
    annotated: bool = False

    def validate(self) -> None:
        if not self.id:
            raise ValueError("empty id")
        if not self.path:
            raise ValueError("empty path")
        if not self.cls:
            raise ValueError("empty class label")
        if self.split not in SPLITS:
            raise ValueError(f"unknown split token {self.split!r}")
        if self.origin not in ORIGINS:
            raise ValueError(f"unknown origin token {self.origin!r}")
        if self.annotated and self.split == "train":
            raise ValueError(f"annotated record {self.id!r} assigned to train")


@dataclass
class Manifest:
    """Ordered, immutable-by-convention collection of records with unique ids."""

    records: list

    def __post_init__(self):
        records = list(self.records)
        seen = set()
        for rec in records:
            rec.validate()
            if rec.id in seen:
                raise ValueError(f"duplicate id {rec.id!r}")
            seen.add(rec.id)
        self.records = records

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def classes(self) -> list:
        return sorted({r.cls for r in self.records})

    def by_class(self) -> dict:
        out = {}
        for rec in self.records:
            out.setdefault(rec.cls, []).append(rec)
        return out

    def class_counts(self, split=None) -> dict:
        out = {}
        for rec in self.records:
            if split is None or rec.split == split:
                out[rec.cls] = out.get(rec.cls, 0) + 1
        return out

    def select(self, cls=None, split=None, origin=None, annotated=None) -> list:
        out = []
        for rec in self.records:
            if cls is not None and rec.cls != cls:
                continue
            if split is not None and rec.split != split:
                continue
            if origin is not None and rec.origin != origin:
                continue
            if annotated is not None and rec.annotated != annotated:
                continue
            out.append(rec)
        return out


def load_manifest(path) -> Manifest:
    """Parse a manifest CSV; malformed content raises ParseError with the line."""
    text = Path(path).read_text(encoding="utf-8")
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ParseError("missing header", line=1)
    if rows[0] != HEADER:
        raise ParseError(f"bad header {rows[0]!r}", line=1)

    records = []
    seen = set()
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(HEADER):
            raise ParseError(f"expected {len(HEADER)} fields, got {len(row)}", line=lineno)
        rid, rpath, rcls, rsplit, rorigin, rann = row
        if rann not in ("0", "1"):
            raise ParseError(f"annotated must be 0 or 1, got {rann!r}", line=lineno)
        rec = Record(rid, rpath, rcls, rsplit, rorigin, rann == "1")
        try:
            rec.validate()
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from exc
        if rid in seen:
            raise ParseError(f"duplicate id {rid!r}", line=lineno)
        seen.add(rid)
        records.append(rec)
    return Manifest(records)


def save_manifest(m: Manifest, path) -> None:
    """Write a manifest CSV (UTF-8, LF line endings) that round-trips exactly."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    for rec in m.records:
        for value in (rec.id, rec.path, rec.cls):
            if "\n" in value or "\r" in value:
                raise ValueError(f"field with line break in record {rec.id!r}")
        writer.writerow(
            [rec.id, rec.path, rec.cls, rec.split, rec.origin, "1" if rec.annotated else "0"]
        )
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def split(
    m: Manifest,
    seed: int,
    val_per_class: int = VAL_PER_CLASS,
    test_clean_per_class: int = TEST_CLEAN_PER_CLASS,
    test_annotated_cap: int = TEST_ANNOTATED_CAP,
) -> Manifest:
    """Assign splits to an unsplit manifest, deterministically per seed.

    Per class (classes processed in sorted label order): ``val_per_class``
    random clean images go to val, ``test_clean_per_class`` further clean
    images to test, the clean remainder to train; min(cap, available)
    annotated images go to test and the rest are excluded.
    """
    if len(m) == 0:
        raise EmptyManifestError("cannot split an empty manifest")
    for rec in m:
        if rec.split != "none":
            raise InvalidParamError(f"record {rec.id!r} is already assigned to a split")

    need = val_per_class + test_clean_per_class
    rng = make_rng(seed)
    assignment = {}
    for cls in m.classes():
        clean = [r.id for r in m.select(cls=cls, annotated=False)]
        marked = [r.id for r in m.select(cls=cls, annotated=True)]
        if len(clean) < need:
            raise InsufficientImagesError(
                f"class {cls!r} has {len(clean)} clean images, needs >= {need}"
            )
        order = rng.permutation(len(clean))
        for j in order[:val_per_class]:
            assignment[clean[j]] = "val"
        for j in order[val_per_class:need]:
            assignment[clean[j]] = "test"
        for j in order[need:]:
            assignment[clean[j]] = "train"
        take = min(test_annotated_cap, len(marked))
        order = rng.permutation(len(marked))
        for j in order[:take]:
            assignment[marked[j]] = "test"
        for j in order[take:]:
            assignment[marked[j]] = "excluded"

    return Manifest([replace(rec, split=assignment[rec.id]) for rec in m])
