"""Minimal dataset-manifest reader.

Reads the shared CSV schema (header starting ``id,path,class``) far enough
to select images: later columns are ignored. Relative image paths resolve
against the manifest file's directory, and row order is preserved — the
extractor writes one feature row per image in exactly this order.
"""

from __future__ import annotations

import csv
import os
from pathlib import Path


class ManifestError(Exception):
    """Malformed manifest file."""


def read_manifest(path, cls: str = None) -> list:
    """Return (id, resolved path) pairs, optionally filtered by class."""
    base = Path(path).parent
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ManifestError(f"{path}: empty file") from None
        if header[:3] != ["id", "path", "class"]:
            raise ManifestError(f"{path}: header must start with id,path,class")
        for lineno, row in enumerate(reader, 2):
            if len(row) < 3:
                raise ManifestError(f"{path}: line {lineno}: expected >= 3 fields")
            rid, rpath, rcls = row[0], row[1], row[2]
            if cls is not None and rcls != cls:
                continue
            if not os.path.isabs(rpath):
                rpath = str(base / rpath)
            rows.append((rid, rpath))
    return rows
