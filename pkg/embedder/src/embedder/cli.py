"""Command-line surface: ``extract`` and ``selfcheck``.

Exit codes match the companion measurement toolkit: 0 success, 2 usage
error, 3 contract violation (bad model, bad file, decode failures),
4 I/O failure.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .extract import (
    DEFAULT_BACKBONE,
    DEFAULT_LAYER,
    DEFAULT_SIZE,
    ExtractError,
    extract_features,
)
from .featfile import FeatureFileError, selfcheck
from .manifests import ManifestError


def cmd_extract(args) -> int:
    n, d, tag = extract_features(
        args.manifest,
        args.out,
        cls=args.cls,
        backbone=args.backbone,
        layer=args.layer,
        weights=args.weights,
        size=args.size,
        batch=args.batch,
        seed=args.seed,
        device=args.device,
    )
    print(f"wrote {n} vectors of dimension {d} to {args.out} (tag {tag!r})")
    return 0


def cmd_selfcheck(args) -> int:
    report = selfcheck(args.features)
    for line in report.lines():
        print(line)
    return 0 if report.ok else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embedder",
        description="Extract image feature vectors with a pretrained backbone.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="write one feature vector per image")
    p.add_argument("--manifest", required=True, help="dataset manifest CSV")
    p.add_argument("--class", dest="cls", help="only images of this class")
    p.add_argument("--backbone", default=DEFAULT_BACKBONE)
    p.add_argument("--layer", default=DEFAULT_LAYER, help="named module to tap")
    p.add_argument(
        "--weights",
        default="auto",
        help="'auto' (pretrained), 'none' (seeded random), or a state-dict path",
    )
    p.add_argument("--size", type=int, default=DEFAULT_SIZE, help="input side length")
    p.add_argument("--batch", type=int, default=8)
    p.add_argument("--seed", type=int, default=0, help="init seed for --weights none")
    p.add_argument("--device", default="cpu")
    p.add_argument("--out", required=True, help="output feature file")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("selfcheck", help="audit a feature file")
    p.add_argument("--features", required=True)
    p.set_defaults(func=cmd_selfcheck)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


def entry(argv=None) -> int:
    try:
        return main(argv)
    except (ExtractError, FeatureFileError, ManifestError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(entry())
