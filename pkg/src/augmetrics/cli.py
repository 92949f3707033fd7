"""Batch command-line surface.

One binary with subcommands: preprocess, similarity, fid, balance, eval,
ada-sim, grid-search. Config precedence is flags > config file > defaults;
the config file is line-based ``key = value`` text whose keys are long
option names (underscores or dashes). Every randomized command defaults to
seed 0 — never wall-clock. Commands that produce files also write a
``run.meta`` key=value file recording the resolved configuration, toolkit
version, and SHA-256 digests of the inputs, so reruns are comparable.

Exit codes: 0 success, 2 usage error, 3 contract violation, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import importlib
import io
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from . import adacontrol, augment, distprotocol, evalstats, frechet
from .errors import ParseError, ToolkitError
from .imagecore import load_mask, load_png, preprocess, save_png
from .manifest import Manifest, load_manifest, save_manifest
from .manifest import split as split_manifest
from .rng import make_rng

META_EXCLUDE = {"out", "jobs", "config", "func", "command"}


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_run_meta(outdir: Path, args, inputs: dict) -> None:
    lines = [f"command = {args.command}", f"version = {__version__}"]
    for key in sorted(vars(args)):
        if key in META_EXCLUDE:
            continue
        value = getattr(args, key)
        if callable(value):
            continue
        lines.append(f"{key} = {value}")
    for name in sorted(inputs):
        lines.append(f"digest_{name} = {_sha256(inputs[name])}")
    (outdir / "run.meta").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _read_config_flags(path) -> list:
    """Turn ``key = value`` lines into a long-option argv fragment."""
    flags = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(f"expected key = value, got {line!r}", line=lineno)
        key, value = line.split("=", 1)
        key = key.strip().replace("_", "-")
        value = value.strip()
        if not key:
            raise ParseError("empty key", line=lineno)
        flags.extend([f"--{key}", value])
    return flags


def _resolve(base: Path, path: str) -> str:
    """Paths inside a manifest resolve against the manifest's directory."""
    return path if os.path.isabs(path) else str(base / path)


def _relativize(m: Manifest, outdir: Path) -> Manifest:
    records = []
    for rec in m:
        try:
            rel = os.path.relpath(rec.path, start=outdir)
        except ValueError:
            rel = rec.path
        records.append(replace(rec, path=rel))
    return Manifest(records)


def _load_resolved(path) -> Manifest:
    m = load_manifest(path)
    base = Path(path).parent
    return Manifest([replace(r, path=_resolve(base, r.path)) for r in m])


def _comma_floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _read_label_file(path) -> list:
    return [line.strip() for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]


def _params_from_args(args) -> augment.AugmentParams:
    return augment.AugmentParams(
        rotation_max_deg=args.rot,
        shift_max_frac=args.shift / 100.0,
        stretch_max_frac=args.stretch / 100.0,
        zoom_max_frac=args.zoom / 100.0,
        brightness_max_frac=args.bright / 100.0,
    )


# ---------------------------------------------------------------- preprocess


def cmd_preprocess(args) -> int:
    m = load_manifest(args.manifest)
    base = Path(args.manifest).parent
    masks = Path(args.masks)
    outdir = Path(args.out)
    imgdir = outdir / "images"
    imgdir.mkdir(parents=True, exist_ok=True)

    failures = []
    kept = []

    def work(rec):
        img = load_png(_resolve(base, rec.path))
        mask = load_mask(masks / f"{rec.id}.png")
        out = preprocess(img, mask, args.target)
        save_png(out, imgdir / f"{rec.id}.png")

    from concurrent.futures import ThreadPoolExecutor

    def run_one(rec):
        try:
            work(rec)
            return rec, None
        except (ToolkitError, OSError) as exc:
            return rec, f"{rec.id}: {exc}"

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(run_one, m.records))
    else:
        results = [run_one(rec) for rec in m.records]

    for rec, err in results:
        if err is None:
            kept.append(replace(rec, path=f"images/{rec.id}.png"))
        else:
            failures.append(err)

    save_manifest(Manifest(kept), outdir / "manifest.csv")
    _write_run_meta(outdir, args, {"manifest": args.manifest})
    print(f"preprocessed {len(kept)} images to {imgdir}")
    if failures:
        (outdir / "failures.txt").write_text("\n".join(failures) + "\n", encoding="utf-8")
        print(f"{len(failures)} failures listed in {outdir / 'failures.txt'}", file=sys.stderr)
        return 3
    return 0


# ---------------------------------------------------------------- similarity


def cmd_similarity(args) -> int:
    m = _load_resolved(args.manifest)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    cls_b = args.class_b if args.class_b is not None else args.class_a

    paths = {r.id: r.path for r in m}
    cache = {}

    def loader(rid):
        if rid not in cache:
            cache[rid] = load_png(paths[rid])
        return cache[rid]

    ids_a = distprotocol.sample_images(m, args.class_a, args.n, args.seed)
    dists = [
        distprotocol.intra_similarity(
            ids_a, args.metric, loader, seed=args.seed, jobs=args.jobs
        )
    ]
    names = [f"intra_{args.metric}" if cls_b == args.class_a else f"intra_a_{args.metric}"]
    if cls_b != args.class_a:
        ids_b = distprotocol.sample_images(m, cls_b, args.n, args.seed)
        dists.append(
            distprotocol.intra_similarity(
                ids_b, args.metric, loader, seed=args.seed, jobs=args.jobs
            )
        )
        names.append(f"intra_b_{args.metric}")
        dists.append(
            distprotocol.inter_similarity(
                ids_a, ids_b, args.metric, loader, seed=args.seed, jobs=args.jobs
            )
        )
        names.append(f"inter_{args.metric}")

    edges = distprotocol.shared_edges(dists, args.bins)
    for name, dist in zip(names, dists):
        distprotocol.save_distribution(dist, outdir / f"{name}_values.txt", outdir / f"{name}.meta")
        distprotocol.save_histogram_csv(distprotocol.histogram(dist, edges), outdir / f"{name}.csv")
        print(f"{name}: {dist.values.size} values, {dist.drop_count} dropped")

    _write_run_meta(outdir, args, {"manifest": args.manifest})
    return 0


# ----------------------------------------------------------------------- fid


def cmd_fid(args) -> int:
    fa = frechet.load_features(args.features_a)
    fb = frechet.load_features(args.features_b)
    if fa.layer_tag != fb.layer_tag:
        print(
            f"warning: layer tags differ ({fa.layer_tag!r} vs {fb.layer_tag!r})",
            file=sys.stderr,
        )
    value = frechet.fid(fa, fb)
    print(f"{value!r}")
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "fid.txt").write_text(f"{value!r}\n", encoding="utf-8")
        _write_run_meta(outdir, args, {"features_a": args.features_a, "features_b": args.features_b})
    return 0


# -------------------------------------------------------------------- balance


def cmd_balance(args) -> int:
    m = _load_resolved(args.manifest)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    split = args.split if args.split else None

    if args.mode == "dup":
        balanced = augment.balance_by_duplication(m, args.seed, split=split)
    else:
        params = _params_from_args(args)
        balanced = augment.balance_by_augmentation(
            m, params, args.seed, outdir / "images", split=split
        )
    save_manifest(_relativize(balanced, outdir), outdir / "manifest.csv")
    _write_run_meta(outdir, args, {"manifest": args.manifest})
    counts = balanced.class_counts(split)
    print("class counts: " + ", ".join(f"{c}={n}" for c, n in sorted(counts.items())))
    return 0


# ---------------------------------------------------------------------- split


def cmd_split(args) -> int:
    m = load_manifest(args.manifest)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    assigned = split_manifest(
        m,
        args.seed,
        val_per_class=args.val_per_class,
        test_clean_per_class=args.test_per_class,
        test_annotated_cap=args.annotated_cap,
    )
    save_manifest(assigned, outdir / "manifest.csv")
    _write_run_meta(outdir, args, {"manifest": args.manifest})
    for token in ("train", "val", "test", "excluded"):
        counts = assigned.class_counts(token)
        total = sum(counts.values())
        print(f"{token}: {total} (" + ", ".join(f"{c}={n}" for c, n in sorted(counts.items())) + ")")
    return 0


# ----------------------------------------------------------------------- eval


def cmd_eval(args) -> int:
    truth = _read_label_file(args.truth)
    preds = [_read_label_file(p) for p in args.pred]
    if args.labels:
        labels = args.labels.split(",")
    else:
        pool = set(truth)
        for p in preds:
            pool.update(p)
        labels = sorted(pool)

    rows = []
    for p in preds:
        cm = evalstats.confusion(truth, p, labels=labels)
        rows.append(evalstats.metrics(cm))

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(evalstats.METRIC_COLUMNS)
    for report in rows:
        writer.writerow([repr(v) for v in report.as_row()])
    print(buf.getvalue(), end="")
    for report in rows:
        for flag in report.zero_division_flags:
            print(f"warning: zero denominator for {flag}", file=sys.stderr)

    sm_lines = []
    if len(preds) >= 2:
        for i in range(len(preds)):
            for j in range(i + 1, len(preds)):
                chi2, df, pvalue = evalstats.stuart_maxwell(preds[i], preds[j], labels=labels)
                sm_lines.append((args.pred[i], args.pred[j], chi2, df, pvalue))
                print(
                    f"stuart-maxwell {args.pred[i]} vs {args.pred[j]}: "
                    f"chi2={chi2!r} df={df} pvalue={pvalue!r}"
                )

    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "metrics.csv").write_text(buf.getvalue(), encoding="utf-8")
        if sm_lines:
            smbuf = io.StringIO()
            writer = csv.writer(smbuf, lineterminator="\n")
            writer.writerow(["a", "b", "chi2", "df", "pvalue"])
            for a, b, chi2, df, pvalue in sm_lines:
                writer.writerow([a, b, repr(chi2), df, repr(pvalue)])
            (outdir / "stuart_maxwell.csv").write_text(smbuf.getvalue(), encoding="utf-8")
        inputs = {"truth": args.truth}
        for i, p in enumerate(args.pred):
            inputs[f"pred{i}"] = p
        _write_run_meta(outdir, args, inputs)
    return 0


# -------------------------------------------------------------------- ada-sim


def cmd_ada_sim(args) -> int:
    values = []
    for lineno, raw in enumerate(Path(args.signs).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            values.append(float(line))
        except ValueError as exc:
            raise ParseError(f"not a number: {line!r}", line=lineno) from exc

    state = adacontrol.new_ada(args.target, args.step, args.n)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["step", "r_t", "p"])
    for i, v in enumerate(values, 1):
        adacontrol.observe(state, v)
        writer.writerow([i, repr(adacontrol.r_t(state)), repr(state.p)])
    print(buf.getvalue(), end="")

    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "trajectory.csv").write_text(buf.getvalue(), encoding="utf-8")
        _write_run_meta(outdir, args, {"signs": args.signs})
    return 0


# ---------------------------------------------------------------- grid-search


def cmd_grid_search(args) -> int:
    grid = augment.ParamGrid(args.geo_levels, args.zoom_levels, args.bright_levels)

    if not args.scorer and not args.manifest:
        print("error: grid-search needs --manifest or --scorer", file=sys.stderr)
        return 2

    if args.scorer:
        mod_name, _, fn_name = args.scorer.partition(":")
        if not fn_name:
            raise ParseError(f"scorer must look like module:function, got {args.scorer!r}")
        score = getattr(importlib.import_module(mod_name), fn_name)
    else:
        m = _load_resolved(args.manifest)
        ids = [r.id for r in m]
        order = make_rng(args.seed).permutation(len(ids))
        chosen = [ids[j] for j in order[: min(args.n, len(ids))]]
        paths = {r.id: r.path for r in m}
        images = [load_png(paths[rid]) for rid in chosen]
        score = lambda params: augment.mssim_proxy_score(images, params, args.seed)

    evaluations = []

    def wrapped(params):
        s = float(score(params))
        evaluations.append((params, s))
        return s

    best, best_score = augment.grid_search(grid, wrapped)
    bt = augment.grid_tuple(best)
    print(
        f"best: rot={bt[0]:g} shift={bt[1]:g} stretch={bt[2]:g} "
        f"zoom={bt[3]:g} bright={bt[4]:g} score={best_score!r}"
    )

    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["rot", "shift", "stretch", "zoom", "bright", "score"])
        for params, s in evaluations:
            writer.writerow([f"{v:g}" for v in augment.grid_tuple(params)] + [repr(s)])
        (outdir / "grid_report.csv").write_text(buf.getvalue(), encoding="utf-8")
        inputs = {} if args.scorer else {"manifest": args.manifest}
        _write_run_meta(outdir, args, inputs)
    return 0


# -------------------------------------------------------------------- parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file supplying defaults")
    common.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    common.add_argument("--jobs", type=int, default=1, help="worker count (default 1)")

    parser = argparse.ArgumentParser(
        prog="augmetrics",
        description="Measurement toolkit for augmented image datasets.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", parents=[common], help="mask-crop, resize, normalize")
    p.add_argument("--manifest", required=True)
    p.add_argument("--masks", required=True, help="directory of <id>.png masks")
    p.add_argument("--target", type=int, default=128, help="output side length")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("similarity", parents=[common], help="intra/inter metric distributions")
    p.add_argument("--manifest", required=True)
    p.add_argument("--class-a", required=True)
    p.add_argument("--class-b", help="second class; omit for intra-only")
    p.add_argument("--metric", choices=distprotocol.METRICS, default="rmse")
    p.add_argument("--n", type=int, default=distprotocol.DEFAULT_SAMPLE_SIZE)
    p.add_argument("--bins", type=int, default=distprotocol.DEFAULT_BINS)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_similarity)

    p = sub.add_parser("fid", parents=[common], help="Fréchet distance between feature files")
    p.add_argument("--features-a", required=True)
    p.add_argument("--features-b", required=True)
    p.add_argument("--out", help="optional output directory")
    p.set_defaults(func=cmd_fid)

    p = sub.add_parser("balance", parents=[common], help="equalize class counts")
    p.add_argument("--manifest", required=True)
    p.add_argument("--mode", choices=("dup", "aug"), required=True)
    p.add_argument("--split", default="", help="restrict balancing to one split token")
    p.add_argument("--rot", type=float, default=5.0, help="max rotation, degrees")
    p.add_argument("--shift", type=float, default=5.0, help="max shift, percent")
    p.add_argument("--stretch", type=float, default=5.0, help="max stretch, percent")
    p.add_argument("--zoom", type=float, default=15.0, help="max zoom, percent")
    p.add_argument("--bright", type=float, default=40.0, help="max brightness change, percent")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_balance)

    p = sub.add_parser("split", parents=[common], help="assign train/val/test splits")
    p.add_argument("--manifest", required=True)
    p.add_argument("--val-per-class", type=int, default=150)
    p.add_argument("--test-per-class", type=int, default=100)
    p.add_argument("--annotated-cap", type=int, default=200)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("eval", parents=[common], help="classifier metrics and paired tests")
    p.add_argument("--truth", required=True, help="one label per line")
    p.add_argument("--pred", required=True, nargs="+", help="prediction file(s)")
    p.add_argument("--labels", help="comma-separated label order")
    p.add_argument("--out", help="optional output directory")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ada-sim", parents=[common], help="replay the ADA controller")
    p.add_argument("--signs", required=True, help="newline-separated sign-means")
    p.add_argument("--target", type=float, default=adacontrol.DEFAULT_TARGET)
    p.add_argument("--step", type=float, default=adacontrol.DEFAULT_STEP)
    p.add_argument("--n", type=int, default=adacontrol.DEFAULT_WINDOW, help="window length")
    p.add_argument("--out", help="optional output directory")
    p.set_defaults(func=cmd_ada_sim)

    p = sub.add_parser("grid-search", parents=[common], help="walk the augmentation grid")
    p.add_argument("--manifest", help="images for the built-in proxy scorer")
    p.add_argument("--geo-levels", type=_comma_floats, default=(0.0, 5.0, 10.0))
    p.add_argument("--zoom-levels", type=_comma_floats, default=(10.0, 15.0, 20.0))
    p.add_argument("--bright-levels", type=_comma_floats, default=(30.0, 40.0, 50.0))
    p.add_argument("--scorer", help="external scorer as module:function")
    p.add_argument("--n", type=int, default=20, help="proxy-scorer sample size")
    p.add_argument("--out", help="optional output directory")
    p.set_defaults(func=cmd_grid_search)

    return parser


def _inject_config(argv: list) -> list:
    """Splice config-file options in right after the subcommand token.

    Splicing keeps argparse in charge of type conversion and gives the
    documented precedence: explicitly passed flags appear later and win.
    """
    path = None
    for i, a in enumerate(argv):
        if a == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif a.startswith("--config="):
            path = a.split("=", 1)[1]
    if path is None or not argv or argv[0].startswith("-"):
        return argv
    return argv[:1] + _read_config_flags(path) + argv[1:]


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    argv = _inject_config(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


def entry(argv=None) -> int:
    try:
        return main(argv)
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(entry())
