"""Intra- and inter-sample similarity distribution protocol.

To judge how a generated or augmented sample relates to a real one, a fixed
number of images (300 by default) is drawn from each sample and a pairwise
metric is evaluated over all pairs within one sample (intra-similarity,
C(n,2) unordered pairs) and across two samples (inter-similarity, n*m
ordered pairs). The resulting value multisets are exported as sorted value
lists and histograms.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    EmptyDistributionError,
    InsufficientImagesError,
    InvalidParamError,
    OutOfRangeError,
    UndefinedForIdenticalError,
    UndefinedZeroMeanError,
)
from .manifest import Manifest
from .rng import make_rng
from .simmetrics import mssim, rmse, sre

DEFAULT_SAMPLE_SIZE = 300
DEFAULT_BINS = 50

METRICS = ("rmse", "sre", "ssim")


@dataclass
class SimilarityDistribution:
    """Sorted multiset of pairwise metric values with its provenance."""

    metric: str
    kind: str
    values: np.ndarray
    ids_a: tuple
    ids_b: tuple = None
    seed: int = None
    drop_count: int = 0

    def __post_init__(self):
        self.values = np.sort(np.asarray(self.values, dtype=np.float64))
        self.ids_a = tuple(self.ids_a)
        if self.ids_b is not None:
            self.ids_b = tuple(self.ids_b)


@dataclass
class Histogram:
    """Bin edges with counts and normalized densities."""

    bin_edges: np.ndarray
    counts: np.ndarray
    densities: np.ndarray = field(init=False)

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=np.float64)
        counts = np.asarray(self.counts, dtype=np.int64)
        if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise ValueError("bin edges must be ascending with >= 2 entries")
        if counts.shape != (edges.size - 1,) or (counts < 0).any():
            raise ValueError("counts must be nonnegative, one per bin")
        total = counts.sum()
        widths = np.diff(edges)
        self.bin_edges = edges
        self.counts = counts
        self.densities = counts / (total * widths) if total > 0 else counts * 0.0


def metric_fn(name: str):
    """Resolve a metric name; ``ssim`` denotes sliding-window mean SSIM."""
    if name == "rmse":
        return rmse
    if name == "sre":
        return sre
    if name == "ssim":
        return mssim
    raise InvalidParamError(f"unknown metric {name!r}; choose from {METRICS}")


def sample_images(m: Manifest, cls: str, n: int, seed: int) -> list:
    """Draw n distinct image ids of one class, uniformly, reproducibly."""
    ids = [r.id for r in m.select(cls=cls)]
    if len(ids) < n:
        raise InsufficientImagesError(f"class {cls!r} has {len(ids)} images, needs {n}")
    if n < 0:
        raise InvalidParamError("sample size must be >= 0")
    order = make_rng(seed).permutation(len(ids))
    return [ids[j] for j in order[:n]]


def _evaluate(pairs, left, right, metric: str, jobs: int):
    fn = metric_fn(metric)
    out = np.full(len(pairs), np.nan)
    dropped = np.zeros(len(pairs), dtype=bool)

    def work(k):
        i, j = pairs[k]
        try:
            out[k] = fn(left[i], right[j])
        except (UndefinedForIdenticalError, UndefinedZeroMeanError):
            if metric != "sre":
                raise
            dropped[k] = True

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(work, range(len(pairs))))
    else:
        for k in range(len(pairs)):
            work(k)
    return out[~dropped], int(dropped.sum())


def intra_similarity(ids, metric: str, loader, seed=None, jobs: int = 1) -> SimilarityDistribution:
    """Metric over every unordered pair within one sample.

    ``loader`` maps an id to its image. For the asymmetric SRE the
    earlier-listed image of each pair is the signal; pairs where SRE is
    undefined are dropped and counted. Yields exactly C(n, 2) values
    (minus drops).
    """
    ids = list(ids)
    if len(ids) < 2:
        raise InsufficientImagesError("intra-similarity needs >= 2 images")
    images = [loader(i) for i in ids]
    pairs = [(i, j) for i in range(len(ids)) for j in range(i + 1, len(ids))]
    values, drops = _evaluate(pairs, images, images, metric, jobs)
    return SimilarityDistribution(metric, "intra", values, ids, seed=seed, drop_count=drops)


def inter_similarity(
    ids_a, ids_b, metric: str, loader, seed=None, jobs: int = 1
) -> SimilarityDistribution:
    """Metric over every (a, b) cross pair between two samples.

    The first sample is the reference: its image is the signal argument for
    SRE. Yields exactly |a| * |b| values (minus SRE drops).
    """
    ids_a = list(ids_a)
    ids_b = list(ids_b)
    if not ids_a or not ids_b:
        raise InsufficientImagesError("inter-similarity needs nonempty samples")
    left = [loader(i) for i in ids_a]
    right = [loader(i) for i in ids_b]
    pairs = [(i, j) for i in range(len(ids_a)) for j in range(len(ids_b))]
    values, drops = _evaluate(pairs, left, right, metric, jobs)
    return SimilarityDistribution(
        metric, "inter", values, ids_a, ids_b, seed=seed, drop_count=drops
    )


def histogram(dist, bins=DEFAULT_BINS) -> Histogram:
    """Bin a distribution's values.

    ``bins`` is either a bin count (edges span the value range uniformly) or
    explicit ascending edges, which must cover every value. Bins are
    half-open [lo, hi) with the last bin closed.
    """
    values = dist.values if isinstance(dist, SimilarityDistribution) else np.asarray(dist, dtype=np.float64)
    if values.size == 0:
        raise EmptyDistributionError("no values to bin")
    if np.isscalar(bins):
        lo = float(values.min())
        hi = float(values.max())
        if lo == hi:
            lo -= 0.5
            hi += 0.5
        edges = np.linspace(lo, hi, int(bins) + 1)
    else:
        edges = np.asarray(bins, dtype=np.float64)
        if values.min() < edges[0] or values.max() > edges[-1]:
            raise OutOfRangeError(
                f"values span [{values.min()}, {values.max()}], outside the given edges"
            )
    counts, edges = np.histogram(values, bins=edges)
    return Histogram(edges, counts)


def shared_edges(dists, bins: int = DEFAULT_BINS) -> np.ndarray:
    """Uniform edges spanning the pooled range of several distributions."""
    lows = [float(d.values.min()) for d in dists if d.values.size]
    highs = [float(d.values.max()) for d in dists if d.values.size]
    if not lows:
        raise EmptyDistributionError("no values to bin")
    lo = min(lows)
    hi = max(highs)
    if lo == hi:
        lo -= 0.5
        hi += 0.5
    return np.linspace(lo, hi, bins + 1)


def save_histogram_csv(hist: Histogram, path) -> None:
    """CSV export with header ``bin_lo,bin_hi,count,density``."""
    lines = ["bin_lo,bin_hi,count,density"]
    for i in range(hist.counts.size):
        lines.append(
            f"{float(hist.bin_edges[i])!r},{float(hist.bin_edges[i + 1])!r},"
            f"{int(hist.counts[i])},{float(hist.densities[i])!r}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def save_distribution(dist: SimilarityDistribution, values_path, meta_path) -> None:
    """One value per line, plus a key=value side-car describing the run."""
    Path(values_path).write_text(
        "".join(f"{float(v)!r}\n" for v in dist.values), encoding="utf-8"
    )
    meta = [
        f"metric = {dist.metric}",
        f"kind = {dist.kind}",
        f"seed = {dist.seed}",
        f"count = {dist.values.size}",
        f"drop_count = {dist.drop_count}",
        f"ids_a = {','.join(dist.ids_a)}",
    ]
    if dist.ids_b is not None:
        meta.append(f"ids_b = {','.join(dist.ids_b)}")
    Path(meta_path).write_text("\n".join(meta) + "\n", encoding="utf-8")
