"""Classical augmentation transforms, parameter grid search, class balancing.

Transforms keep image dimensions and the [0, 1] intensity range. Random
augmentation composes them in the fixed order rotate, shift, stretch, zoom,
brightness. The grid search walks joint geometric levels (one value driving
rotation degrees and the shift/stretch percentages together) crossed with
zoom and brightness percentage levels; the default grid is 3 x 3 x 3 = 27
combinations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import EmptyManifestError, InvalidParamError
from .imagecore import GrayImage, load_png, resize_bilinear, sample_bilinear, save_png
from .manifest import Manifest, Record
from .rng import child_rng, make_rng


@dataclass(frozen=True)
class AugmentParams:
    """Maximum magnitudes for the five random draws.

    Rotation is in degrees; the other four are fractions of image size or of
    the unit intensity scale.
    """

    rotation_max_deg: float = 0.0
    shift_max_frac: float = 0.0
    stretch_max_frac: float = 0.0
    zoom_max_frac: float = 0.0
    brightness_max_frac: float = 0.0

    def __post_init__(self):
        fields = (
            self.rotation_max_deg,
            self.shift_max_frac,
            self.stretch_max_frac,
            self.zoom_max_frac,
            self.brightness_max_frac,
        )
        if not all(math.isfinite(v) and v >= 0 for v in fields):
            raise InvalidParamError("augmentation maxima must be finite and >= 0")
        if self.rotation_max_deg > 180:
            raise InvalidParamError("rotation_max_deg must be <= 180")
        if max(self.shift_max_frac, self.stretch_max_frac, self.zoom_max_frac) > 0.5:
            raise InvalidParamError("shift/stretch/zoom maxima must be <= 0.5")
        if self.brightness_max_frac >= 1:
            raise InvalidParamError("brightness_max_frac must be < 1")


def params_from_grid(geo: float, zoom_pct: float, brightness_pct: float) -> AugmentParams:
    """Build params from grid units: geo drives rotation (degrees) and the
    shift/stretch percentages jointly; zoom and brightness are percentages."""
    return AugmentParams(
        rotation_max_deg=geo,
        shift_max_frac=geo / 100.0,
        stretch_max_frac=geo / 100.0,
        zoom_max_frac=zoom_pct / 100.0,
        brightness_max_frac=brightness_pct / 100.0,
    )


def grid_tuple(p: AugmentParams) -> tuple:
    """Report params in grid units (deg, %, %, %, %)."""
    return (
        p.rotation_max_deg,
        p.shift_max_frac * 100.0,
        p.stretch_max_frac * 100.0,
        p.zoom_max_frac * 100.0,
        p.brightness_max_frac * 100.0,
    )


@dataclass(frozen=True)
class ParamGrid:
    """Joint geometric levels crossed with zoom and brightness levels."""

    geo_levels: tuple = (0.0, 5.0, 10.0)
    zoom_levels: tuple = (10.0, 15.0, 20.0)
    brightness_levels: tuple = (30.0, 40.0, 50.0)

    def __post_init__(self):
        if not (self.geo_levels and self.zoom_levels and self.brightness_levels):
            raise InvalidParamError("grid level lists must be nonempty")
        object.__setattr__(self, "geo_levels", tuple(self.geo_levels))
        object.__setattr__(self, "zoom_levels", tuple(self.zoom_levels))
        object.__setattr__(self, "brightness_levels", tuple(self.brightness_levels))

    def __len__(self) -> int:
        return len(self.geo_levels) * len(self.zoom_levels) * len(self.brightness_levels)

    def combinations(self):
        """Yield every AugmentParams, geo-major then zoom then brightness."""
        for g in self.geo_levels:
            for z in self.zoom_levels:
                for b in self.brightness_levels:
                    yield params_from_grid(g, z, b)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def rotate(img: GrayImage, angle: float) -> GrayImage:
    """Rotate about the image center by ``angle`` degrees (positive turns the
    content clockwise on screen), bilinear resample, edge-replicate fill."""
    if not math.isfinite(angle) or abs(angle) > 180:
        raise InvalidParamError("rotation angle must lie in [-180, 180]")
    if angle == 0:
        return GrayImage(img.pixels.copy())
    px = img.pixels
    h, w = px.shape
    cx = (w - 1) / 2.0
    cy = (h - 1) / 2.0
    theta = math.radians(angle)
    cos = math.cos(theta)
    sin = math.sin(theta)
    ox, oy = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    dx = ox - cx
    dy = oy - cy
    sx = dx * cos + dy * sin + cx
    sy = -dx * sin + dy * cos + cy
    return GrayImage(np.clip(sample_bilinear(px, sx, sy), 0.0, 1.0))


def shift(img: GrayImage, dx: float, dy: float) -> GrayImage:
    """Translate by round(dx * width), round(dy * height) whole pixels.

    The vacated band is filled with the trace of the trailing edge: source
    coordinates are clamped, so the last row/column smears across it.
    """
    if abs(dx) > 0.5 or abs(dy) > 0.5:
        raise InvalidParamError("shift fractions must lie in [-0.5, 0.5]")
    px = img.pixels
    h, w = px.shape
    sx = _round_half_up(dx * w)
    sy = _round_half_up(dy * h)
    if sx == 0 and sy == 0:
        return GrayImage(px.copy())
    xs = np.clip(np.arange(w) - sx, 0, w - 1)
    ys = np.clip(np.arange(h) - sy, 0, h - 1)
    return GrayImage(px[np.ix_(ys, xs)].copy())


def stretch(img: GrayImage, frac: float) -> GrayImage:
    """Stretch between the main-diagonal corners by ``frac`` of image size.

    The affine map displaces corner (0, 0) by (-frac*w, -frac*h) and corner
    (w-1, h-1) by (+frac*w, +frac*h) while pinning the anti-diagonal corners
    (w-1, 0) and (0, h-1); displacement interpolates to zero at the pinned
    vertices and the center stays fixed. Bilinear resample, edge fill.
    Negative fractions compress toward the center.
    """
    if not math.isfinite(frac) or abs(frac) > 0.5:
        raise InvalidParamError("stretch fraction must lie in [-0.5, 0.5]")
    px = img.pixels
    h, w = px.shape
    if frac == 0 or w < 2 or h < 2:
        return GrayImage(px.copy())
    W = float(w - 1)
    H = float(h - 1)
    e = frac * w
    f = frac * h
    a1 = 1.0 + e / W
    b1 = e / H
    c1 = -e
    a2 = f / W
    b2 = 1.0 + f / H
    c2 = -f
    det = a1 * b2 - b1 * a2
    if abs(det) < 1e-9:
        raise InvalidParamError(f"stretch fraction {frac} makes the map singular")
    ox, oy = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    ux = ox - c1
    uy = oy - c2
    sx = (b2 * ux - b1 * uy) / det
    sy = (-a2 * ux + a1 * uy) / det
    return GrayImage(np.clip(sample_bilinear(px, sx, sy), 0.0, 1.0))


def zoom(img: GrayImage, frac: float) -> GrayImage:
    """Central crop of side round((1 - frac) * dim) per axis, resized back."""
    if not 0 <= frac <= 0.5:
        raise InvalidParamError("zoom fraction must lie in [0, 0.5]")
    px = img.pixels
    h, w = px.shape
    cw = max(_round_half_up((1.0 - frac) * w), 1)
    ch = max(_round_half_up((1.0 - frac) * h), 1)
    if cw == w and ch == h:
        return GrayImage(px.copy())
    x0 = (w - cw) // 2
    y0 = (h - ch) // 2
    crop = GrayImage(px[y0 : y0 + ch, x0 : x0 + cw].copy())
    return resize_bilinear(crop, w, h)


def brightness(img: GrayImage, factor: float) -> GrayImage:
    """Multiply intensities by ``factor`` and clamp to [0, 1]."""
    if not math.isfinite(factor) or factor < 0:
        raise InvalidParamError("brightness factor must be finite and >= 0")
    return GrayImage(np.clip(img.pixels * factor, 0.0, 1.0))


def augment_random(img: GrayImage, p: AugmentParams, seed) -> GrayImage:
    """Apply all five transforms with independent uniform draws.

    Order: rotate, shift, stretch, zoom, brightness. Rotation, shift and
    stretch draw in [-max, +max]; zoom in [0, max]; brightness in
    [1 - max, 1 + max]. ``seed`` is an integer or a ready Generator;
    the result is deterministic per (img, p, seed).
    """
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    angle = rng.uniform(-p.rotation_max_deg, p.rotation_max_deg)
    dx = rng.uniform(-p.shift_max_frac, p.shift_max_frac)
    dy = rng.uniform(-p.shift_max_frac, p.shift_max_frac)
    st = rng.uniform(-p.stretch_max_frac, p.stretch_max_frac)
    zm = rng.uniform(0.0, p.zoom_max_frac)
    br = rng.uniform(1.0 - p.brightness_max_frac, 1.0 + p.brightness_max_frac)
    out = rotate(img, angle)
    out = shift(out, dx, dy)
    out = stretch(out, st)
    out = zoom(out, zm)
    return brightness(out, br)


def _balance_pool(m: Manifest, split):
    if len(m) == 0:
        raise EmptyManifestError("cannot balance an empty manifest")
    pool = {}
    for rec in m:
        if split is None or rec.split == split:
            pool.setdefault(rec.cls, []).append(rec)
    if not pool:
        raise EmptyManifestError(f"no records in split {split!r}")
    target = max(len(v) for v in pool.values())
    return pool, target


def balance_by_duplication(m: Manifest, seed: int, split=None) -> Manifest:
    """Equalize class counts by duplicating uniformly drawn records.

    Considers records of ``split`` only (all records when None). Original
    records are untouched; duplicates get ids ``<source>_dup<k>`` and origin
    ``dup`` and are appended in sorted class order.
    """
    pool, target = _balance_pool(m, split)
    rng = make_rng(seed)
    extra = []
    counters = {}
    for cls in sorted(pool):
        recs = pool[cls]
        for _ in range(target - len(recs)):
            src = recs[int(rng.integers(0, len(recs)))]
            k = counters.get(src.id, 0) + 1
            counters[src.id] = k
            extra.append(replace(src, id=f"{src.id}_dup{k}", origin="dup"))
    return Manifest(list(m.records) + extra)


def balance_by_augmentation(
    m: Manifest,
    p: AugmentParams,
    seed: int,
    outdir,
    split=None,
    target_size=None,
) -> Manifest:
    """Equalize class counts by synthesizing augmented images.

    Source records are drawn uniformly (with replacement) from the deficient
    class; each synthetic image is produced by ``augment_random`` under a
    child seed derived from (seed, running index), so any parallel execution
    order yields identical files. Images are written to ``outdir`` as
    ``<class>_synth_<index>.png`` with index counted per class.
    """
    pool, target = _balance_pool(m, split)
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rng = make_rng(seed)
    extra = []
    counter = 0
    for cls in sorted(pool):
        recs = pool[cls]
        for i in range(target - len(recs)):
            src = recs[int(rng.integers(0, len(recs)))]
            img = load_png(src.path)
            if target_size is not None:
                img = resize_bilinear(img, target_size, target_size)
            out = augment_random(img, p, child_rng(seed, counter))
            counter += 1
            path = outdir / f"{cls}_synth_{i}.png"
            save_png(out, path)
            extra.append(
                Record(
                    id=f"{cls}_synth_{i}",
                    path=str(path),
                    cls=cls,
                    split=src.split,
                    origin="aug",
                    annotated=False,
                )
            )
    return Manifest(list(m.records) + extra)


def grid_search(grid: ParamGrid, score) -> tuple:
    """Evaluate ``score`` on every grid combination and return the argmax.

    Ties keep the earliest combination in enumeration order (geo, then zoom,
    then brightness). Returns (AugmentParams, best_score).
    """
    best = None
    best_score = None
    for params in grid.combinations():
        s = float(score(params))
        if best is None or s > best_score:
            best = params
            best_score = s
    return best, best_score


def mssim_proxy_score(images, params: AugmentParams, seed: int) -> float:
    """Built-in grid scorer: mean MSSIM between each image and its augmented
    version, drawn under per-image child seeds."""
    from .simmetrics import mssim

    if not images:
        raise InvalidParamError("proxy score needs at least one image")
    total = 0.0
    for i, img in enumerate(images):
        aug = augment_random(img, params, child_rng(seed, i))
        total += mssim(img, aug)
    return total / len(images)
