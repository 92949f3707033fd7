"""Grayscale image representation and preprocessing.

Images are single-channel rasters with float64 intensities in [0, 1]. The
preprocessing chain crops an image to the bounding box of its lung mask and
resizes the crop to a common square size (128 px by default) with bilinear
interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    DecodeError,
    DimensionMismatchError,
    EmptyMaskError,
    OutOfBoundsError,
)

# ITU-R BT.601 luma weights, applied to channels already scaled to [0, 1].
_LUMA = (0.299, 0.587, 0.114)

DEFAULT_TARGET_SIZE = 128


@dataclass
class GrayImage:
    """Single-channel image; ``pixels`` is a (height, width) float64 array in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("pixels must be a 2-D array with positive extents")
        if not np.all(np.isfinite(px)):
            raise ValueError("pixels must be finite")
        if px.min() < 0.0 or px.max() > 1.0:
            raise ValueError("pixel intensities must lie in [0, 1]")
        self.pixels = px

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass
class BinaryMask:
    """Boolean raster; True marks pixels inside the region of interest."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=bool)
        if bits.ndim != 2 or bits.shape[0] < 1 or bits.shape[1] < 1:
            raise ValueError("bits must be a 2-D array with positive extents")
        self.bits = bits

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]


@dataclass(frozen=True)
class Rect:
    """Axis-aligned pixel rectangle: top-left corner (x0, y0), extents (w, h)."""

    x0: int
    y0: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ValueError("rectangle extents must be >= 1")


def load_png(path) -> GrayImage:
    """Decode a PNG into a [0, 1] grayscale image.

    Supported modes: 8-bit grayscale, grayscale+alpha, RGB, RGBA and 16-bit
    grayscale. Color inputs are reduced with the BT.601 luma weights applied
    to channels normalized to [0, 1]; 8-bit values divide by 255 and 16-bit
    values by 65535. Alpha channels are ignored.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            arr = np.asarray(im)
    except UnidentifiedImageError as exc:
        raise DecodeError(f"{path}: not a decodable image") from exc
    except (OSError, SyntaxError) as exc:
        raise DecodeError(f"{path}: {exc}") from exc

    arr = arr.astype(np.float64)
    if mode == "L":
        px = arr / 255.0
    elif mode == "LA":
        px = arr[..., 0] / 255.0
    elif mode == "RGB":
        px = _luma(arr / 255.0)
    elif mode == "RGBA":
        px = _luma(arr[..., :3] / 255.0)
    elif mode in ("I;16", "I;16B", "I;16L", "I"):
        px = arr / 65535.0
    else:
        raise DecodeError(f"{path}: unsupported PNG mode {mode!r}")
    return GrayImage(np.clip(px, 0.0, 1.0))


def _luma(rgb: np.ndarray) -> np.ndarray:
    return _LUMA[0] * rgb[..., 0] + _LUMA[1] * rgb[..., 1] + _LUMA[2] * rgb[..., 2]


def save_png(img: GrayImage, path) -> None:
    """Write an 8-bit grayscale PNG; each value is round(p * 255)."""
    px = np.floor(img.pixels * 255.0 + 0.5)
    data = np.clip(px, 0, 255).astype(np.uint8)
    Image.fromarray(data, mode="L").save(Path(path), format="PNG")


def load_mask(path, threshold: float = 0.5) -> BinaryMask:
    """Decode a near-binary mask PNG; intensities >= threshold count as inside."""
    img = load_png(path)
    return BinaryMask(img.pixels >= threshold)


def mask_bbox(mask: BinaryMask) -> Rect:
    """Minimal axis-aligned rectangle containing every set bit."""
    ys, xs = np.nonzero(mask.bits)
    if ys.size == 0:
        raise EmptyMaskError("mask contains no set bit")
    x0 = int(xs.min())
    y0 = int(ys.min())
    return Rect(x0, y0, int(xs.max()) - x0 + 1, int(ys.max()) - y0 + 1)


def crop(img: GrayImage, r: Rect) -> GrayImage:
    """Copy the sub-image covered by ``r``."""
    if r.x0 < 0 or r.y0 < 0 or r.x0 + r.w > img.width or r.y0 + r.h > img.height:
        raise OutOfBoundsError(
            f"rect {r} exceeds image bounds {img.width}x{img.height}"
        )
    return GrayImage(img.pixels[r.y0 : r.y0 + r.h, r.x0 : r.x0 + r.w].copy())


def resize_bilinear(img: GrayImage, width: int, height: int) -> GrayImage:
    """Resample to ``width`` x ``height`` with bilinear interpolation.

    Output pixel centers map to source coordinates under the half-pixel-center
    convention; coordinates beyond the source grid clamp to the border, and
    results are clipped to [0, 1] against rounding noise.
    """
    if width < 1 or height < 1:
        raise ValueError("target extents must be >= 1")
    src = img.pixels
    h_in, w_in = src.shape

    xs = (np.arange(width, dtype=np.float64) + 0.5) * (w_in / width) - 0.5
    ys = (np.arange(height, dtype=np.float64) + 0.5) * (h_in / height) - 0.5
    xs = np.clip(xs, 0.0, w_in - 1.0)
    ys = np.clip(ys, 0.0, h_in - 1.0)

    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, w_in - 1)
    y1 = np.minimum(y0 + 1, h_in - 1)
    tx = xs - x0
    ty = ys - y0

    top = src[np.ix_(y0, x0)] * (1.0 - tx) + src[np.ix_(y0, x1)] * tx
    bot = src[np.ix_(y1, x0)] * (1.0 - tx) + src[np.ix_(y1, x1)] * tx
    out = top * (1.0 - ty)[:, None] + bot * ty[:, None]
    return GrayImage(np.clip(out, 0.0, 1.0))


def sample_bilinear(pixels: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Bilinear lookup of ``pixels`` at float coordinate grids (xs, ys).

    Coordinates outside the raster clamp to the nearest border pixel, which
    realizes edge-replicating fill for all geometric transforms built on it.
    """
    h, w = pixels.shape
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    tx = xs - x0
    ty = ys - y0
    top = pixels[y0, x0] * (1.0 - tx) + pixels[y0, x1] * tx
    bot = pixels[y1, x0] * (1.0 - tx) + pixels[y1, x1] * tx
    return top * (1.0 - ty) + bot * ty


def preprocess(img: GrayImage, mask: BinaryMask, target: int = DEFAULT_TARGET_SIZE) -> GrayImage:
    """Crop to the mask bounding box, then resize to ``target`` x ``target``."""
    if (mask.height, mask.width) != (img.height, img.width):
        raise DimensionMismatchError(
            f"mask {mask.width}x{mask.height} vs image {img.width}x{img.height}"
        )
    return resize_bilinear(crop(img, mask_bbox(mask)), target, target)
