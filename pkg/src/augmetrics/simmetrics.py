"""Pairwise similarity metrics for grayscale images.

All metrics take two images of identical dimensions with intensities in
[0, 1]: root-mean-square error, signal-to-reconstruction-error ratio,
whole-image structural similarity, and mean structural similarity over a
sliding window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    UndefinedForIdenticalError,
    UndefinedZeroMeanError,
    WindowTooLargeError,
)
from .imagecore import GrayImage


@dataclass(frozen=True)
class SsimParams:
    """Constants for the structural-similarity metrics.

    c1 = (k1 * L)^2 and c2 = (k2 * L)^2 stabilize the two divisions; L is the
    dynamic range of the intensity scale (1.0 for [0, 1] images). ``window``
    and ``stride`` control the sliding-window variant only.
    """

    k1: float = 0.01
    k2: float = 0.03
    L: float = 1.0
    window: int = 7
    stride: int = 1

    def __post_init__(self):
        if not (self.k1 > 0 and self.k2 > 0 and self.L > 0):
            raise ValueError("k1, k2 and L must be positive")
        if self.window < 2:
            raise ValueError("window must be >= 2")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")

    @property
    def c1(self) -> float:
        return (self.k1 * self.L) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.L) ** 2


DEFAULT_SSIM_PARAMS = SsimParams()


def _pixels(img) -> np.ndarray:
    if isinstance(img, GrayImage):
        return img.pixels
    px = np.asarray(img, dtype=np.float64)
    if px.ndim != 2:
        raise ValueError("expected a 2-D intensity array")
    return px


def _pair(a, b):
    x = _pixels(a)
    y = _pixels(b)
    if x.shape != y.shape:
        raise DimensionMismatchError(f"shape {x.shape} vs {y.shape}")
    return x, y


def rmse(a, b) -> float:
    """Root of the mean squared intensity difference."""
    x, y = _pair(a, b)
    return float(np.sqrt(np.mean((x - y) ** 2)))


def sre(a, b) -> float:
    """Signal-to-reconstruction-error ratio, in decibels.

    SRE = 10 * log10(mean(a)^2 / rmse(a, b)^2). The first argument is the
    reference signal. Undefined for identical images (zero error power) and
    for a zero-mean reference.
    """
    x, y = _pair(a, b)
    err = float(np.sqrt(np.mean((x - y) ** 2)))
    if err == 0.0:
        raise UndefinedForIdenticalError("images are identical; error power is zero")
    mu = float(np.mean(x))
    if mu == 0.0:
        raise UndefinedZeroMeanError("reference image has zero mean")
    return 10.0 * math.log10(mu * mu / (err * err))


def ssim_global(a, b, params: SsimParams = DEFAULT_SSIM_PARAMS) -> float:
    """Structural similarity of two images taken as one window.

    Means, variances and covariance are sample estimates over the whole
    image; variance and covariance use the unbiased (n - 1) divisor.
    """
    x, y = _pair(a, b)
    if x.size < 2:
        raise ValueError("ssim needs at least 2 pixels per image")
    mx = float(np.mean(x))
    my = float(np.mean(y))
    n = x.size
    vx = float(np.sum((x - mx) ** 2)) / (n - 1)
    vy = float(np.sum((y - my) ** 2)) / (n - 1)
    cxy = float(np.sum((x - mx) * (y - my))) / (n - 1)
    return ((2.0 * mx * my + params.c1) * (2.0 * cxy + params.c2)) / (
        (mx * mx + my * my + params.c1) * (vx + vy + params.c2)
    )


def mssim(a, b, params: SsimParams = DEFAULT_SSIM_PARAMS) -> float:
    """Mean SSIM over square windows slid across both images.

    Windows of side ``params.window`` start at offsets 0, stride, 2*stride,
    ... along each axis; only fully contained windows contribute. Returns the
    arithmetic mean of the per-window SSIM values.
    """
    x, y = _pair(a, b)
    h, w = x.shape
    win = params.window
    if win > h or win > w:
        raise WindowTooLargeError(f"window {win} exceeds image extents {w}x{h}")

    step = params.stride
    xv = np.lib.stride_tricks.sliding_window_view(x, (win, win))[::step, ::step]
    yv = np.lib.stride_tricks.sliding_window_view(y, (win, win))[::step, ::step]
    n = win * win

    mx = xv.mean(axis=(2, 3))
    my = yv.mean(axis=(2, 3))
    dx = xv - mx[..., None, None]
    dy = yv - my[..., None, None]
    vx = np.sum(dx * dx, axis=(2, 3)) / (n - 1)
    vy = np.sum(dy * dy, axis=(2, 3)) / (n - 1)
    cxy = np.sum(dx * dy, axis=(2, 3)) / (n - 1)

    scores = ((2.0 * mx * my + params.c1) * (2.0 * cxy + params.c2)) / (
        (mx * mx + my * my + params.c1) * (vx + vy + params.c2)
    )
    return float(scores.mean())
