"""Fréchet distance between Gaussian feature distributions (FID machinery).

A feature set is an n x d matrix of embedding vectors, one row per image.
Its distribution is summarized by the first two moments (mean, covariance);
the squared Fréchet distance between two such Gaussians is

    d^2 = ||m_a - m_b||^2 + Tr(C_a + C_b - 2 (C_a C_b)^{1/2})

where the matrix square root is taken through the symmetrized, mathematically
equivalent form (C_a^{1/2} C_b C_a^{1/2})^{1/2} so every eigensolve runs on a
symmetric matrix.

Feature sets travel between tools in a small binary container (FVEC1):

    magic  5 bytes          b"FVEC1"
    n      uint32 LE        number of vectors
    d      uint32 LE        vector dimension
    tlen   uint16 LE        byte length of the layer tag
    tag    tlen bytes       UTF-8 layer name recording which activation fed d
    body   n*d float32 LE   row-major vector data
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatchError,
    FeatureFileError,
    InvalidInputError,
    NegativeEigenvalueError,
    NotSymmetricError,
    TooFewSamplesError,
)

MAGIC = b"FVEC1"
_HEADER = struct.Struct("<5sIIH")

# Relative symmetry tolerance for covariance-like matrices.
SYMMETRY_RTOL = 1e-9
# Eigenvalues in [-EIG_CLAMP_RTOL * lambda_max, 0) clamp to zero; below is an error.
EIG_CLAMP_RTOL = 1e-8
# |d^2| below this is floating noise on identical moments and collapses to 0.
ZERO_CLAMP = 1e-8


@dataclass
class FeatureSet:
    """n x d matrix of feature vectors plus the layer tag they came from."""

    data: np.ndarray
    layer_tag: str = ""

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 2:
            raise ValueError("feature data must be a 2-D (n, d) matrix")
        if data.shape[1] < 1:
            raise ValueError("feature dimension must be >= 1")
        self.data = data

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


@dataclass
class GaussianMoments:
    """Mean vector and covariance matrix of a feature distribution."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        c = np.asarray(self.cov, dtype=np.float64)
        if c.shape != (m.size, m.size):
            raise ValueError(f"cov shape {c.shape} does not match mean size {m.size}")
        _check_symmetric(c)
        self.mean = m
        self.cov = c

    @property
    def d(self) -> int:
        return self.mean.size


def _check_symmetric(m: np.ndarray) -> None:
    scale = float(np.abs(m).max()) if m.size else 0.0
    asym = float(np.abs(m - m.T).max()) if m.size else 0.0
    if asym > SYMMETRY_RTOL * max(scale, 1.0):
        raise NotSymmetricError(f"matrix asymmetry {asym:g} exceeds tolerance")


def gaussian_moments(features) -> GaussianMoments:
    """Column means and unbiased (n - 1) sample covariance of a feature set."""
    data = features.data if isinstance(features, FeatureSet) else np.asarray(features)
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise ValueError("feature data must be a 2-D (n, d) matrix")
    n = data.shape[0]
    if n < 2:
        raise TooFewSamplesError(f"covariance needs >= 2 samples, got {n}")
    if not np.all(np.isfinite(data)):
        raise InvalidInputError("feature data contains non-finite entries")
    mean = data.mean(axis=0)
    dev = data - mean
    cov = dev.T @ dev / (n - 1)
    cov = (cov + cov.T) / 2.0
    return GaussianMoments(mean, cov)


def sqrtm_psd(m: np.ndarray) -> np.ndarray:
    """Symmetric square root of a symmetric positive-semidefinite matrix.

    Eigendecomposes M = Q diag(lam) Q^T and returns Q diag(sqrt(lam)) Q^T.
    Eigenvalues in [-1e-8 * lam_max, 0) are treated as rounding noise and
    clamped to zero; anything more negative means the input is genuinely
    indefinite and raises.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("expected a square matrix")
    _check_symmetric(m)
    lam, q = np.linalg.eigh((m + m.T) / 2.0)
    lam_max = float(lam.max()) if lam.size else 0.0
    floor = -EIG_CLAMP_RTOL * max(lam_max, 0.0)
    if lam.min() < floor:
        raise NegativeEigenvalueError(
            f"eigenvalue {lam.min():g} below clamp floor {floor:g}; input is indefinite"
        )
    lam = np.clip(lam, 0.0, None)
    root = (q * np.sqrt(lam)) @ q.T
    return (root + root.T) / 2.0


def frechet_distance(a: GaussianMoments, b: GaussianMoments) -> float:
    """Squared Fréchet distance between two Gaussians given by their moments."""
    if a.d != b.d:
        raise DimensionMismatchError(f"dimension {a.d} vs {b.d}")
    diff = a.mean - b.mean
    sa = sqrtm_psd(a.cov)
    inner = sa @ b.cov @ sa
    cross = sqrtm_psd((inner + inner.T) / 2.0)
    value = float(diff @ diff) + float(
        np.trace(a.cov) + np.trace(b.cov) - 2.0 * np.trace(cross)
    )
    if abs(value) < ZERO_CLAMP:
        return 0.0
    if value < 0.0:
        raise InvalidInputError(
            f"distance evaluated to {value:g}; moments are numerically inconsistent"
        )
    return value


def fid(a, b) -> float:
    """Fréchet distance between the Gaussian fits of two feature sets."""
    return frechet_distance(gaussian_moments(a), gaussian_moments(b))


def write_features(path, data: np.ndarray, layer_tag: str = "") -> None:
    """Serialize an n x d float matrix to the FVEC1 container."""
    arr = np.ascontiguousarray(np.asarray(data, dtype="<f4"))
    if arr.ndim != 2:
        raise ValueError("feature data must be a 2-D (n, d) matrix")
    tag = layer_tag.encode("utf-8")
    if len(tag) > 0xFFFF:
        raise ValueError("layer tag too long")
    with open(Path(path), "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, arr.shape[0], arr.shape[1], len(tag)))
        fh.write(tag)
        fh.write(arr.tobytes())


def load_features(path) -> FeatureSet:
    """Parse an FVEC1 container; values come back as the stored float32 bits."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FeatureFileError(f"{path}: truncated header")
    magic, n, d, tlen = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FeatureFileError(f"{path}: bad magic {magic!r}")
    if d < 1:
        raise FeatureFileError(f"{path}: feature dimension {d} is invalid")
    offset = _HEADER.size
    if len(raw) < offset + tlen:
        raise FeatureFileError(f"{path}: truncated layer tag")
    try:
        tag = raw[offset : offset + tlen].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FeatureFileError(f"{path}: layer tag is not UTF-8") from exc
    offset += tlen
    expected = n * d * 4
    if len(raw) - offset != expected:
        raise FeatureFileError(
            f"{path}: body holds {len(raw) - offset} bytes, header implies {expected}"
        )
    data = np.frombuffer(raw, dtype="<f4", count=n * d, offset=offset).reshape(n, d)
    return FeatureSet(data.copy(), tag)
