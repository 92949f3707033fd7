"""Measurement toolkit for augmented medical-image datasets.

Preprocessing (mask-guided crop, bilinear resize, [0, 1] normalization),
pairwise similarity metrics (RMSE, SRE, SSIM, sliding-window MSSIM), the
Fréchet distance between Gaussian feature fits, intra/inter-similarity
distribution analysis, classical augmentation with grid search and class
balancing, an adaptive-discriminator-augmentation probability controller,
and multi-class evaluation statistics including the Stuart-Maxwell test.
"""

__version__ = "0.1.0"

from .errors import ToolkitError
from .imagecore import (
    BinaryMask,
    GrayImage,
    Rect,
    crop,
    load_mask,
    load_png,
    mask_bbox,
    preprocess,
    resize_bilinear,
    save_png,
)
from .simmetrics import SsimParams, mssim, rmse, sre, ssim_global
from .frechet import (
    FeatureSet,
    GaussianMoments,
    fid,
    frechet_distance,
    gaussian_moments,
    load_features,
    sqrtm_psd,
    write_features,
)
from .distprotocol import (
    Histogram,
    SimilarityDistribution,
    histogram,
    inter_similarity,
    intra_similarity,
    sample_images,
)
from .augment import (
    AugmentParams,
    ParamGrid,
    augment_random,
    balance_by_augmentation,
    balance_by_duplication,
    brightness,
    grid_search,
    rotate,
    shift,
    stretch,
    zoom,
)
from .adacontrol import AdaState, new_ada, observe, r_t, sign_mean
from .evalstats import (
    ConfusionMatrix,
    MetricReport,
    chi2_sf,
    confusion,
    metrics,
    stuart_maxwell,
)
from .manifest import Manifest, Record, load_manifest, save_manifest, split

__all__ = [
    "AdaState",
    "AugmentParams",
    "BinaryMask",
    "ConfusionMatrix",
    "FeatureSet",
    "GaussianMoments",
    "GrayImage",
    "Histogram",
    "Manifest",
    "MetricReport",
    "ParamGrid",
    "Record",
    "Rect",
    "SimilarityDistribution",
    "SsimParams",
    "ToolkitError",
    "augment_random",
    "balance_by_augmentation",
    "balance_by_duplication",
    "brightness",
    "chi2_sf",
    "confusion",
    "crop",
    "fid",
    "frechet_distance",
    "gaussian_moments",
    "grid_search",
    "histogram",
    "inter_similarity",
    "intra_similarity",
    "load_features",
    "load_manifest",
    "load_mask",
    "load_png",
    "mask_bbox",
    "metrics",
    "mssim",
    "new_ada",
    "observe",
    "preprocess",
    "r_t",
    "resize_bilinear",
    "rmse",
    "rotate",
    "sample_images",
    "save_manifest",
    "save_png",
    "shift",
    "sign_mean",
    "sqrtm_psd",
    "sre",
    "ssim_global",
    "stretch",
    "stuart_maxwell",
    "split",
    "write_features",
    "zoom",
]
