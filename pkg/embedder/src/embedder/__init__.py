"""Image feature extraction into the FVEC1 interchange format."""

__version__ = "0.1.0"

from .extract import ExtractError, build_model, extract_features, load_gray
from .featfile import CheckReport, FeatureFileError, read_fvec, selfcheck, write_fvec
from .manifests import ManifestError, read_manifest

__all__ = [
    "CheckReport",
    "ExtractError",
    "FeatureFileError",
    "ManifestError",
    "build_model",
    "extract_features",
    "load_gray",
    "read_fvec",
    "read_manifest",
    "selfcheck",
    "write_fvec",
]
