"""Feature extraction with a pretrained torchvision backbone.

Images are loaded as grayscale, replicated to three channels, resized to
the backbone's input size, normalized with the standard ImageNet statistics,
and pushed through the network once; a forward hook on the chosen layer
(final global pooling by default) captures one vector per image. Inference
runs in eval mode under deterministic settings, so the same inputs always
produce a byte-identical feature file.
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import torch
import torchvision.models
from PIL import Image, UnidentifiedImageError

from .featfile import write_fvec
from .manifests import read_manifest

DEFAULT_BACKBONE = "inception_v3"
DEFAULT_LAYER = "avgpool"
DEFAULT_SIZE = 299

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


class ExtractError(Exception):
    """Model loading or feature capture failed."""


def load_gray(path) -> np.ndarray:
    """Decode an image to a (h, w) float array in [0, 1]."""
    try:
        with Image.open(path) as img:
            if img.mode.startswith("I;16"):
                return np.asarray(img, dtype=np.float64) / 65535.0
            return np.asarray(img.convert("L"), dtype=np.float64) / 255.0
    except (UnidentifiedImageError, OSError) as exc:
        raise ExtractError(f"{path}: {exc}") from exc


def build_model(backbone: str, weights: str, device: str, seed: int):
    """Instantiate a torchvision classification model in eval mode.

    ``weights`` is "auto" (the pretrained default), "none" (seeded random
    initialization), or a path to a saved state dict.
    """
    ctor = getattr(torchvision.models, backbone, None)
    if ctor is None:
        raise ExtractError(f"unknown backbone {backbone!r}")
    def blank():
        # some constructors re-initialize with a legacy scheme unless told
        # otherwise; the plain module defaults are better conditioned
        try:
            return ctor(weights=None, init_weights=False)
        except TypeError:
            return ctor(weights=None)

    try:
        if weights == "auto":
            model = ctor(weights="DEFAULT")
        elif weights == "none":
            torch.manual_seed(seed)
            model = blank()
        else:
            model = blank()
            state = torch.load(weights, map_location=device, weights_only=True)
            model.load_state_dict(state)
    except ExtractError:
        raise
    except Exception as exc:
        raise ExtractError(f"failed to build {backbone!r} ({weights}): {exc}") from exc
    model.to(device)
    model.eval()
    return model


def _to_batch(arrays, size: int, device: str) -> torch.Tensor:
    tensors = []
    for arr in arrays:
        t = torch.as_tensor(arr, dtype=torch.float32)[None, None]
        t = torch.nn.functional.interpolate(
            t, size=(size, size), mode="bilinear", align_corners=False
        )
        tensors.append(t[0].expand(3, -1, -1))
    batch = torch.stack(tensors).to(device)
    mean = torch.tensor(IMAGENET_MEAN, device=device).view(1, 3, 1, 1)
    std = torch.tensor(IMAGENET_STD, device=device).view(1, 3, 1, 1)
    return (batch - mean) / std


def extract_features(
    manifest,
    out,
    cls: str = None,
    backbone: str = DEFAULT_BACKBONE,
    layer: str = DEFAULT_LAYER,
    weights: str = "auto",
    size: int = DEFAULT_SIZE,
    batch: int = 8,
    seed: int = 0,
    device: str = "cpu",
):
    """Write one feature vector per selected image; returns (n, d, tag).

    Vectors appear in manifest order. Decode failures are reported per
    image and abort the run. With zero selected images the model is probed
    once on a blank input so the header still records the true dimension.
    """
    rows = read_manifest(manifest, cls)
    torch.use_deterministic_algorithms(True)
    model = build_model(backbone, weights, device, seed)

    modules = dict(model.named_modules())
    if layer not in modules:
        raise ExtractError(f"backbone {backbone!r} has no layer named {layer!r}")
    captured = []
    handle = modules[layer].register_forward_hook(
        lambda mod, inp, out_t: captured.append(out_t.detach())
    )
    tag = f"{backbone}/{layer}"

    def run_batch(arrays):
        captured.clear()
        with torch.no_grad():
            model(_to_batch(arrays, size, device))
        if not captured:
            raise ExtractError(f"layer {layer!r} produced no activation")
        return captured[-1].flatten(1).cpu().numpy().astype("<f4")

    failures = []
    images = []
    for rid, rpath in rows:
        try:
            images.append(load_gray(rpath))
        except ExtractError as exc:
            failures.append(f"{rid}: {exc}")
    if failures:
        for line in failures:
            print(line, file=sys.stderr)
        raise ExtractError(f"{len(failures)} images failed to decode")

    chunks = []
    for start in range(0, len(images), batch):
        chunks.append(run_batch(images[start : start + batch]))

    if chunks:
        data = np.concatenate(chunks, axis=0)
    else:
        probe = run_batch([np.zeros((size, size))])
        data = np.empty((0, probe.shape[1]), dtype="<f4")
    handle.remove()

    Path(out).parent.mkdir(parents=True, exist_ok=True)
    write_fvec(out, data, tag)
    return data.shape[0], data.shape[1], tag
