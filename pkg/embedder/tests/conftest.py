import numpy as np
import pytest
from PIL import Image


@pytest.fixture
def dataset(tmp_path):
    """16 synthetic grayscale PNGs across two classes, plus a manifest."""
    imgdir = tmp_path / "images"
    imgdir.mkdir()
    rng = np.random.default_rng(42)
    lines = ["id,path,class,split,origin,annotated"]
    for i in range(16):
        cls = "a" if i < 10 else "b"
        rid = f"{cls}{i}"
        arr = (rng.random((32, 32)) * 255).astype(np.uint8)
        Image.fromarray(arr, mode="L").save(imgdir / f"{rid}.png")
        lines.append(f"{rid},images/{rid}.png,{cls},none,real,0")
    manifest = tmp_path / "manifest.csv"
    manifest.write_text("\n".join(lines) + "\n")
    return manifest
