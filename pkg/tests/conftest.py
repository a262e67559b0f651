import sys
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

TESTS = Path(__file__).resolve().parent
ASSETS = TESTS / "assets"
sys.path.insert(0, str(TESTS))


def blob_mask(rng, h, w):
    yy, xx = np.mgrid[0:h, 0:w]
    cy, cx = rng.uniform(0.3, 0.7) * h, rng.uniform(0.3, 0.7) * w
    ry, rx = rng.uniform(0.15, 0.3) * h, rng.uniform(0.15, 0.3) * w
    return ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0


def textured_image(rng, mask):
    h, w = mask.shape
    base = rng.integers(40, 90, size=(h, w))
    img = np.where(mask, base + 110, base)
    return np.clip(img + rng.integers(-10, 11, size=(h, w)), 0, 255).astype(np.uint8)


def write_dataset(root: Path, n=4, size=(40, 48), seed=0, preds=True, edges=False, subdirs=()):
    """Synthetic dataset of PNGs: gts/, images/, optionally preds/ and edges/."""
    rng = np.random.default_rng(seed)
    h, w = size
    dirs = {k: root / k for k in ("gts", "images", "preds", "edges")}
    for d in dirs.values():
        d.mkdir(parents=True, exist_ok=True)
    for i in range(n):
        stem = f"img{i:03d}"
        gt = blob_mask(rng, h, w)
        Image.fromarray((gt * 255).astype(np.uint8)).save(dirs["gts"] / f"{stem}.png")
        Image.fromarray(textured_image(rng, gt)).save(dirs["images"] / f"{stem}.png")
        soft = np.clip(gt * 0.8 + rng.random((h, w)) * 0.3, 0, 1)
        if preds:
            Image.fromarray(np.round(soft * 255).astype(np.uint8)).save(dirs["preds"] / f"{stem}.png")
            for sub in subdirs:
                (dirs["preds"] / sub).mkdir(exist_ok=True)
                Image.fromarray(np.round(soft * 255).astype(np.uint8)).save(dirs["preds"] / sub / f"{stem}.png")
        if edges:
            e = np.full((h, w), 20, np.uint8)
            ring = gt ^ np.roll(gt, 1, axis=1)
            e[ring] = 200
            Image.fromarray(e).save(dirs["edges"] / f"{stem}.png")
    return dirs


@pytest.fixture
def dataset(tmp_path):
    return write_dataset(tmp_path / "data", edges=True)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
