"""Single-level 2-D Haar transform and the diagonal high-frequency branch.

Each non-overlapping 2x2 block ``[[x1, x2], [x3, x4]]`` (row-major) maps to

    LL = (x1 + x2 + x3 + x4) / 4
    LH = (x1 - x2 + x3 - x4) / 4     horizontal detail
    HL = (x1 + x2 - x3 - x4) / 4     vertical detail
    HH = (x1 - x2 - x3 + x4) / 4     diagonal detail

The 1/4 scale keeps LL of a constant plane equal to that constant. Odd
dimensions are padded by edge replication and cropped again on inverse.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError

SUBBANDS = ("LL", "LH", "HL", "HH")


@dataclass(frozen=True)
class Subbands:
    ll: np.ndarray
    lh: np.ndarray
    hl: np.ndarray
    hh: np.ndarray
    orig_w: int
    orig_h: int

    def __post_init__(self):
        shapes = {self.ll.shape, self.lh.shape, self.hl.shape, self.hh.shape}
        if len(shapes) != 1:
            raise ShapeError(f"subband planes differ in shape: {sorted(shapes)}")

    def __getitem__(self, which: str) -> np.ndarray:
        return select_subband(self, which)


def _blocks(plane: np.ndarray):
    return plane[0::2, 0::2], plane[0::2, 1::2], plane[1::2, 0::2], plane[1::2, 1::2]


def dwt2_haar(plane) -> Subbands:
    x = np.asarray(plane, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2 or x.shape[1] < 2:
        raise ShapeError(f"Haar DWT needs a 2-D plane of at least 2x2, got {x.shape}")
    h, w = x.shape
    if h % 2 or w % 2:
        x = np.pad(x, ((0, h % 2), (0, w % 2)), mode="edge")
    x1, x2, x3, x4 = _blocks(x)
    # pairwise grouping makes HH of row- or column-constant blocks exactly 0
    top, bottom = x1 - x2, x3 - x4
    return Subbands(
        ll=((x1 + x2) + (x3 + x4)) / 4.0,
        lh=(top + bottom) / 4.0,
        hl=((x1 + x2) - (x3 + x4)) / 4.0,
        hh=(top - bottom) / 4.0,
        orig_w=w,
        orig_h=h,
    )


def idwt2_haar(sb: Subbands) -> np.ndarray:
    ll, lh, hl, hh = sb.ll, sb.lh, sb.hl, sb.hh
    bh, bw = ll.shape
    out = np.empty((2 * bh, 2 * bw), dtype=np.float64)
    out[0::2, 0::2] = ll + lh + hl + hh
    out[0::2, 1::2] = ll - lh + hl - hh
    out[1::2, 0::2] = ll + lh - hl - hh
    out[1::2, 1::2] = ll - lh - hl + hh
    return out[: sb.orig_h, : sb.orig_w]


def select_subband(sb: Subbands, which: str) -> np.ndarray:
    try:
        return {"LL": sb.ll, "LH": sb.lh, "HL": sb.hl, "HH": sb.hh}[which.upper()]
    except (KeyError, AttributeError):
        raise ValueError(f"unknown subband {which!r}; expected one of {SUBBANDS}") from None


def upsample2_nearest(plane: np.ndarray, h: int, w: int) -> np.ndarray:
    return np.repeat(np.repeat(plane, 2, axis=0), 2, axis=1)[:h, :w]


def subband_features(t, which: str = "HH") -> np.ndarray:
    """Per-channel subband of a (C, H, W) tensor, realigned to H x W by
    nearest-neighbour 2x upsampling."""
    t = np.asarray(t, dtype=np.float64)
    if t.ndim != 3:
        raise ShapeError(f"expected a (C, H, W) tensor, got shape {t.shape}")
    c, h, w = t.shape
    if h < 2 or w < 2:
        raise ShapeError(f"spatial dims must be >= 2, got {h}x{w}")
    out = np.empty_like(t)
    for ch in range(c):
        band = select_subband(dwt2_haar(t[ch]), which)
        out[ch] = upsample2_nearest(band, h, w)
    return out


def diagonal_hf(t) -> np.ndarray:
    """Diagonal high-frequency features (HH) of every channel, full size."""
    return subband_features(t, "HH")
