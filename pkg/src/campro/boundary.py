"""Prompt generation: gradient boundary masks, box prompts and the
inference-time generated boundary."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import raster
from .errors import EmptyInputError, EmptyTargetError, ShapeError

EGEM_MODES = ("binary", "magnitude")


@dataclass(frozen=True)
class DilatePair:
    """Inner (``d1``) and outer (``d2``) square dilation sizes."""

    d1: int = 3
    d2: int = 5

    def __post_init__(self):
        raster.check_kernel(self.d1)
        raster.check_kernel(self.d2)
        if self.d1 > self.d2:
            raise ValueError(f"inner dilation {self.d1} larger than outer {self.d2}")


# D1..D5 settings of the dilation ablation; D2 is the default
DILATE_GRID = {
    "D1": DilatePair(3, 3),
    "D2": DilatePair(3, 5),
    "D3": DilatePair(5, 5),
    "D4": DilatePair(5, 7),
    "D5": DilatePair(7, 7),
}

OFFSET_GRID = (5, 10, 15, 20, 25)
DEFAULT_OFFSET = 15


@dataclass(frozen=True)
class BoundingBox:
    """Inclusive pixel box (x0, y0)-(x1, y1)."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        if self.x0 > self.x1 or self.y0 > self.y1:
            raise ValueError(f"degenerate box {self}")

    def as_tuple(self):
        return (self.x0, self.y0, self.x1, self.y1)

    def mask(self, width: int, height: int) -> np.ndarray:
        if self.x0 < 0 or self.y0 < 0 or self.x1 >= width or self.y1 >= height:
            raise ShapeError(f"box {self.as_tuple()} outside {width}x{height} image")
        out = np.zeros((height, width), dtype=bool)
        out[self.y0 : self.y1 + 1, self.x0 : self.x1 + 1] = True
        return out


@dataclass(frozen=True)
class ThresholdSpec:
    """Binarisation rule for edge maps: pass pixels strictly above
    ``beta + offset``. ``beta=None`` means "take the histogram mode"."""

    offset: int = DEFAULT_OFFSET
    beta: int | None = None

    def threshold(self, beta: int) -> int:
        return int(min(255, max(0, beta + self.offset)))

    def to_dict(self):
        return asdict(self)


def edge_band(gt, pair: DilatePair = DilatePair()) -> np.ndarray:
    """Thickened object contour: dilate(dilate(gt, d1) - gt, d2)."""
    gt = raster.as_mask(gt)
    ring = raster.mask_subtract(raster.dilate(gt, pair.d1), gt)
    return raster.dilate(ring, pair.d2)


def egem(
    gt,
    img,
    pair: DilatePair = DilatePair(),
    mode: str = "binary",
    sigma: float = raster.CANNY_SIGMA,
    low: float = raster.CANNY_LOW,
    high: float = raster.CANNY_HIGH,
) -> np.ndarray:
    """Boundary mask with gradient: the edge band around ``gt`` multiplied
    by the Canny response of ``img``.

    ``mode="binary"`` multiplies by the Canny edge map, ``"magnitude"`` also
    multiplies by the normalised Sobel magnitude. Output is float in [0, 1].
    """
    if mode not in EGEM_MODES:
        raise ValueError(f"mode must be one of {EGEM_MODES}, got {mode!r}")
    gt = raster.as_mask(gt)
    img = raster.as_gray(img)
    raster.check_same_shape(gt, img, names=("gt", "image"))
    band = edge_band(gt, pair)
    edges, magnitude = raster.canny(img, sigma, low, high)
    out = (band & edges).astype(np.float64)
    if mode == "magnitude":
        out *= magnitude
    return out


def extract_box(gt, jitter: int = 0) -> BoundingBox:
    """Tight box around the set pixels, grown by ``jitter`` and clamped."""
    gt = raster.as_mask(gt)
    ys = np.flatnonzero(gt.any(axis=1))
    xs = np.flatnonzero(gt.any(axis=0))
    if ys.size == 0:
        raise EmptyTargetError("cannot build a box prompt from an empty mask")
    h, w = gt.shape
    return BoundingBox(
        max(0, int(xs[0]) - jitter),
        max(0, int(ys[0]) - jitter),
        min(w - 1, int(xs[-1]) + jitter),
        min(h - 1, int(ys[-1]) + jitter),
    )


def jittered_box(gt, max_jitter: int, rng: np.random.Generator) -> BoundingBox:
    """Box with each side independently perturbed by up to ``max_jitter``
    pixels, imitating an imprecise user prompt."""
    box = extract_box(gt)
    h, w = raster.as_mask(gt).shape
    dx0, dy0, dx1, dy1 = rng.integers(-max_jitter, max_jitter + 1, size=4)
    x0 = int(np.clip(box.x0 + dx0, 0, w - 1))
    y0 = int(np.clip(box.y0 + dy0, 0, h - 1))
    x1 = int(np.clip(box.x1 + dx1, x0, w - 1))
    y1 = int(np.clip(box.y1 + dy1, y0, h - 1))
    return BoundingBox(x0, y0, x1, y1)


def dominant_value(counts) -> int:
    """Most frequent intensity; ties go to the lowest intensity."""
    counts = np.asarray(counts)
    if counts.sum() < 1:
        raise EmptyInputError("histogram has no samples")
    # np.argmax returns the first maximal bin
    return int(np.argmax(counts))


def generate_inference_boundary(edge_map, box: BoundingBox, gradient, spec: ThresholdSpec = ThresholdSpec()):
    """Generated boundary for inference from a predicted edge map.

    The edge map is binarised at mode + offset (strictly greater passes),
    cleared outside ``box`` and multiplied with ``gradient``.
    """
    edge_map = raster.as_gray(edge_map)
    gradient = raster.as_float_map(gradient)
    raster.check_same_shape(edge_map, gradient, names=("edge_map", "gradient"))
    beta = spec.beta if spec.beta is not None else dominant_value(raster.histogram(edge_map))
    h, w = edge_map.shape
    binary = (edge_map > spec.threshold(beta)) & box.mask(w, h)
    return np.clip(binary * gradient, 0.0, 1.0)
