"""Segmentation quality metrics for camouflaged-object and polyp benchmarks.

All functions take a prediction map ``pred`` (float, values in [0, 1]) and a
binary ground truth ``gt`` of the same shape.

Conventions for degenerate ground truth follow the public COD toolkits:

* S-measure: all-background GT gives ``1 - mean(pred)``, all-foreground GT
  gives ``mean(pred)``.
* E-measure: all-background GT scores the fraction of pixels predicted
  background at each level, all-foreground GT the fraction predicted
  foreground.
* Weighted F-measure is undefined for an empty GT; it raises
  :class:`UndefinedMetricError` and batch evaluation records a skip.
* Dice/IoU of two empty masks is 1.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import raster
from .cache import fingerprint
from .errors import EmptyReportError, ShapeError, UndefinedMetricError

# MATLAB eps, used by the reference formulations to dodge 0/0
EPS = float(np.spacing(1))

METRIC_FIELDS = ("s_alpha", "wfm", "e_phi", "mae", "dice", "iou")


@dataclass(frozen=True)
class MetricConfig:
    s_alpha_balance: float = 0.5
    wfm_beta2: float = 1.0
    wfm_blur_ksize: int = 7
    wfm_blur_sigma: float = 5.0
    wfm_decay_base: float = 0.5
    wfm_decay_scale: float = 5.0
    e_levels: int = 256
    dice_binarize: float = 0.5
    dice_mode: str = "binary"

    def __post_init__(self):
        if not 0.0 <= self.s_alpha_balance <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.s_alpha_balance}")
        if self.e_levels < 1:
            raise ValueError("need at least one E-measure level")
        if self.dice_mode not in ("binary", "continuous"):
            raise ValueError(f"dice_mode must be 'binary' or 'continuous', got {self.dice_mode!r}")

    def thresholds(self) -> np.ndarray:
        """Binarisation levels for the mean E-measure, bin centres in (0, 1)."""
        return (np.arange(self.e_levels, dtype=np.float64) + 0.5) / self.e_levels

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def fingerprint(self) -> str:
        return fingerprint(self.to_dict())


DEFAULT_CONFIG = MetricConfig()


def _prepare(pred, gt):
    pred = raster.as_float_map(pred)
    gt = raster.as_mask(gt)
    if pred.shape != gt.shape:
        raise ShapeError(f"prediction {pred.shape} and ground truth {gt.shape} differ")
    return pred, gt


def mae(pred, gt) -> float:
    pred, gt = _prepare(pred, gt)
    return float(np.mean(np.abs(pred - gt)))


# --------------------------------------------------------------------------
# S-measure
# --------------------------------------------------------------------------

def _object_similarity(x: np.ndarray) -> float:
    mean = float(np.mean(x))
    std = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
    return 2.0 * mean / (mean * mean + 1.0 + std + EPS)


def _object_score(pred, gt) -> float:
    u = float(np.mean(gt))
    fg = _object_similarity(pred[gt])
    bg = _object_similarity(1.0 - pred[~gt])
    return u * fg + (1.0 - u) * bg


def _ssim(pred, gt) -> float:
    n = pred.size
    x = pred.mean()
    y = gt.mean()
    dx = pred - x
    dy = gt - y
    sx = np.sum(dx * dx) / (n - 1 + EPS)
    sy = np.sum(dy * dy) / (n - 1 + EPS)
    sxy = np.sum(dx * dy) / (n - 1 + EPS)
    num = 4.0 * x * y * sxy
    den = (x * x + y * y) * (sx + sy)
    if num != 0:
        return float(num / (den + EPS))
    return 1.0 if den == 0 else 0.0


def _region_score(pred, gt) -> float:
    h, w = gt.shape
    area = h * w
    cy, cx = np.argwhere(gt).mean(axis=0).round()
    # quadrant split sits just after the (rounded) centroid pixel
    cy, cx = int(cy) + 1, int(cx) + 1
    g = gt.astype(np.float64)
    quads = (
        (slice(0, cy), slice(0, cx), cx * cy),
        (slice(0, cy), slice(cx, w), cy * (w - cx)),
        (slice(cy, h), slice(0, cx), (h - cy) * cx),
        (slice(cy, h), slice(cx, w), (h - cy) * (w - cx)),
    )
    score = 0.0
    for rows, cols, n in quads:
        if n == 0:
            continue
        score += _ssim(pred[rows, cols], g[rows, cols]) * (n / area)
    return score


def s_measure(pred, gt, cfg: MetricConfig = DEFAULT_CONFIG) -> float:
    """Structure measure: alpha * object score + (1 - alpha) * region score."""
    pred, gt = _prepare(pred, gt)
    y = float(np.mean(gt))
    if y == 0.0:
        s = 1.0 - float(np.mean(pred))
    elif y == 1.0:
        s = float(np.mean(pred))
    else:
        a = cfg.s_alpha_balance
        s = a * _object_score(pred, gt) + (1.0 - a) * _region_score(pred, gt)
    return float(min(1.0, max(0.0, s)))


# --------------------------------------------------------------------------
# E-measure
# --------------------------------------------------------------------------

def _count_at_or_above(sorted_vals: np.ndarray, levels: np.ndarray) -> np.ndarray:
    return sorted_vals.size - np.searchsorted(sorted_vals, levels, side="left")


def e_measure_curve(pred, gt, cfg: MetricConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Enhanced-alignment score at each binarisation level (pred >= level)."""
    pred, gt = _prepare(pred, gt)
    levels = cfg.thresholds()
    n = gt.size
    g = int(np.count_nonzero(gt))
    tp = _count_at_or_above(np.sort(pred[gt]), levels).astype(np.float64)
    fp = _count_at_or_above(np.sort(pred[~gt]), levels).astype(np.float64)
    pred_fg = tp + fp
    if g == 0:
        return (n - pred_fg) / n
    if g == n:
        return pred_fg / n
    fn = g - tp
    tn = n - pred_fg - fn
    mu_p = pred_fg / n
    mu_g = g / n
    total = np.zeros_like(levels)
    # (count, demeaned pred value, demeaned gt value) per confusion cell
    cells = (
        (tp, 1.0 - mu_p, 1.0 - mu_g),
        (fp, 1.0 - mu_p, 0.0 - mu_g),
        (fn, 0.0 - mu_p, 1.0 - mu_g),
        (tn, 0.0 - mu_p, 0.0 - mu_g),
    )
    for count, a, b in cells:
        align = 2.0 * a * b / (a * a + b * b + EPS)
        total += count * (align + 1.0) ** 2 / 4.0
    return total / n


def e_measure_mean(pred, gt, cfg: MetricConfig = DEFAULT_CONFIG) -> float:
    curve = e_measure_curve(pred, gt, cfg)
    return float(min(1.0, max(0.0, float(np.mean(curve)))))


# --------------------------------------------------------------------------
# weighted F-measure
# --------------------------------------------------------------------------

def weighted_fmeasure(pred, gt, cfg: MetricConfig = DEFAULT_CONFIG) -> float:
    """Weighted F-beta with dependency-corrected errors and distance-decayed
    background importance."""
    pred, gt = _prepare(pred, gt)
    if not gt.any():
        raise UndefinedMetricError("weighted F-measure is undefined for an empty ground truth")
    dist, (rows, cols) = raster.distance_transform(gt, return_indices=True)
    err = np.abs(pred - gt)
    # background pixels borrow the error of their nearest foreground pixel
    err_t = err[rows, cols]
    blurred = raster.gaussian_blur(err_t, cfg.wfm_blur_ksize, cfg.wfm_blur_sigma, border="constant")
    min_err = np.where(gt & (blurred < err), blurred, err)
    importance = np.where(gt, 1.0, 2.0 - np.exp(math.log(cfg.wfm_decay_base) / cfg.wfm_decay_scale * dist))
    weighted = min_err * importance
    tp = float(np.count_nonzero(gt)) - float(np.sum(weighted[gt]))
    fp = float(np.sum(weighted[~gt]))
    recall = 1.0 - float(np.mean(weighted[gt]))
    precision = tp / (tp + fp + EPS)
    b2 = cfg.wfm_beta2
    q = (1.0 + b2) * recall * precision / (recall + b2 * precision + EPS)
    return float(min(1.0, max(0.0, q)))


# --------------------------------------------------------------------------
# overlap metrics
# --------------------------------------------------------------------------

def dice_iou(pred, gt, cfg: MetricConfig = DEFAULT_CONFIG) -> tuple[float, float]:
    pred, gt = _prepare(pred, gt)
    g = gt.astype(np.float64)
    if cfg.dice_mode == "binary":
        p = (pred > cfg.dice_binarize).astype(np.float64)
    else:
        p = pred
    inter = float(np.sum(p * g))
    total = float(np.sum(p) + np.sum(g))
    if total == 0.0:
        return 1.0, 1.0
    iou = inter / (total - inter)
    if cfg.dice_mode == "binary":
        # integer counts: 2I/T == 2J/(1+J); derive it so the identity is exact
        return 2.0 * iou / (1.0 + iou), iou
    return 2.0 * inter / total, iou


# --------------------------------------------------------------------------
# per-image records and aggregation
# --------------------------------------------------------------------------

@dataclass
class PairRecord:
    image_id: str
    s_alpha: float | None = None
    wfm: float | None = None
    e_phi: float | None = None
    mae: float | None = None
    dice: float | None = None
    iou: float | None = None
    config: str = ""
    skipped: dict = field(default_factory=dict)

    def values(self) -> dict:
        return {name: getattr(self, name) for name in METRIC_FIELDS}

    @property
    def fully_skipped(self) -> bool:
        return all(v is None for v in self.values().values())


def evaluate_pair(pred, gt, cfg: MetricConfig = DEFAULT_CONFIG, image_id: str = "") -> PairRecord:
    """All six metrics for one pair; a metric that cannot be computed is
    left as ``None`` with its reason in ``skipped``."""
    rec = PairRecord(image_id=image_id, config=cfg.fingerprint)
    try:
        pred, gt = _prepare(pred, gt)
    except (ShapeError, ValueError) as exc:
        rec.skipped = {name: str(exc) for name in METRIC_FIELDS}
        return rec
    steps = {
        "s_alpha": lambda: s_measure(pred, gt, cfg),
        "wfm": lambda: weighted_fmeasure(pred, gt, cfg),
        "e_phi": lambda: e_measure_mean(pred, gt, cfg),
        "mae": lambda: mae(pred, gt),
    }
    for name, fn in steps.items():
        try:
            setattr(rec, name, fn())
        except UndefinedMetricError as exc:
            rec.skipped[name] = str(exc)
    rec.dice, rec.iou = dice_iou(pred, gt, cfg)
    return rec


@dataclass
class MetricReport:
    per_image: list
    aggregate: dict
    counts: dict
    skipped: int
    config: str = ""

    @property
    def count(self) -> int:
        return len(self.per_image)


def aggregate(records, config: str = "") -> MetricReport:
    """Arithmetic mean of each metric over the records that have it."""
    records = list(records)
    means = {}
    counts = {}
    for name in METRIC_FIELDS:
        vals = [getattr(r, name) for r in records if getattr(r, name) is not None]
        counts[name] = len(vals)
        means[name] = math.fsum(vals) / len(vals) if vals else None
    if all(c == 0 for c in counts.values()):
        raise EmptyReportError("every record was skipped; nothing to aggregate")
    skipped = sum(1 for r in records if r.skipped)
    if not config and records:
        config = records[0].config
    return MetricReport(per_image=records, aggregate=means, counts=counts, skipped=skipped, config=config)
