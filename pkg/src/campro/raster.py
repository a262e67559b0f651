"""Raster primitives shared by the prompt, wavelet and metric pipelines.

Rasters are plain 2-D numpy arrays:

* gray image  -- ``uint8`` (H, W)
* binary mask -- ``bool`` (H, W)
* float map   -- ``float64`` (H, W), values in [0, 1] unless stated otherwise

Every function here is pure: inputs are never modified in place.
"""
from __future__ import annotations

import math
from pathlib import Path

import numba
import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import InvalidKernelError, InvalidRangeError, InvalidThresholdError, ShapeError

CANNY_SIGMA = 1.4
CANNY_LOW = 50.0
CANNY_HIGH = 150.0

# 8-connected neighbourhood for hysteresis linking
_EIGHT = np.ones((3, 3), dtype=bool)


# --------------------------------------------------------------------------
# validation helpers
# --------------------------------------------------------------------------

def as_gray(img) -> np.ndarray:
    arr = np.asarray(img)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"expected a non-empty 2-D gray image, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        if np.any(arr < 0) or np.any(arr > 255):
            raise ValueError("gray image values must lie in 0..255")
        arr = arr.astype(np.uint8)
    return arr


def as_mask(mask) -> np.ndarray:
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise ShapeError(f"expected a 2-D mask, got shape {arr.shape}")
    return arr.astype(bool, copy=False)


def as_float_map(fmap) -> np.ndarray:
    arr = np.asarray(fmap, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"expected a 2-D float map, got shape {arr.shape}")
    return arr


def check_same_shape(*arrays, names=None) -> None:
    shapes = [np.shape(a) for a in arrays]
    if any(s != shapes[0] for s in shapes[1:]):
        label = ", ".join(names) if names else "inputs"
        raise ShapeError(f"dimension mismatch between {label}: {shapes}")


def check_kernel(k: int) -> int:
    if isinstance(k, bool) or int(k) != k or k < 1 or k % 2 == 0:
        raise InvalidKernelError(f"kernel size must be an odd integer >= 1, got {k!r}")
    return int(k)


# --------------------------------------------------------------------------
# morphology
# --------------------------------------------------------------------------

def dilate(mask, k: int) -> np.ndarray:
    """Binary dilation by a k x k square; pixels outside the image count as 0.

    The square element is separable, so this is a row-wise OR followed by a
    column-wise OR over shifted copies.
    """
    k = check_kernel(k)
    m = as_mask(mask)
    r = k // 2
    if r == 0:
        return m.copy()
    h, w = m.shape
    rows = np.zeros_like(m)
    for dx in range(-r, r + 1):
        if abs(dx) >= w:
            continue
        if dx >= 0:
            rows[:, : w - dx] |= m[:, dx:]
        else:
            rows[:, -dx:] |= m[:, : w + dx]
    out = np.zeros_like(m)
    for dy in range(-r, r + 1):
        if abs(dy) >= h:
            continue
        if dy >= 0:
            out[: h - dy, :] |= rows[dy:, :]
        else:
            out[-dy:, :] |= rows[: h + dy, :]
    return out


def mask_subtract(a, b) -> np.ndarray:
    """Pixels set in ``a`` and clear in ``b``."""
    a = as_mask(a)
    b = as_mask(b)
    check_same_shape(a, b, names=("a", "b"))
    return a & ~b


# --------------------------------------------------------------------------
# filtering
# --------------------------------------------------------------------------

def gaussian_kernel1d(ksize: int, sigma: float) -> np.ndarray:
    """Normalised 1-D Gaussian taps; the outer product of two of these is the
    normalised 2-D kernel."""
    ksize = check_kernel(ksize)
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    half = (ksize - 1) / 2
    x = np.arange(ksize, dtype=np.float64) - half
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return g / g.sum()


def _correlate_axis(arr: np.ndarray, taps: np.ndarray, axis: int, border: str) -> np.ndarray:
    r = len(taps) // 2
    if border == "replicate":
        mode = "edge"
    elif border == "constant":
        mode = "constant"
    else:
        raise ValueError(f"unknown border policy {border!r}")
    pad = [(0, 0), (0, 0)]
    pad[axis] = (r, r)
    padded = np.pad(arr, pad, mode=mode)
    n = arr.shape[axis]
    out = np.zeros_like(arr, dtype=np.float64)
    # accumulate in tap order so results are reproducible by a scalar loop
    for i, t in enumerate(taps):
        if axis == 0:
            out += t * padded[i : i + n, :]
        else:
            out += t * padded[:, i : i + n]
    return out


def correlate_separable(arr, taps_y, taps_x, border: str = "replicate") -> np.ndarray:
    """Correlate with ``outer(taps_y, taps_x)``: horizontal pass first."""
    arr = np.asarray(arr, dtype=np.float64)
    tmp = _correlate_axis(arr, np.asarray(taps_x, dtype=np.float64), 1, border)
    return _correlate_axis(tmp, np.asarray(taps_y, dtype=np.float64), 0, border)


def gaussian_blur(fmap, ksize: int, sigma: float, border: str = "replicate") -> np.ndarray:
    """Separable Gaussian blur (horizontal pass, then vertical).

    ``border`` is ``"replicate"`` (default) or ``"constant"`` (zero padding,
    which is what the weighted F-measure uses).
    """
    arr = as_float_map(fmap)
    g = gaussian_kernel1d(ksize, sigma)
    return correlate_separable(arr, g, g, border=border)


def sobel(img) -> tuple[np.ndarray, np.ndarray]:
    """Sobel derivatives (d/dx, d/dy) with replicated borders."""
    arr = np.asarray(img, dtype=np.float64)
    smooth = np.array([1.0, 2.0, 1.0])
    diff = np.array([-1.0, 0.0, 1.0])
    gx = correlate_separable(arr, smooth, diff)
    gy = correlate_separable(arr, diff, smooth)
    return gx, gy


def _canny_ksize(sigma: float) -> int:
    return 2 * int(math.ceil(3.0 * sigma)) + 1


def _non_max_suppression(mag: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    h, w = mag.shape
    padded = np.pad(mag, 1, mode="constant")

    def at(dy, dx):
        return padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]

    # gradient direction quantised to 0/45/90/135 degrees (image y axis down)
    angle = np.rad2deg(np.arctan2(gy, gx)) % 180.0
    sector = np.zeros(mag.shape, dtype=np.int8)
    sector[(angle >= 22.5) & (angle < 67.5)] = 1
    sector[(angle >= 67.5) & (angle < 112.5)] = 2
    sector[(angle >= 112.5) & (angle < 157.5)] = 3

    # (before, after) neighbour offsets along the gradient for each sector;
    # strict on the "before" side and non-strict on the "after" side so a
    # symmetric ridge keeps exactly one pixel
    offsets = {
        0: ((0, -1), (0, 1)),
        1: ((-1, -1), (1, 1)),
        2: ((-1, 0), (1, 0)),
        3: ((-1, 1), (1, -1)),
    }
    keep = np.zeros(mag.shape, dtype=bool)
    for s, (before, after) in offsets.items():
        sel = sector == s
        keep |= sel & (mag > at(*before)) & (mag >= at(*after))
    return np.where(keep, mag, 0.0)


def _hysteresis(nms: np.ndarray, low: float, high: float) -> np.ndarray:
    weak = nms > low
    strong = nms > high
    if not strong.any():
        return np.zeros_like(weak)
    labels, n = ndimage.label(weak, structure=_EIGHT)
    hit = np.zeros(n + 1, dtype=bool)
    hit[labels[strong]] = True
    hit[0] = False
    return hit[labels]


def canny(img, sigma: float = CANNY_SIGMA, low: float = CANNY_LOW, high: float = CANNY_HIGH):
    """Classical Canny detector on an 8-bit image.

    Returns ``(edges, magnitude)``. ``low``/``high`` are hysteresis thresholds
    on the Sobel magnitude of the smoothed 8-bit image; ``magnitude`` is that
    same Sobel magnitude divided by its maximum (all-zero for flat input).
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if low < 0 or low > high:
        raise InvalidThresholdError(f"need 0 <= low <= high, got low={low}, high={high}")
    gray = as_gray(img).astype(np.float64)
    smoothed = gaussian_blur(gray, _canny_ksize(sigma), sigma)
    gx, gy = sobel(smoothed)
    mag = np.sqrt(gx * gx + gy * gy)
    nms = _non_max_suppression(mag, gx, gy)
    edges = _hysteresis(nms, low, high)
    peak = mag.max()
    magnitude = mag / peak if peak > 0 else np.zeros_like(mag)
    return edges, magnitude


# --------------------------------------------------------------------------
# exact Euclidean distance transform (lower envelope of parabolas)
# --------------------------------------------------------------------------

@numba.njit(cache=True)
def _edt_rows(f, out_d, out_idx, v, z):
    # 1-D squared-distance transform of every row of f (inf = no site)
    h, w = f.shape
    for y in range(h):
        k = -1
        for q in range(w):
            fq = f[y, q]
            if fq == np.inf:
                continue
            if k < 0:
                k = 0
                v[0] = q
                z[0] = -np.inf
                z[1] = np.inf
                continue
            while True:
                p = v[k]
                s = ((fq + q * q) - (f[y, p] + p * p)) / (2.0 * (q - p))
                if s <= z[k]:
                    k -= 1
                    if k < 0:
                        break
                else:
                    break
            if k < 0:
                k = 0
                v[0] = q
                z[0] = -np.inf
                z[1] = np.inf
                continue
            k += 1
            v[k] = q
            z[k] = s
            z[k + 1] = np.inf
        if k < 0:
            for q in range(w):
                out_d[y, q] = np.inf
                out_idx[y, q] = -1
            continue
        j = 0
        for q in range(w):
            while z[j + 1] < q:
                j += 1
            p = v[j]
            out_d[y, q] = (q - p) * (q - p) + f[y, p]
            out_idx[y, q] = p


@numba.njit(cache=True)
def _column_pass(mask, g, nearest_row):
    # squared distance to the nearest set pixel in the same column
    h, w = mask.shape
    for x in range(w):
        last = -1
        for y in range(h):
            if mask[y, x]:
                last = y
            if last >= 0:
                g[y, x] = (y - last) * (y - last)
                nearest_row[y, x] = last
            else:
                g[y, x] = np.inf
                nearest_row[y, x] = -1
        last = -1
        for y in range(h - 1, -1, -1):
            if mask[y, x]:
                last = y
            if last >= 0:
                d = (last - y) * (last - y)
                if d < g[y, x]:
                    g[y, x] = d
                    nearest_row[y, x] = last


def distance_transform(mask, return_indices: bool = False):
    """Exact Euclidean distance from every pixel to the nearest set pixel.

    Set pixels get 0. An empty mask yields ``inf`` everywhere (and index
    planes filled with -1). With ``return_indices`` also returns
    ``(rows, cols)`` of the nearest set pixel for each location.
    """
    m = as_mask(mask)
    h, w = m.shape
    g = np.empty((h, w), dtype=np.float64)
    nearest_row = np.empty((h, w), dtype=np.int64)
    _column_pass(m, g, nearest_row)
    sq = np.empty((h, w), dtype=np.float64)
    col = np.empty((h, w), dtype=np.int64)
    v = np.empty(w, dtype=np.int64)
    z = np.empty(w + 1, dtype=np.float64)
    _edt_rows(g, sq, col, v, z)
    dist = np.sqrt(sq)
    if not return_indices:
        return dist
    ys = np.arange(h)[:, None]
    rows = np.where(col >= 0, nearest_row[ys, np.maximum(col, 0)], -1)
    return dist, (rows, col)


# --------------------------------------------------------------------------
# intensity statistics and resampling
# --------------------------------------------------------------------------

def histogram(img) -> np.ndarray:
    """256-bin intensity histogram of an 8-bit image."""
    return np.bincount(as_gray(img).ravel(), minlength=256).astype(np.int64)


def resize_bilinear(img, w: int, h: int) -> np.ndarray:
    """Bilinear resampling with half-pixel centres (align_corners off).

    ``uint8`` input gives rounded ``uint8`` output; float input stays float.
    """
    if w < 1 or h < 1:
        raise ShapeError(f"target size must be positive, got {w}x{h}")
    src = np.asarray(img)
    if src.ndim != 2:
        raise ShapeError(f"expected a 2-D raster, got shape {src.shape}")
    in_h, in_w = src.shape
    if (in_w, in_h) == (w, h):
        return src.copy()
    data = src.astype(np.float64)

    def coords(n_out, n_in):
        c = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
        c = np.clip(c, 0.0, n_in - 1)
        lo = np.floor(c).astype(np.int64)
        hi = np.minimum(lo + 1, n_in - 1)
        return lo, hi, c - lo

    y0, y1, fy = coords(h, in_h)
    x0, x1, fx = coords(w, in_w)
    top = data[y0][:, x0] * (1 - fx) + data[y0][:, x1] * fx
    bottom = data[y1][:, x0] * (1 - fx) + data[y1][:, x1] * fx
    out = top * (1 - fy)[:, None] + bottom * fy[:, None]
    if src.dtype == np.uint8:
        return np.clip(np.rint(out), 0, 255).astype(np.uint8)
    if src.dtype == bool:
        return out >= 0.5
    return out


def truncate_normalize(img, lo_pct: float = 0.5, hi_pct: float = 99.5) -> np.ndarray:
    """Clip to the [lo_pct, hi_pct] percentile range, then rescale to [0, 1]."""
    if not (0 <= lo_pct < hi_pct <= 100):
        raise InvalidRangeError(f"need 0 <= lo_pct < hi_pct <= 100, got {lo_pct}, {hi_pct}")
    data = np.asarray(img, dtype=np.float64)
    lo, hi = np.percentile(data, [lo_pct, hi_pct])
    if hi <= lo:
        return np.zeros_like(data)
    clipped = np.clip(data, lo, hi)
    return (clipped - lo) / (hi - lo)


# --------------------------------------------------------------------------
# file IO
# --------------------------------------------------------------------------

def read_gray(path) -> np.ndarray:
    """Load PNG/JPEG/PGM as 8-bit gray; colour is converted with Rec.601 luma."""
    with Image.open(path) as im:
        if im.mode not in ("L", "P", "RGB", "RGBA", "I;16", "1", "LA"):
            im = im.convert("RGB")
        if im.mode == "I;16":
            arr = np.asarray(im, dtype=np.uint16) >> 8
            return arr.astype(np.uint8)
        return np.asarray(im.convert("L"), dtype=np.uint8).copy()


def read_mask(path) -> np.ndarray:
    """Ground-truth masks are binarised at > 128, as the COD toolkits do."""
    return read_gray(path) > 128


def read_float_map(path) -> np.ndarray:
    return read_gray(path).astype(np.float64) / 255.0


def to_uint8(fmap) -> np.ndarray:
    arr = np.asarray(fmap)
    if arr.dtype == np.uint8:
        return arr
    if arr.dtype == bool:
        return arr.astype(np.uint8) * 255
    return np.clip(np.rint(np.asarray(arr, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)


def write_png(path, fmap) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(to_uint8(fmap), mode="L").save(path, format="PNG")
    return path


def write_pgm(path, img) -> Path:
    """Binary (P5) PGM writer, handy for hand-made fixtures."""
    arr = as_gray(img)
    path = Path(path)
    h, w = arr.shape
    path.write_bytes(b"P5\n%d %d\n255\n" % (w, h) + arr.tobytes())
    return path
