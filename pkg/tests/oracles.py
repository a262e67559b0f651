"""Slow, obviously-correct reference implementations used by the tests.

Nothing here imports campro: each oracle is written directly from the
textbook definition with scalar loops or dense brute force.
"""
from __future__ import annotations

import math
from collections import deque

import numpy as np
from scipy import ndimage

MATLAB_EPS = float(np.spacing(1))


# --------------------------------------------------------------------------
# raster
# --------------------------------------------------------------------------

def dilate(mask, k):
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    r = k // 2
    out = np.zeros_like(mask)
    for y in range(h):
        for x in range(w):
            found = False
            for yy in range(y - r, y + r + 1):
                for xx in range(x - r, x + r + 1):
                    if 0 <= yy < h and 0 <= xx < w and mask[yy, xx]:
                        found = True
            out[y, x] = found
    return out


def squared_distances(mask):
    """All-pairs nearest set pixel, as exact integer squared distances."""
    mask = np.asarray(mask, dtype=bool)
    pts = np.argwhere(mask)
    h, w = mask.shape
    if len(pts) == 0:
        return None
    yy, xx = np.mgrid[0:h, 0:w]
    d = (yy[..., None] - pts[:, 0]) ** 2 + (xx[..., None] - pts[:, 1]) ** 2
    return d.min(axis=-1)


def gaussian_taps(ksize, sigma):
    half = (ksize - 1) / 2
    g = [math.exp(-((i - half) ** 2) / (2 * sigma * sigma)) for i in range(ksize)]
    s = sum(g)
    return [v / s for v in g]


def dense_correlate(img, kernel2d, border="replicate"):
    """O(N k^2) 2-D correlation with the full kernel."""
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    kh, kw = kernel2d.shape
    ry, rx = kh // 2, kw // 2
    out = np.zeros_like(img)
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for i in range(kh):
                for j in range(kw):
                    yy, xx = y + i - ry, x + j - rx
                    if border == "replicate":
                        yy = min(max(yy, 0), h - 1)
                        xx = min(max(xx, 0), w - 1)
                        acc += kernel2d[i, j] * img[yy, xx]
                    elif 0 <= yy < h and 0 <= xx < w:
                        acc += kernel2d[i, j] * img[yy, xx]
            out[y, x] = acc
    return out


def _separable_replicate(img, taps_y, taps_x):
    # scalar two-pass correlation, taps accumulated in order
    h = len(img)
    w = len(img[0])
    rx = len(taps_x) // 2
    ry = len(taps_y) // 2
    tmp = [[0.0] * w for _ in range(h)]
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for i, t in enumerate(taps_x):
                xx = min(max(x + i - rx, 0), w - 1)
                acc += t * img[y][xx]
            tmp[y][x] = acc
    out = [[0.0] * w for _ in range(h)]
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for i, t in enumerate(taps_y):
                yy = min(max(y + i - ry, 0), h - 1)
                acc += t * tmp[yy][x]
            out[y][x] = acc
    return out


def canny(img, sigma=1.4, low=50.0, high=150.0):
    """Straight-line Canny: blur, Sobel, 4-sector NMS, BFS hysteresis."""
    img = [[float(v) for v in row] for row in np.asarray(img)]
    h, w = len(img), len(img[0])
    ksize = 2 * int(math.ceil(3 * sigma)) + 1
    g = gaussian_taps(ksize, sigma)
    s = _separable_replicate(img, g, g)
    gx = _separable_replicate(s, [1.0, 2.0, 1.0], [-1.0, 0.0, 1.0])
    gy = _separable_replicate(s, [-1.0, 0.0, 1.0], [1.0, 2.0, 1.0])
    mag = [[math.sqrt(gx[y][x] * gx[y][x] + gy[y][x] * gy[y][x]) for x in range(w)] for y in range(h)]

    def m(y, x):
        return mag[y][x] if 0 <= y < h and 0 <= x < w else 0.0

    nms = [[0.0] * w for _ in range(h)]
    for y in range(h):
        for x in range(w):
            a = math.degrees(math.atan2(gy[y][x], gx[y][x])) % 180.0
            if 22.5 <= a < 67.5:
                (by, bx), (ay, ax) = (-1, -1), (1, 1)
            elif 67.5 <= a < 112.5:
                (by, bx), (ay, ax) = (-1, 0), (1, 0)
            elif 112.5 <= a < 157.5:
                (by, bx), (ay, ax) = (-1, 1), (1, -1)
            else:
                (by, bx), (ay, ax) = (0, -1), (0, 1)
            v = mag[y][x]
            if v > m(y + by, x + bx) and v >= m(y + ay, x + ax):
                nms[y][x] = v

    edges = np.zeros((h, w), dtype=bool)
    queue = deque((y, x) for y in range(h) for x in range(w) if nms[y][x] > high)
    for y, x in queue:
        edges[y, x] = True
    while queue:
        y, x = queue.popleft()
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                yy, xx = y + dy, x + dx
                if 0 <= yy < h and 0 <= xx < w and not edges[yy, xx] and nms[yy][xx] > low:
                    edges[yy, xx] = True
                    queue.append((yy, xx))
    mag = np.array(mag)
    peak = mag.max()
    return edges, (mag / peak if peak > 0 else np.zeros_like(mag))


def bilinear_half_pixel(img, w, h):
    img = np.asarray(img, dtype=np.float64)
    ih, iw = img.shape
    out = np.zeros((h, w))
    for y in range(h):
        sy = min(max((y + 0.5) * ih / h - 0.5, 0.0), ih - 1)
        y0 = int(math.floor(sy))
        y1 = min(y0 + 1, ih - 1)
        fy = sy - y0
        for x in range(w):
            sx = min(max((x + 0.5) * iw / w - 0.5, 0.0), iw - 1)
            x0 = int(math.floor(sx))
            x1 = min(x0 + 1, iw - 1)
            fx = sx - x0
            out[y, x] = ((1 - fy) * ((1 - fx) * img[y0, x0] + fx * img[y0, x1])
                         + fy * ((1 - fx) * img[y1, x0] + fx * img[y1, x1]))
    return out


# --------------------------------------------------------------------------
# fusion
# --------------------------------------------------------------------------

def pointwise(t, weight, bias):
    cin, h, w = t.shape
    cout = weight.shape[0]
    out = np.zeros((cout, h, w))
    for o in range(cout):
        for y in range(h):
            for x in range(w):
                acc = bias[o]
                for i in range(cin):
                    acc += weight[o, i] * t[i, y, x]
                out[o, y, x] = acc
    return out


def conv3x3(t, weight, bias):
    cin, h, w = t.shape
    cout = weight.shape[0]
    out = np.zeros((cout, h, w))
    for o in range(cout):
        for y in range(h):
            for x in range(w):
                acc = bias[o]
                for i in range(cin):
                    for dy in range(3):
                        for dx in range(3):
                            yy, xx = y + dy - 1, x + dx - 1
                            if 0 <= yy < h and 0 <= xx < w:
                                acc += weight[o, i, dy, dx] * t[i, yy, xx]
                out[o, y, x] = acc
    return out


def batchnorm(t, gamma, beta, mean, var, eps):
    out = np.empty_like(t)
    for c in range(t.shape[0]):
        out[c] = (t[c] - mean[c]) / math.sqrt(var[c] + eps) * gamma[c] + beta[c]
    return out


def relu(t):
    return np.where(t > 0, t, 0.0)


def haar_hh_loop(plane):
    plane = np.asarray(plane, dtype=np.float64)
    h, w = plane.shape
    out = np.zeros((h // 2, w // 2))
    for by in range(h // 2):
        for bx in range(w // 2):
            x1 = plane[2 * by, 2 * bx]
            x2 = plane[2 * by, 2 * bx + 1]
            x3 = plane[2 * by + 1, 2 * bx]
            x4 = plane[2 * by + 1, 2 * bx + 1]
            out[by, bx] = (x1 - x2 - x3 + x4) / 4
    return out


# --------------------------------------------------------------------------
# metrics
# --------------------------------------------------------------------------

def mae(pred, gt):
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=bool)
    return sum(abs(float(p) - float(g)) for p, g in zip(pred.ravel(), gt.ravel())) / pred.size


def dice_iou(pred, gt, thr=0.5):
    a = {i for i, v in enumerate(np.asarray(pred).ravel()) if v > thr}
    b = {i for i, v in enumerate(np.asarray(gt).ravel()) if v}
    if not a and not b:
        return 1.0, 1.0
    inter = len(a & b)
    return 2 * inter / (len(a) + len(b)), inter / len(a | b)


def _ssim(x, y):
    n = x.size
    mx, my = x.mean(), y.mean()
    sx = ((x - mx) ** 2).sum() / (n - 1 + MATLAB_EPS)
    sy = ((y - my) ** 2).sum() / (n - 1 + MATLAB_EPS)
    sxy = ((x - mx) * (y - my)).sum() / (n - 1 + MATLAB_EPS)
    alpha = 4 * mx * my * sxy
    beta = (mx**2 + my**2) * (sx + sy)
    if alpha != 0:
        return alpha / (beta + MATLAB_EPS)
    return 1.0 if beta == 0 else 0.0


def s_measure(pred, gt, alpha=0.5):
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=bool)
    h, w = gt.shape
    y = gt.mean()
    if y == 0:
        return 1 - pred.mean()
    if y == 1:
        return pred.mean()

    def obj(vals):
        mu = vals.mean()
        sd = vals.std(ddof=1) if vals.size > 1 else 0.0
        return 2 * mu / (mu**2 + 1 + sd + MATLAB_EPS)

    o = y * obj(pred[gt]) + (1 - y) * obj(1 - pred[~gt])
    ys, xs = [], []
    for r in range(h):
        for c in range(w):
            if gt[r, c]:
                ys.append(r)
                xs.append(c)
    cy = int(np.round(sum(ys) / len(ys))) + 1
    cx = int(np.round(sum(xs) / len(xs))) + 1
    g = gt.astype(np.float64)
    region = 0.0
    for rs, cs in (((0, cy), (0, cx)), ((0, cy), (cx, w)), ((cy, h), (0, cx)), ((cy, h), (cx, w))):
        n = (rs[1] - rs[0]) * (cs[1] - cs[0])
        if n == 0:
            continue
        region += _ssim(pred[rs[0]:rs[1], cs[0]:cs[1]], g[rs[0]:rs[1], cs[0]:cs[1]]) * n / (h * w)
    return min(1.0, max(0.0, alpha * o + (1 - alpha) * region))


def e_measure(pred, gt, levels=256):
    """Mean over levels of the mean enhanced-alignment matrix, pixel by pixel."""
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=bool)
    n = gt.size
    g = gt.astype(np.float64)
    scores = []
    for k in range(levels):
        t = (k + 0.5) / levels
        fm = (pred >= t).astype(np.float64)
        if not gt.any():
            phi = 1.0 - fm
        elif gt.all():
            phi = fm
        else:
            a = fm - fm.mean()
            b = g - g.mean()
            align = 2 * a * b / (a * a + b * b + MATLAB_EPS)
            phi = (align + 1) ** 2 / 4
        scores.append(phi.sum() / n)
    return min(1.0, max(0.0, float(np.mean(scores))))


def weighted_f(pred, gt, beta2=1.0):
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=bool)
    if not gt.any():
        return None
    dst, idx = ndimage.distance_transform_edt(~gt, return_indices=True)
    e = np.abs(pred - gt)
    et = e.copy()
    et[~gt] = e[idx[0][~gt], idx[1][~gt]]
    k = np.outer(gaussian_taps(7, 5.0), gaussian_taps(7, 5.0))
    ea = ndimage.correlate(et, k, mode="constant", cval=0.0)
    min_e = np.where(gt & (ea < e), ea, e)
    b = np.where(gt, 1.0, 2.0 - np.exp(np.log(0.5) / 5 * dst))
    ew = min_e * b
    tpw = gt.sum() - ew[gt].sum()
    fpw = ew[~gt].sum()
    r = 1 - ew[gt].mean()
    p = tpw / (MATLAB_EPS + tpw + fpw)
    q = (1 + beta2) * r * p / (MATLAB_EPS + r + beta2 * p)
    return min(1.0, max(0.0, q))
