import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import ndimage

import oracles
from campro import raster
from campro.errors import InvalidKernelError, ShapeError

masks = arrays(np.bool_, st.tuples(st.integers(1, 20), st.integers(1, 20)))
kernels = st.sampled_from([1, 3, 5, 7])


@given(masks, kernels)
def test_dilate_matches_naive(mask, k):
    assert np.array_equal(raster.dilate(mask, k), oracles.dilate(mask, k))


@given(masks, kernels, kernels)
def test_dilate_monotone_in_kernel(mask, a, b):
    small, big = sorted((a, b))
    assert not np.any(raster.dilate(mask, small) & ~raster.dilate(mask, big))


@given(masks, kernels)
def test_dilate_is_extensive(mask, k):
    assert not np.any(mask & ~raster.dilate(mask, k))


@pytest.mark.parametrize("k", [0, 2, 4, -3])
def test_dilate_rejects_bad_kernel(k):
    with pytest.raises(InvalidKernelError):
        raster.dilate(np.zeros((4, 4), bool), k)


def test_dilate_rejects_3d():
    with pytest.raises(ShapeError):
        raster.dilate(np.zeros((2, 4, 4), bool), 3)


@given(masks, masks)
def test_mask_subtract(a, b):
    if a.shape != b.shape:
        with pytest.raises(ShapeError):
            raster.mask_subtract(a, b)
        return
    assert np.array_equal(raster.mask_subtract(a, b), a & ~b)


def test_gaussian_kernel_sums_to_one():
    g = raster.gaussian_kernel1d(9, 1.4)
    assert g.shape == (9,)
    assert abs(g.sum() - 1.0) < 1e-12
    assert np.allclose(g, oracles.gaussian_taps(9, 1.4), rtol=0, atol=1e-15)
    assert np.allclose(g, g[::-1])


@pytest.mark.parametrize("border", ["replicate", "constant"])
def test_separable_equals_dense(rng, border):
    img = rng.random((13, 17))
    ty = np.array([0.25, 0.5, 0.25])
    tx = np.array([-1.0, 0.0, 1.0, 0.5, 2.0])
    got = raster.correlate_separable(img, ty, tx, border)
    want = oracles.dense_correlate(img, np.outer(ty, tx), border)
    assert np.allclose(got, want, rtol=0, atol=1e-12)


def test_sobel_sign_convention():
    ramp = np.tile(np.arange(8, dtype=float), (6, 1))
    gx, gy = raster.sobel(ramp)
    # interior columns rise by 1 per pixel: 1*2 + 2*2 + 1*2 = 8
    assert np.all(gx[:, 1:-1] == 8.0)
    assert np.all(gy == 0.0)


@pytest.mark.parametrize("seed", range(6))
def test_canny_matches_scalar_oracle(seed):
    rng = np.random.default_rng(seed)
    mask = np.zeros((24, 24), bool)
    mask[rng.integers(3, 9) : rng.integers(14, 21), rng.integers(3, 9) : rng.integers(14, 21)] = True
    img = np.clip(mask * 140 + 50 + rng.integers(-25, 26, size=mask.shape), 0, 255).astype(np.uint8)
    edges, mag = raster.canny(img)
    oe, om = oracles.canny(img)
    assert np.array_equal(edges, oe)
    assert np.allclose(mag, om, rtol=0, atol=1e-12)


def test_canny_step_edge_is_one_pixel_line():
    img = np.zeros((16, 16), np.uint8)
    img[:, 8:] = 200
    edges, mag = raster.canny(img)
    # columns 7 and 8 tie on magnitude; the tie goes to the earlier pixel
    assert edges[:, 7].all()
    assert edges.sum() == 16
    assert mag.max() == 1.0


def test_canny_constant_image_is_empty():
    edges, mag = raster.canny(np.full((10, 12), 77, np.uint8))
    assert not edges.any()
    assert not mag.any()


def test_canny_rejects_inverted_thresholds():
    with pytest.raises(ValueError):
        raster.canny(np.zeros((8, 8), np.uint8), low=100, high=50)


small_masks = arrays(np.bool_, st.tuples(st.integers(1, 14), st.integers(1, 14)))


@settings(max_examples=60)
@given(small_masks)
def test_distance_transform_matches_brute_force(mask):
    d = raster.distance_transform(mask)
    want = oracles.squared_distances(mask)
    if want is None:
        assert np.all(np.isinf(d))
        return
    assert np.array_equal(np.rint(d**2).astype(np.int64), want)
    assert np.allclose(d, np.sqrt(want), rtol=0, atol=0)
    assert np.all(d[mask] == 0)


@settings(max_examples=60)
@given(small_masks)
def test_distance_indices_match_scipy(mask):
    if not mask.any():
        d, (rows, cols) = raster.distance_transform(mask, return_indices=True)
        assert np.all(rows == -1) and np.all(cols == -1)
        return
    d, idx = raster.distance_transform(mask, return_indices=True)
    sd, sidx = ndimage.distance_transform_edt(~mask, return_indices=True)
    assert np.allclose(d, sd, rtol=0, atol=1e-12)
    assert np.array_equal(np.stack(idx), sidx)


def test_histogram_counts():
    img = np.array([[0, 0, 255], [7, 7, 7]], np.uint8)
    h = raster.histogram(img)
    assert h.shape == (256,)
    assert h[0] == 2 and h[7] == 3 and h[255] == 1 and h.sum() == 6


@pytest.mark.parametrize("shape,out", [((5, 7), (9, 4)), ((8, 8), (16, 16)), ((6, 9), (6, 9))])
def test_resize_bilinear_matches_oracle(rng, shape, out):
    img = rng.random(shape)
    got = raster.resize_bilinear(img, out[1], out[0])
    assert got.shape == out
    assert np.allclose(got, oracles.bilinear_half_pixel(img, out[1], out[0]), rtol=0, atol=1e-12)


def test_resize_identity_and_dtypes(rng):
    img = rng.integers(0, 256, (6, 5)).astype(np.uint8)
    assert np.array_equal(raster.resize_bilinear(img, 5, 6), img)
    assert raster.resize_bilinear(img, 10, 12).dtype == np.uint8
    mask = img > 128
    assert raster.resize_bilinear(mask, 10, 12).dtype == bool


def test_truncate_normalize_range(rng):
    img = rng.integers(0, 256, (32, 32)).astype(np.uint8)
    out = raster.truncate_normalize(img)
    assert out.min() == 0.0 and out.max() == 1.0
    assert not raster.truncate_normalize(np.full((4, 4), 9, np.uint8)).any()


def test_png_and_pgm_io(tmp_path, rng):
    fmap = rng.random((7, 9))
    p = raster.write_png(tmp_path / "a.png", fmap)
    back = raster.read_float_map(p)
    assert np.max(np.abs(back - fmap)) <= 0.5 / 255 + 1e-12
    img = rng.integers(0, 256, (5, 6)).astype(np.uint8)
    q = raster.write_pgm(tmp_path / "b.pgm", img)
    assert q.read_bytes().startswith(b"P5\n6 5\n255\n")
    assert np.array_equal(raster.read_gray(q), img)


def test_read_mask_threshold(tmp_path):
    img = np.array([[0, 128, 129, 255]], np.uint8)
    p = raster.write_pgm(tmp_path / "m.pgm", img)
    assert raster.read_mask(p).tolist() == [[False, False, True, True]]


def test_pgm_fixture(tmp_path):
    raw = b"P5\n3 2\n255\n" + bytes([0, 10, 20, 30, 40, 255])
    (tmp_path / "x.pgm").write_bytes(raw)
    assert raster.read_gray(tmp_path / "x.pgm").tolist() == [[0, 10, 20], [30, 40, 255]]
