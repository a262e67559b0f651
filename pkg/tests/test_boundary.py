import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from campro import boundary, raster
from campro.boundary import BoundingBox, DilatePair, ThresholdSpec
from campro.errors import EmptyInputError, EmptyTargetError, ShapeError


def test_dilate_grid_values():
    grid = {k: (p.d1, p.d2) for k, p in boundary.DILATE_GRID.items()}
    assert grid == {"D1": (3, 3), "D2": (3, 5), "D3": (5, 5), "D4": (5, 7), "D5": (7, 7)}
    assert DilatePair() == boundary.DILATE_GRID["D2"]
    assert boundary.OFFSET_GRID == (5, 10, 15, 20, 25)
    assert boundary.DEFAULT_OFFSET == 15


def test_dilate_pair_validation():
    with pytest.raises(ValueError):
        DilatePair(5, 3)
    with pytest.raises(ValueError):
        DilatePair(4, 5)


@settings(max_examples=40)
@given(arrays(np.bool_, (16, 16)))
def test_edge_band_composition(gt):
    pair = DilatePair(3, 5)
    ring = oracles.dilate(gt, 3) & ~gt
    assert np.array_equal(boundary.edge_band(gt, pair), oracles.dilate(ring, 5))


@settings(max_examples=40)
@given(arrays(np.bool_, (16, 16)))
def test_edge_band_never_inside_eroded_object(gt):
    band = boundary.edge_band(gt, DilatePair(3, 3))
    # a pixel whose 5x5 neighbourhood is all object cannot be on the band
    interior = ~raster.dilate(~gt, 5)
    assert not np.any(band & interior)


def test_egem_modes(rng):
    gt = np.zeros((24, 24), bool)
    gt[6:18, 6:18] = True
    img = np.where(gt, 200, 40).astype(np.uint8)
    b = boundary.egem(gt, img)
    m = boundary.egem(gt, img, mode="magnitude")
    assert set(np.unique(b)) <= {0.0, 1.0}
    assert b.any()
    assert np.all((m > 0) <= (b > 0))
    assert m.max() <= 1.0
    with pytest.raises(ValueError):
        boundary.egem(gt, img, mode="soft")


def test_egem_empty_gt_is_empty(rng):
    img = rng.integers(0, 256, (16, 16)).astype(np.uint8)
    assert not boundary.egem(np.zeros((16, 16), bool), img).any()


def test_egem_shape_mismatch():
    with pytest.raises(ShapeError):
        boundary.egem(np.zeros((8, 8), bool), np.zeros((8, 9), np.uint8))


def test_extract_box():
    gt = np.zeros((10, 12), bool)
    gt[2:5, 3:9] = True
    assert boundary.extract_box(gt).as_tuple() == (3, 2, 8, 4)
    assert boundary.extract_box(gt, jitter=5).as_tuple() == (0, 0, 11, 9)
    with pytest.raises(EmptyTargetError):
        boundary.extract_box(np.zeros((4, 4), bool))


@given(st.integers(0, 2**32 - 1), st.integers(0, 6))
def test_jittered_box_stays_inside(seed, jit):
    gt = np.zeros((20, 20), bool)
    gt[5:12, 7:15] = True
    box = boundary.jittered_box(gt, jit, np.random.default_rng(seed))
    assert 0 <= box.x0 <= box.x1 < 20 and 0 <= box.y0 <= box.y1 < 20
    assert abs(box.x0 - 7) <= jit and abs(box.y1 - 11) <= jit


def test_box_mask_bounds():
    assert BoundingBox(1, 1, 2, 3).mask(4, 5).sum() == 6
    with pytest.raises(ShapeError):
        BoundingBox(0, 0, 4, 1).mask(4, 4)
    with pytest.raises(ValueError):
        BoundingBox(3, 0, 2, 1)


def test_dominant_value_tie_breaks_low():
    counts = np.zeros(256, int)
    counts[[9, 40]] = 5
    assert boundary.dominant_value(counts) == 9
    with pytest.raises(EmptyInputError):
        boundary.dominant_value(np.zeros(256, int))


def test_threshold_clamps():
    assert ThresholdSpec().threshold(10) == 25
    assert ThresholdSpec(offset=25).threshold(250) == 255


@settings(max_examples=60)
@given(st.integers(0, 255), st.integers(0, 255), st.integers(0, 40))
def test_generated_boundary_threshold_rule(beta, other, n_other):
    edge = np.full((8, 8), beta, np.uint8)
    flat = edge.ravel()
    flat[:n_other] = other
    edge = flat.reshape(8, 8)
    box = BoundingBox(0, 0, 7, 7)
    grad = np.ones((8, 8))
    out = boundary.generate_inference_boundary(edge, box, grad)
    mode = int(np.argmax(np.bincount(edge.ravel(), minlength=256)))
    assert np.array_equal(out > 0, edge > min(255, mode + 15))


def test_generated_boundary_respects_box_and_gradient():
    edge = np.zeros((6, 6), np.uint8)
    edge[:, 3:] = 200
    grad = np.linspace(0, 1, 36).reshape(6, 6)
    out = boundary.generate_inference_boundary(edge, BoundingBox(0, 0, 4, 2), grad)
    want = np.zeros((6, 6))
    want[0:3, 3:5] = grad[0:3, 3:5]
    assert np.array_equal(out, want)


def test_generated_boundary_explicit_beta():
    edge = np.array([[10, 30, 31]], np.uint8)
    out = boundary.generate_inference_boundary(edge, BoundingBox(0, 0, 2, 0), np.ones((1, 3)),
                                               ThresholdSpec(offset=0, beta=30))
    assert out.tolist() == [[0.0, 0.0, 1.0]]
