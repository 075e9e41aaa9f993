import numpy as np
import pytest

from promptseg.core import BBox, apply_mask, binarize, mask_l1_distance


def test_binarize_direct_comparison():
    mask = np.array([[0.2, 0.8]])
    out = binarize(mask, 0.5)
    assert out.tolist() == [[False, True]]


def test_binarize_zero_threshold_keeps_zeros_false():
    mask = np.zeros((3, 4))
    assert not binarize(mask, 0.0).any()


def test_binarize_boundary_excluded():
    assert binarize(np.array([[0.5]]), 0.5).tolist() == [[False]]


def test_binarize_monotone_in_threshold():
    rng = np.random.default_rng(11)
    for _ in range(50):
        mask = rng.uniform(size=(9, 7))
        t_low, t_high = sorted(rng.uniform(size=2))
        low = binarize(mask, t_low)
        high = binarize(mask, t_high)
        # raising the threshold never turns a false pixel true
        assert not (high & ~low).any()


def test_binarize_rejects_bad_threshold():
    with pytest.raises(ValueError):
        binarize(np.zeros((2, 2)), 1.5)


def test_l1_identity():
    m = np.random.default_rng(0).uniform(size=(8, 8))
    assert mask_l1_distance(m, m) == 0.0


def test_l1_maximal_separation():
    a = np.ones((5, 5))
    b = np.zeros((5, 5))
    assert mask_l1_distance(a, b) == 1.0


def test_l1_small_example():
    a = np.array([[0.2, 0.4]])
    b = np.array([[0.4, 0.4]])
    assert mask_l1_distance(a, b) == pytest.approx(0.1)


def test_l1_symmetric_and_triangle():
    rng = np.random.default_rng(42)
    for _ in range(100):
        a, b, c = (rng.uniform(size=(6, 5)) for _ in range(3))
        assert mask_l1_distance(a, b) == pytest.approx(mask_l1_distance(b, a))
        assert mask_l1_distance(a, c) <= (
            mask_l1_distance(a, b) + mask_l1_distance(b, c) + 1e-12
        )


def test_l1_dimension_mismatch():
    with pytest.raises(ValueError):
        mask_l1_distance(np.zeros((2, 2)), np.zeros((2, 3)))


def test_apply_mask_identity_and_annihilator():
    rng = np.random.default_rng(3)
    img = rng.uniform(size=(6, 4, 3))
    assert np.array_equal(apply_mask(img, np.ones((6, 4))), img)
    assert not apply_mask(img, np.zeros((6, 4))).any()


def test_apply_mask_scalar_product():
    img = np.full((1, 1, 3), 0.8)
    out = apply_mask(img, np.full((1, 1), 0.5))
    assert out == pytest.approx(np.full((1, 1, 3), 0.4))


def test_apply_mask_composition_is_pointwise_product():
    rng = np.random.default_rng(7)
    for _ in range(25):
        img = rng.uniform(size=(5, 7, 3))
        m1 = rng.uniform(size=(5, 7))
        m2 = rng.uniform(size=(5, 7))
        chained = apply_mask(apply_mask(img, m1), m2)
        direct = apply_mask(img, m1 * m2)
        assert np.abs(chained - direct).max() < 1e-9


def test_apply_mask_dimension_mismatch():
    with pytest.raises(ValueError):
        apply_mask(np.zeros((2, 2, 3)), np.zeros((3, 2)))


def test_bbox_validation_and_geometry():
    box = BBox(2, 3, 10, 7)
    assert box.width == 8 and box.height == 4 and box.area == 32
    assert box.fits_in(10, 7)
    assert not box.fits_in(9, 7)
    with pytest.raises(ValueError):
        BBox(5, 0, 5, 4)
    with pytest.raises(ValueError):
        BBox(-1, 0, 3, 4)


def test_bbox_intersect():
    a = BBox(0, 0, 4, 4)
    b = BBox(2, 2, 6, 6)
    assert a.intersect(b) == BBox(2, 2, 4, 4)
    assert a.intersect(BBox(4, 4, 6, 6)) is None
