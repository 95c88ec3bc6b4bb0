import numpy as np
import pytest

from pedscan import ExecConfig, FeatureGrid, GrayImage
from pedscan.hog import (
    GradientField, gradient, hog_block_histograms, hog_features, normalize_blocks,
    pixel_bin_weights,
)

from conftest import random_image
from oracles import gradient_oracle, hog_oracle


def test_constant_image_zero_gradient():
    g = gradient(GrayImage.from_array(np.full((10, 12), 99, np.uint8)))
    assert np.all(g.magnitude == 0) and np.all(g.orientation == 0)


def test_horizontal_ramp():
    ramp = np.tile(np.arange(20, dtype=np.uint8), (6, 1))
    g = gradient(GrayImage.from_array(ramp))
    assert np.all(g.magnitude[:, 1:-1] == 2.0)
    assert np.all(g.orientation[:, 1:-1] == 0.0)


@pytest.mark.parametrize("workers", [1, 4])
def test_gradient_matches_oracle(rng, workers):
    img = random_image(rng, 33, 21)
    g = gradient(img, ExecConfig(workers))
    mag, ori = gradient_oracle(img.data)
    assert np.array_equal(g.magnitude, mag)
    assert np.array_equal(g.orientation, ori)
    assert g.orientation.min() >= 0 and g.orientation.max() < 180


def test_gradient_field_validation():
    with pytest.raises(ValueError):
        GradientField(1, 1, [-1.0], [0.0])
    with pytest.raises(ValueError):
        GradientField(1, 1, [1.0], [180.0])


def test_zero_field_all_bins_zero():
    g = GradientField(24, 16, np.zeros((16, 24)), np.zeros((16, 24)))
    assert not hog_block_histograms(g).values.any()


def test_histograms_match_oracle(rng):
    mag = rng.uniform(0, 50, size=(32, 40))
    ori = rng.uniform(0, 180, size=(32, 40))
    got = hog_block_histograms(GradientField(40, 32, mag, ori)).values
    np.testing.assert_allclose(got, hog_oracle(mag, ori), rtol=1e-12, atol=1e-12)


def test_histograms_of_image_match_oracle(rng):
    img = random_image(rng, 32, 24)
    mag, ori = gradient_oracle(img.data)
    np.testing.assert_allclose(hog_block_histograms(gradient(img)).values,
                               hog_oracle(mag, ori), rtol=1e-12, atol=1e-12)


def single_pixel(i, j, theta, m=1.0):
    mag = np.zeros((16, 16))
    ori = np.zeros((16, 16))
    mag[i, j], ori[i, j] = m, theta
    return hog_block_histograms(GradientField(16, 16, mag, ori)).values[0, 0]


def test_pixel_near_cell_centre_on_bin_centre_is_one_bin():
    # (3, 3) is the pixel nearest cell 0's centre on the block-corner side;
    # 50 deg is the centre of bin 2
    h = single_pixel(3, 3, 50.0, 2.5)
    assert np.count_nonzero(h) == 1 and h[2] == 2.5


@pytest.mark.parametrize("i,j,expected", [(3, 3, 2), (3, 7, 4), (7, 3, 4), (7, 8, 8), (12, 12, 2)])
def test_between_bin_centres_hits_2_4_8(i, j, expected):
    h = single_pixel(i, j, 20.0, 1.0)
    assert np.count_nonzero(h) == expected
    assert h.sum() == pytest.approx(1.0, abs=1e-15)
    w = pixel_bin_weights(i, j, 20.0, 1.0)
    assert len(w) == expected
    np.testing.assert_allclose(h[list(w)], list(w.values()), rtol=1e-15)


def test_cell_corner_hand_weights():
    # pixel (7, 8): y weights 0.5625/0.4375, x weights 0.4375/0.5625;
    # theta 20 splits evenly between bins 0 (10 deg) and 1 (30 deg)
    h = single_pixel(7, 8, 20.0, 1.0)
    wy, wx = (0.5625, 0.4375), (0.4375, 0.5625)
    for cy in (0, 1):
        for cx in (0, 1):
            for b in (0, 1):
                assert h[(cy * 2 + cx) * 9 + b] == pytest.approx(wy[cy] * wx[cx] * 0.5)


def test_orientation_wraps_at_180():
    # 175 deg lies between bin 8 (170) and bin 0 (190 == 10)
    h = single_pixel(0, 0, 175.0, 4.0)
    assert h[8] == pytest.approx(3.0) and h[0] == pytest.approx(1.0)


def test_orientation_folding_symmetry(rng):
    img = random_image(rng, 32, 32)
    inv = GrayImage.from_array(255 - img.data)
    a, b = gradient(img), gradient(inv)
    assert np.array_equal(a.magnitude, b.magnitude)
    diff = np.abs(a.orientation - b.orientation)
    assert np.all(np.minimum(diff, 180 - diff) < 1e-9)
    np.testing.assert_allclose(hog_block_histograms(a).values, hog_block_histograms(b).values,
                               rtol=1e-9, atol=1e-9)


def test_worker_independence_bit_exact(rng):
    img = random_image(rng, 96, 64)
    a = hog_features(img, config=ExecConfig(1))
    for workers in (3, 16):
        assert hog_features(img, config=ExecConfig(workers)) == a


def test_dimension_checks():
    with pytest.raises(ValueError):
        hog_block_histograms(GradientField(20, 16, np.zeros((16, 20)), np.zeros((16, 20))))
    with pytest.raises(ValueError):
        hog_block_histograms(GradientField(8, 16, np.zeros((16, 8)), np.zeros((16, 8))))


def test_normalize_blocks(rng):
    z = normalize_blocks(FeatureGrid(np.zeros((1, 1, 36)), "hog")).values
    assert not z.any()
    one = np.zeros((1, 1, 36))
    one[0, 0, 7] = 5.0
    n = normalize_blocks(FeatureGrid(one, "hog")).values
    assert n[0, 0, 7] == pytest.approx(1.0, abs=1e-12) and np.count_nonzero(n) == 1
    v = rng.uniform(0, 3, size=(4, 5, 36))
    n = normalize_blocks(FeatureGrid(v, "hog"), epsilon=1e-3).values
    np.testing.assert_allclose(n, v / np.sqrt((v ** 2).sum(-1, keepdims=True) + 1e-6))
    norms = np.linalg.norm(n, axis=-1)
    assert np.all((norms > 0) & (norms <= 1))
