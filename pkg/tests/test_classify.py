import numpy as np
import pytest

from pedscan import ExecConfig, FeatureGrid, ScoreMap
from pedscan.classify import (
    BadMagicError, Detection, LengthMismatchError, ModelError, Stream, StreamMismatchError,
    SvmModel, VersionMismatchError, collect_detections, load_model, save_model, score_windows,
    score_windows_naive, train_sgd,
)

from oracles import flatten_dot


def random_instance(rng, hb, wb, hn=15, wn=7, sa=8, sb=6):
    fa = rng.uniform(0, 1, size=(hb, wb, sa))
    fb = rng.uniform(0, 1, size=(hb, wb, sb))
    model = SvmModel((Stream("lbp", rng.normal(size=(hn, wn, sa))),
                      Stream("hog", rng.normal(size=(hn, wn, sb)))), bias=rng.normal())
    return fa, fb, model


def test_zero_features_score_is_bias(rng):
    _, _, model = random_instance(rng, 15, 7)
    z8, z6 = FeatureGrid(np.zeros((20, 10, 8)), "lbp"), FeatureGrid(np.zeros((20, 10, 6)), "hog")
    for scorer in (score_windows, score_windows_naive):
        sm = scorer(z8, z6, model)
        assert sm.scores.shape == (6, 4)
        assert np.all(sm.scores == model.bias)


def test_indicator_weight_selects_feature(rng):
    w = np.zeros((15, 7, 4))
    w[2, 3, 1] = 1.0
    model = SvmModel((Stream("hog", w),), bias=0.5)
    f = rng.uniform(size=(18, 9, 4))
    sm = score_windows(None, FeatureGrid(f, "hog"), model)
    for y in range(4):
        for x in range(3):
            assert sm.scores[y, x] == f[y + 2, x + 3, 1] + 0.5


def test_oracle_equivalence_random(rng):
    for hb, wb in [(15, 7), (16, 9), (22, 13), (40, 20)]:
        fa, fb, model = random_instance(rng, hb, wb)
        ref = flatten_dot([fa, fb], model.weight_vector(), model.bias, 15, 7)
        ga, gb = FeatureGrid(fa, "lbp"), FeatureGrid(fb, "hog")
        warp = score_windows(ga, gb, model, ExecConfig(3)).scores
        naive = score_windows_naive(ga, gb, model).scores
        tol = 1e-4 * np.maximum(np.abs(ref), 1.0)
        assert np.all(np.abs(warp - ref) <= tol)
        assert np.all(np.abs(naive - ref) <= tol)


def test_single_window_grid(rng):
    fa, fb, model = random_instance(rng, 15, 7)
    sm = score_windows(FeatureGrid(fa, "lbp"), FeatureGrid(fb, "hog"), model)
    assert sm.scores.shape == (1, 1)
    ref = float(np.concatenate([fa.ravel(), fb.ravel()]) @ model.weight_vector()) + model.bias
    assert sm.scores[0, 0] == pytest.approx(ref, rel=1e-9)


def test_linearity(rng):
    fa, fb, model = random_instance(rng, 17, 9)
    fa2, fb2, _ = random_instance(rng, 17, 9)
    unbiased = SvmModel(model.streams, 0.0)

    def s(a, b):
        return score_windows(FeatureGrid(a, "lbp"), FeatureGrid(b, "hog"), unbiased).scores

    np.testing.assert_allclose(s(fa + 2 * fa2, fb + 2 * fb2), s(fa, fb) + 2 * s(fa2, fb2),
                               rtol=1e-9, atol=1e-9)


@pytest.mark.parametrize("hb,wb", [(15, 7), (16, 8), (47, 155), (30, 20)])
def test_score_map_dims_law(hb, wb):
    model = SvmModel((Stream("lbp", np.zeros((15, 7, 2))),))
    sm = score_windows(FeatureGrid(np.zeros((hb, wb, 2)), "lbp"), None, model)
    assert (sm.y_count, sm.x_count) == (hb - 14, wb - 6)


def test_stream_mismatch_errors(rng):
    fa, fb, model = random_instance(rng, 16, 8)
    with pytest.raises(StreamMismatchError):
        score_windows(FeatureGrid(fa, "lbp"), None, model)
    with pytest.raises(StreamMismatchError):
        score_windows(FeatureGrid(fa[..., :5], "lbp"), FeatureGrid(fb, "hog"), model)
    with pytest.raises(ValueError):
        score_windows(FeatureGrid(fa[:15], "lbp"), FeatureGrid(fb, "hog"), model)
    with pytest.raises(ValueError):
        score_windows(FeatureGrid(fa[:14, :], "lbp"), FeatureGrid(fb[:14], "hog"), model)


def test_model_validation():
    with pytest.raises(ModelError):
        SvmModel(())
    with pytest.raises(ModelError):
        Stream("sift", np.zeros((1, 1, 1)))
    with pytest.raises(ModelError):
        SvmModel((Stream("lbp", np.zeros((15, 7, 2))), Stream("hog", np.zeros((14, 7, 2)))))
    with pytest.raises(ModelError):
        SvmModel((Stream("lbp", np.zeros((15, 7, 2))), Stream("lbp", np.zeros((15, 7, 2)))))
    m = SvmModel((Stream("hog", np.zeros((15, 7, 2))), Stream("lbp", np.zeros((15, 7, 3)))))
    assert m.names == ("lbp", "hog")


def test_collect_detections_mapping():
    scores = np.full((3, 4), -1.0)
    scores[0, 0] = 2.0
    assert collect_detections([ScoreMap(scores)], 0.0) == [Detection(0, 0, 64, 128, 2.0, 0)]
    half = collect_detections([ScoreMap(scores, level=2, scale_x=0.5, scale_y=0.5)])
    assert half == [Detection(0, 0, 128, 256, 2.0, 2)]
    scores[2, 3] = 1.0
    got = collect_detections([ScoreMap(scores, 1, 0.5, 0.5)])
    assert Detection(48, 32, 128, 256, 1.0, 1) in got
    assert collect_detections([ScoreMap(np.full((2, 2), 0.0))], 0.0) == []


def test_tie_margin_detection_sets(rng):
    for _ in range(10):
        fa, fb, model = random_instance(rng, 25, 12)
        ga, gb = FeatureGrid(fa, "lbp"), FeatureGrid(fb, "hog")
        ref = flatten_dot([fa, fb], model.weight_vector(), model.bias, 15, 7)
        thr = float(np.median(ref))
        keep = np.abs(ref - thr) > 1e-3
        for scorer in (score_windows, score_windows_naive):
            got = scorer(ga, gb, model).scores
            assert np.array_equal((got > thr)[keep], (ref > thr)[keep])


def toy_set(rng, n=40):
    pos = rng.normal(loc=(3.0, 3.0), size=(n, 2))
    neg = rng.normal(loc=(-3.0, -3.0), size=(n, 2))
    return [(v, 1) for v in pos] + [(v, -1) for v in neg]


def test_train_separable_toy(rng):
    data = toy_set(rng)
    m = train_sgd(data, epochs=30, learn_rate=0.05, hn=1, wn=1)
    w = m.weight_vector()
    acc = np.mean([np.sign(v @ w + m.bias) == y for v, y in data])
    assert acc == 1.0


def test_train_zero_epochs_and_determinism(rng):
    data = toy_set(rng)
    m0 = train_sgd(data, epochs=0, hn=1, wn=1)
    assert not m0.weight_vector().any() and m0.bias == 0.0
    a = train_sgd(data, epochs=5, seed=7, hn=1, wn=1)
    b = train_sgd(data, epochs=5, seed=7, hn=1, wn=1)
    assert a.to_bytes() == b.to_bytes()


def test_train_layout_split(rng):
    data = [(rng.normal(size=2 * 3 * 5), lab) for lab in (1, -1, 1, -1)]
    m = train_sgd(data, epochs=2, layout=(("lbp", 3), ("hog", 2)), hn=2, wn=3)
    assert m.names == ("lbp", "hog")
    assert m.stream("lbp").weights.shape == (2, 3, 3)


def test_train_errors(rng):
    with pytest.raises(ValueError):
        train_sgd([])
    with pytest.raises(ValueError):
        train_sgd([(np.ones(2), 1), (np.ones(3), -1)], hn=1, wn=1)
    with pytest.raises(ValueError):
        train_sgd([(np.ones(2), 1), (np.ones(2), 0)], hn=1, wn=1)
    with pytest.raises(ValueError):
        train_sgd([(np.ones(2), 1), (np.ones(2), 1)], hn=1, wn=1)
    with pytest.raises(ValueError):
        train_sgd([(np.ones(4), 1), (np.ones(4), -1)], layout=(("hog", 2), ("lbp", 2)),
                  hn=1, wn=1)


def test_model_file_round_trip(tmp_path, rng):
    _, _, model = random_instance(rng, 15, 7)
    model = model.with_threshold(0.25)
    save_model(model, tmp_path / "m.bin")
    back = load_model(tmp_path / "m.bin")
    assert back == model and back.threshold == 0.25
    assert np.array_equal(back.weight_vector(), model.weight_vector())


def test_model_file_errors(rng):
    _, _, model = random_instance(rng, 15, 7)
    raw = model.to_bytes()
    with pytest.raises(LengthMismatchError):
        SvmModel.from_bytes(raw[:-3])
    with pytest.raises(LengthMismatchError):
        SvmModel.from_bytes(raw + b"\0")
    with pytest.raises(BadMagicError):
        SvmModel.from_bytes(b"GARBAGE!" + raw[8:])
    with pytest.raises(VersionMismatchError):
        SvmModel.from_bytes(b"PDSVM02\0" + raw[8:])


def test_detection_json_round_trip():
    d = Detection(8, 16, 64, 128, 1.25, 3)
    assert Detection.from_json(d.to_json()) == d
