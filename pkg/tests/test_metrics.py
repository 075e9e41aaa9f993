from itertools import product

import numpy as np
import pytest

from promptseg.metrics import (
    adaptive_fmeasure,
    evaluate_dataset,
    mae,
    mean_emeasure,
    smeasure,
)

# -- independent pixel-loop oracles (no numpy) --------------------------------


def brute_mae(pred_rows, gt_rows):
    total, count = 0.0, 0
    for pred_row, gt_row in zip(pred_rows, gt_rows):
        for p, g in zip(pred_row, gt_row):
            total += abs(p - (1.0 if g else 0.0))
            count += 1
    return total / count


def brute_adaptive_f(pred_rows, gt_rows, beta2=0.3):
    flat = [p for row in pred_rows for p in row]
    threshold = min(2.0 * sum(flat) / len(flat), 1.0)
    tp = fp = fn = 0
    for pred_row, gt_row in zip(pred_rows, gt_rows):
        for p, g in zip(pred_row, gt_row):
            fg = p >= threshold if threshold > 0.0 else False
            if fg and g:
                tp += 1
            elif fg and not g:
                fp += 1
            elif not fg and g:
                fn += 1
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    if precision == 0.0 and recall == 0.0:
        return 0.0
    return (1.0 + beta2) * precision * recall / (beta2 * precision + recall)


# -- mae -----------------------------------------------------------------------


def test_mae_identity_inversion_constant():
    gt = np.array([[True, False], [False, True]])
    assert mae(gt.astype(float), gt) == 0.0
    assert mae(1.0 - gt.astype(float), gt) == 1.0
    assert mae(np.full((2, 2), 0.5), gt) == 0.5


def test_mae_dimension_mismatch():
    with pytest.raises(ValueError):
        mae(np.zeros((2, 2)), np.zeros((2, 3), bool))


# -- adaptive F-measure ---------------------------------------------------------


def test_adaptive_f_perfect_prediction():
    gt = np.array([[True, False], [False, False]])
    assert adaptive_fmeasure(gt.astype(float), gt) == 1.0


def test_adaptive_f_hand_computed_example():
    gt = np.array([[True, False], [False, False]])
    pred = np.array([[0.8, 0.8], [0.0, 0.0]])  # binarizes to [[1,1],[0,0]] at t=0.8
    # P=0.5, R=1 -> F = 1.3*0.5/(0.3*0.5+1) = 0.65/1.15
    assert adaptive_fmeasure(pred, gt) == pytest.approx(0.65 / 1.15)


def test_adaptive_f_all_zero_prediction():
    gt = np.array([[True, False]])
    assert adaptive_fmeasure(np.zeros((1, 2)), gt) == 0.0


def test_adaptive_f_binary_prediction_below_half_mean_keeps_binarization():
    rng = np.random.default_rng(4)
    for _ in range(100):
        pred = (rng.uniform(size=(6, 6)) < 0.3).astype(float)
        if pred.mean() >= 0.5 or pred.sum() == 0:
            continue
        threshold = 2.0 * pred.mean()
        assert np.array_equal(pred >= threshold, pred.astype(bool))


def test_mae_and_adaptive_f_match_brute_force_on_all_2x2_binary_pairs():
    patterns = list(product((0.0, 1.0), repeat=4))
    checked = 0
    for pred_flat in patterns:
        for gt_flat in patterns:
            pred = np.array(pred_flat).reshape(2, 2)
            gt = np.array(gt_flat, dtype=bool).reshape(2, 2)
            pred_rows = pred.tolist()
            gt_rows = gt.tolist()
            assert mae(pred, gt) == brute_mae(pred_rows, gt_rows)
            assert adaptive_fmeasure(pred, gt) == brute_adaptive_f(pred_rows, gt_rows)
            checked += 1
    assert checked == 256


# -- mean E-measure --------------------------------------------------------------


def test_emeasure_perfect_binary_prediction():
    rng = np.random.default_rng(10)
    gt = rng.uniform(size=(12, 9)) < 0.4
    assert gt.any() and not gt.all()
    assert mean_emeasure(gt.astype(float), gt) == pytest.approx(1.0, abs=1e-9)


def test_emeasure_empty_gt_special_cases():
    gt = np.zeros((5, 5), bool)
    assert mean_emeasure(np.zeros((5, 5)), gt) == pytest.approx(1.0)
    assert mean_emeasure(np.ones((5, 5)), gt) == pytest.approx(0.0)


def test_emeasure_full_gt_special_case():
    gt = np.ones((4, 4), bool)
    assert mean_emeasure(np.ones((4, 4)), gt) == pytest.approx(1.0)
    assert mean_emeasure(np.zeros((4, 4)), gt) == pytest.approx(0.0)


def test_emeasure_transposition_invariant():
    rng = np.random.default_rng(17)
    for _ in range(20):
        pred = rng.uniform(size=(6, 11))
        gt = rng.uniform(size=(6, 11)) < 0.5
        assert mean_emeasure(pred, gt) == pytest.approx(mean_emeasure(pred.T, gt.T))


def test_emeasure_stride_subsampling():
    rng = np.random.default_rng(18)
    pred = rng.uniform(size=(8, 8))
    gt = rng.uniform(size=(8, 8)) < 0.5
    full = mean_emeasure(pred, gt)
    coarse = mean_emeasure(pred, gt, stride=4)
    assert abs(full - coarse) < 0.05
    with pytest.raises(ValueError):
        mean_emeasure(pred, gt, stride=0)


# -- S-measure --------------------------------------------------------------------


def test_smeasure_perfect_binary_prediction():
    rng = np.random.default_rng(23)
    for _ in range(10):
        gt = rng.uniform(size=(16, 16)) < rng.uniform(0.2, 0.8)
        if not gt.any() or gt.all():
            continue
        assert smeasure(gt.astype(float), gt) == pytest.approx(1.0, abs=1e-6)


def test_smeasure_special_cases():
    empty = np.zeros((6, 6), bool)
    full = np.ones((6, 6), bool)
    assert smeasure(np.zeros((6, 6)), empty) == 1.0
    assert smeasure(np.ones((6, 6)), empty) == 0.0
    assert smeasure(np.ones((6, 6)), full) == 1.0
    assert smeasure(np.zeros((6, 6)), full) == 0.0


def test_smeasure_penalizes_structure_loss():
    gt = np.zeros((16, 16), bool)
    gt[4:12, 4:12] = True
    good = smeasure(gt.astype(float), gt)
    blurry = smeasure(np.full((16, 16), gt.mean()), gt)
    assert good > blurry


# -- fuzz and aggregation -----------------------------------------------------------


def test_all_metrics_land_in_unit_interval_under_fuzz():
    rng = np.random.default_rng(31)
    for _ in range(300):
        h = int(rng.integers(1, 16))
        w = int(rng.integers(1, 16))
        pred = rng.uniform(size=(h, w))
        gt = rng.uniform(size=(h, w)) < rng.uniform()
        for value in (
            mae(pred, gt),
            adaptive_fmeasure(pred, gt),
            mean_emeasure(pred, gt, stride=16),
            smeasure(pred, gt),
        ):
            assert 0.0 <= value <= 1.0


def test_evaluate_dataset_singleton_and_duplicates():
    rng = np.random.default_rng(37)
    pred = rng.uniform(size=(8, 8))
    gt = rng.uniform(size=(8, 8)) < 0.5
    single = evaluate_dataset([("a", pred, gt)])
    assert single.count == 1
    assert single.aggregate == single.per_image["a"]

    doubled = evaluate_dataset([("a", pred, gt), ("b", pred, gt)])
    for key, value in single.aggregate.items():
        assert doubled.aggregate[key] == pytest.approx(value)


def test_evaluate_dataset_mean():
    gt = np.array([[True, False]])
    perfect = gt.astype(float)
    inverted = 1.0 - perfect
    report = evaluate_dataset([("good", perfect, gt), ("bad", inverted, gt)])
    assert report.aggregate["M"] == pytest.approx(0.5)
    assert report.count == 2


def test_evaluate_dataset_empty_is_error():
    with pytest.raises(ValueError):
        evaluate_dataset([])
