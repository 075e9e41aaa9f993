"""Mask quality measures: MAE, adaptive F, mean E, and the structure measure.

All four operate on a soft prediction in [0, 1] against a binary ground
truth of the same shape and return values in [0, 1]. Dataset-level
aggregation is the unweighted per-image mean.

Conventions worth noting:

* the adaptive F threshold is min(2 * mean(pred), 1); pixels at or above
  the threshold count as foreground (so a perfect binary prediction keeps
  its own binarization at any foreground ratio), and beta^2 = 0.3;
* the mean E sweep uses 256 evenly spaced thresholds k/256 (k = 0..255),
  so a binary prediction is never degraded by the sweep itself and a
  perfect prediction scores exactly 1;
* the structure measure mixes an object term (foreground/background mean
  and spread of the prediction) with a region term (per-quadrant
  SSIM-style scores around the ground-truth centroid), alpha = 0.5.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_EPS = 1e-12

METRIC_KEYS = ("M", "F_beta", "E_phi", "S_alpha")


@dataclass
class MetricReport:
    per_image: dict[str, dict[str, float]]
    aggregate: dict[str, float]
    count: int


def _check_pair(pred: np.ndarray, gt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(pred, dtype=np.float64)
    g = np.asarray(gt, dtype=bool)
    if p.shape != g.shape:
        raise ValueError(f"prediction {p.shape} and ground truth {g.shape} shapes differ")
    if p.ndim != 2:
        raise ValueError(f"expected 2-d masks, got shape {p.shape}")
    return p, g


def mae(pred: np.ndarray, gt: np.ndarray) -> float:
    """Mean absolute error between the soft prediction and the 0/1 truth."""
    p, g = _check_pair(pred, gt)
    return float(np.mean(np.abs(p - g.astype(np.float64))))


def adaptive_fmeasure(pred: np.ndarray, gt: np.ndarray, beta2: float = 0.3) -> float:
    """F-score at the adaptive threshold of twice the prediction mean.

    An all-zero prediction has no foreground at all; otherwise the threshold
    is positive and inclusive, so a binary prediction keeps its own
    binarization at any foreground ratio. Degenerate conventions: no
    predicted foreground gives precision 0, an empty ground truth gives
    recall 0, and F is 0 when both are 0.
    """
    p, g = _check_pair(pred, gt)
    threshold = min(2.0 * float(p.mean()), 1.0)
    fm = (p >= threshold) if threshold > 0.0 else np.zeros_like(p, dtype=bool)
    tp = float(np.count_nonzero(fm & g))
    fp = float(np.count_nonzero(fm & ~g))
    fn = float(np.count_nonzero(~fm & g))
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    if precision == 0.0 and recall == 0.0:
        return 0.0
    return float((1.0 + beta2) * precision * recall / (beta2 * precision + recall))


def _alignment_score(fm: np.ndarray, g: np.ndarray) -> float:
    """Enhanced-alignment value for one binarized prediction."""
    if not g.any():
        return float(1.0 - fm.mean())
    if g.all():
        return float(fm.mean())
    fm_f = fm.astype(np.float64)
    g_f = g.astype(np.float64)
    phi_fm = fm_f - fm_f.mean()
    phi_gt = g_f - g_f.mean()
    xi = 2.0 * phi_gt * phi_fm / (phi_gt**2 + phi_fm**2 + _EPS)
    return float(np.mean((1.0 + xi) ** 2 / 4.0))


def mean_emeasure(pred: np.ndarray, gt: np.ndarray, stride: int = 1) -> float:
    """Alignment score averaged over the 256-level threshold sweep.

    ``stride`` subsamples the sweep for speed (1 = all 256 thresholds).
    """
    p, g = _check_pair(pred, gt)
    if stride < 1:
        raise ValueError("stride must be >= 1")
    scores = [
        _alignment_score(p > (k / 256.0), g) for k in range(0, 256, stride)
    ]
    return float(np.mean(scores))


def _object_score(values: np.ndarray) -> float:
    """Similarity of one object side from its prediction values."""
    if values.size == 0:
        return 0.0
    x = float(values.mean())
    sigma = float(values.std())
    return 2.0 * x / (x * x + 1.0 + 2.0 * sigma + _EPS)


def _ssim_block(p: np.ndarray, g: np.ndarray) -> float:
    """SSIM-style structural agreement for one quadrant block."""
    n = p.size
    if n == 0:
        return 0.0
    x = float(p.mean())
    y = float(g.mean())
    sigma_x = float(((p - x) ** 2).sum()) / (n - 1 + _EPS)
    sigma_y = float(((g - y) ** 2).sum()) / (n - 1 + _EPS)
    sigma_xy = float(((p - x) * (g - y)).sum()) / (n - 1 + _EPS)
    alpha = 4.0 * x * y * sigma_xy
    beta = (x * x + y * y) * (sigma_x + sigma_y)
    if alpha != 0.0:
        return alpha / (beta + _EPS)
    return 1.0 if beta == 0.0 else 0.0


def smeasure(pred: np.ndarray, gt: np.ndarray, alpha: float = 0.5) -> float:
    """Structure measure: alpha-blend of object- and region-aware terms."""
    p, g = _check_pair(pred, gt)
    mu = float(g.mean())
    if mu == 0.0:
        return float(np.clip(1.0 - p.mean(), 0.0, 1.0))
    if mu == 1.0:
        return float(np.clip(p.mean(), 0.0, 1.0))

    # Object term: the prediction over the foreground, its complement over
    # the background, weighted by the foreground ratio.
    s_object = mu * _object_score(p[g]) + (1.0 - mu) * _object_score(1.0 - p[~g])

    # Region term: quadrants split at the ground-truth centroid, weighted by
    # block area.
    height, width = g.shape
    rows, cols = np.nonzero(g)
    cy = int(round(float(rows.mean()))) + 1
    cx = int(round(float(cols.mean()))) + 1
    area = float(height * width)
    s_region = 0.0
    for row_slice, col_slice in (
        (slice(0, cy), slice(0, cx)),
        (slice(0, cy), slice(cx, width)),
        (slice(cy, height), slice(0, cx)),
        (slice(cy, height), slice(cx, width)),
    ):
        p_block = p[row_slice, col_slice]
        g_block = g[row_slice, col_slice].astype(np.float64)
        weight = p_block.size / area
        if p_block.size:
            s_region += weight * _ssim_block(p_block, g_block)

    return float(np.clip(alpha * s_object + (1.0 - alpha) * s_region, 0.0, 1.0))


def evaluate_dataset(pairs: list[tuple[str, np.ndarray, np.ndarray]]) -> MetricReport:
    """All four metrics per (image_id, pred, gt) pair, plus unweighted means."""
    if not pairs:
        raise ValueError("no prediction/ground-truth pairs to evaluate")
    per_image: dict[str, dict[str, float]] = {}
    for image_id, pred, gt in pairs:
        per_image[image_id] = {
            "M": mae(pred, gt),
            "F_beta": adaptive_fmeasure(pred, gt),
            "E_phi": mean_emeasure(pred, gt),
            "S_alpha": smeasure(pred, gt),
        }
    aggregate = {
        key: float(np.mean([metrics[key] for metrics in per_image.values()]))
        for key in METRIC_KEYS
    }
    return MetricReport(per_image=per_image, aggregate=aggregate, count=len(per_image))
