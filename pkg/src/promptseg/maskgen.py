"""Turn the selected label into one canvas mask for the iteration.

Per patch: detect candidate boxes, pull spatial point prompts from the
semantic heatmap, segment each box, and union the results. Each patch mask
is lifted to the canvas and scored by text-image similarity of the masked
image; the iteration mask is the similarity-weighted sum of the masks that
survive the normalized-similarity threshold.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .backends.contracts import CallContext, Detector, MaskGenerator, SemanticScorer
from .core import BBox, apply_mask
from .errors import BackendError
from .patching import Patch, PatchSet

log = logging.getLogger(__name__)

DEFAULT_SIMILARITY_THRESHOLD = 0.05
DEFAULT_N_POINTS = 1


@dataclass
class PatchMaskRecord:
    patch_id: int
    mask: np.ndarray  # canvas-lifted soft mask
    raw_similarity: float
    normalized_similarity: float = 0.0  # filled in by aggregate_masks


def detect_boxes(
    patchset: PatchSet,
    label: str,
    detector: Detector,
    iteration: int = 0,
) -> dict[int, list[BBox]]:
    """Run the detector on every patch; empty result lists are normal.

    A patch whose detector call fails is skipped (logged) rather than
    aborting the iteration.
    """
    if not label:
        raise ValueError("empty label")
    results: dict[int, list[BBox]] = {}
    for patch in patchset:
        ctx = CallContext(iteration=iteration, patch_id=patch.patch_id, origin=patch.origin)
        try:
            hits = detector.detect(patch.view, label, ctx)
        except BackendError as exc:
            log.warning("patch %d skipped during detection: %s", patch.patch_id, exc)
            continue
        results[patch.patch_id] = [box for box, _confidence in hits]
    return results


def spatial_points(
    label: str,
    patch: Patch,
    scorer: SemanticScorer,
    n_points: int = DEFAULT_N_POINTS,
    iteration: int = 0,
) -> list[tuple[int, int]]:
    """Strongest heatmap locations for the label, greedily non-max suppressed.

    The suppression radius is max(2, min(W, H)/16). Ties break in row-major
    order; an all-zero heatmap yields no points (the segmenter then works
    from boxes alone).
    """
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    ctx = CallContext(iteration=iteration, patch_id=patch.patch_id, origin=patch.origin)
    heat = np.asarray(scorer.heatmap(patch.view, label, ctx), dtype=np.float64)
    if heat.shape != (patch.height, patch.width):
        raise ValueError(f"heatmap {heat.shape} does not match the patch view")
    radius = max(2.0, min(patch.width, patch.height) / 16.0)

    working = heat.copy()
    points: list[tuple[int, int]] = []
    yy, xx = np.mgrid[0 : patch.height, 0 : patch.width]
    for _ in range(n_points):
        peak = float(working.max())
        if peak <= 0.0:
            break
        # argmax is row-major, which is exactly the tie rule we want
        r, c = np.unravel_index(int(np.argmax(working)), working.shape)
        points.append((int(c), int(r)))
        working[np.hypot(yy - r, xx - c) <= radius] = 0.0
    return points


def generate_patch_mask(
    patch: Patch,
    boxes: list[BBox],
    points: list[tuple[int, int]],
    maskgen: MaskGenerator,
    iteration: int = 0,
) -> np.ndarray | None:
    """Segment one patch: per-box masks unioned by pixelwise max.

    With no boxes but at least one point, the full patch stands in as the
    box. With neither, the patch contributes nothing (returns None).
    """
    if not boxes and not points:
        return None
    ctx = CallContext(iteration=iteration, patch_id=patch.patch_id, origin=patch.origin)
    targets = list(boxes) if boxes else [BBox(0, 0, patch.width, patch.height)]
    union: np.ndarray | None = None
    for box in targets:
        try:
            mask = np.asarray(maskgen.segment(patch.view, points, box, ctx), dtype=np.float64)
        except BackendError as exc:
            log.warning("patch %d skipped during segmentation: %s", patch.patch_id, exc)
            return None
        if mask.shape != (patch.height, patch.width):
            raise ValueError(f"segment output {mask.shape} does not match the patch view")
        union = mask if union is None else np.maximum(union, mask)
    return union


def score_mask(
    mask: np.ndarray,
    canvas_image: np.ndarray,
    label: str,
    scorer: SemanticScorer,
    iteration: int = 0,
) -> float:
    """Text-image similarity of the masked full image, clamped to [0, 1]."""
    if mask.shape != canvas_image.shape[:2]:
        raise ValueError(f"mask {mask.shape} does not match canvas {canvas_image.shape[:2]}")
    ctx = CallContext(iteration=iteration, patch_id=-1, origin=(0, 0))
    value = float(scorer.similarity(apply_mask(canvas_image, mask), label, ctx))
    return min(1.0, max(0.0, value))


def aggregate_masks(
    records: list[PatchMaskRecord],
    threshold: float = DEFAULT_SIMILARITY_THRESHOLD,
) -> np.ndarray:
    """Similarity-weighted sum of patch masks, filtered at the threshold.

    Raw similarities are normalized to sum to one; records below the
    threshold (on the normalized value) are dropped and the survivors
    renormalized. If the filter removes everything, the single
    highest-similarity record is kept. Each record's
    ``normalized_similarity`` is set to its final weight (zero if dropped).
    The weighted sum is clamped to [0, 1] as a safety net; under convex
    weights it cannot exceed 1 anyway.
    """
    if not records:
        raise ValueError("no patch mask records to aggregate")
    # Canonical patch-id order makes the float summation (and therefore the
    # output bits) independent of the order records were collected in.
    ordered = sorted(records, key=lambda r: r.patch_id)
    raws = [max(0.0, r.raw_similarity) for r in ordered]
    total = sum(raws)
    if total <= 0.0:
        normalized = [1.0 / len(ordered)] * len(ordered)
    else:
        normalized = [v / total for v in raws]

    kept = [i for i, v in enumerate(normalized) if v >= threshold]
    if not kept:
        best = max(range(len(ordered)), key=lambda i: (normalized[i], -ordered[i].patch_id))
        kept = [best]
    kept_total = sum(normalized[i] for i in kept)
    weights = {i: normalized[i] / kept_total for i in kept}

    out = np.zeros_like(ordered[0].mask, dtype=np.float64)
    for i, record in enumerate(ordered):
        w = weights.get(i, 0.0)
        record.normalized_similarity = w
        if w > 0.0:
            if record.mask.shape != out.shape:
                raise ValueError("patch mask records disagree on canvas dimensions")
            out += w * record.mask
    np.clip(out, 0.0, 1.0, out=out)
    return out
