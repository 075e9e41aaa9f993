"""Counterfactual contrastive scoring and the progressive score ledger.

For each patch, the hypothesized object region is inpainted away and the
scored vocabulary is compared before and after: a label backed by real
pixels loses most of its score, while a label that was never in the scene
barely moves. Per-label evidence for one iteration is the best (clamped)
drop across patches. Iterations are then chained multiplicatively: each
iteration's vector is multiplied by the normalized vector carried from the
previous one, so a label must respond *consistently* to stay alive --
sporadic flickers decay toward zero while steady responders take over.

The ledger keeps the raw per-iteration vectors plus the cumulative
(normalized) product; prompt selection is the cumulative argmax with ties
broken by vocabulary order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .backends.contracts import CallContext, Inpainter
from .candidates import CandidatePrompt
from .core import DEFAULT_BINARIZE_THRESHOLD, binarize
from .patching import Patch

log = logging.getLogger(__name__)

# Inpainting prompt wording; the background label and the rejected
# foreground hypothesis are spliced in per candidate.
POSITIVE_PROMPT_TEMPLATE = "{back}, high quality, detailed, and well-integrated with the original image"
NEGATIVE_PROMPT_TEMPLATE = "{fore} is not a {task}"

PROVENANCE_PREVIOUS_MASK = "previous_mask"
PROVENANCE_CANDIDATE_BOX = "candidate_box"


@dataclass(frozen=True)
class InpaintRegion:
    region: np.ndarray  # bool, patch coordinates
    provenance: str  # PROVENANCE_PREVIOUS_MASK or PROVENANCE_CANDIDATE_BOX


@dataclass(frozen=True)
class DiffVector:
    """Signed per-label score differences for one patch in one iteration."""

    entries: dict[str, float]
    patch_id: int = -1
    iteration: int = 0


@dataclass
class ScoreLedger:
    """Per-iteration raw score vectors plus the cumulative product vector.

    ``cumulative`` is always a distribution over ``vocabulary`` (sums to 1,
    entrywise >= 0). Empty until the first update.
    """

    vocabulary: list[str] = field(default_factory=list)
    per_iteration_raw: list[dict[str, float]] = field(default_factory=list)
    cumulative: dict[str, float] = field(default_factory=dict)

    @property
    def iteration_count(self) -> int:
        return len(self.per_iteration_raw)

    def snapshot(self) -> "ScoreLedger":
        return ScoreLedger(
            vocabulary=list(self.vocabulary),
            per_iteration_raw=[dict(v) for v in self.per_iteration_raw],
            cumulative=dict(self.cumulative),
        )


def build_inpaint_region(
    patch: Patch,
    previous_canvas_mask: np.ndarray | None,
    candidate: CandidatePrompt | None,
    threshold: float = DEFAULT_BINARIZE_THRESHOLD,
) -> InpaintRegion | None:
    """Choose what to occlude in one patch for counterfactual scoring.

    Once a mask exists from the previous iteration it is cropped to the
    patch and binarized; on the first pass the candidate's own boxes stand
    in for it. Returns None ("no counterfactual") when the construction is
    empty -- the caller scores such a patch as all-zero diffs.
    """
    ox, oy = patch.origin
    if previous_canvas_mask is not None:
        mask = np.asarray(previous_canvas_mask, dtype=np.float64)
        crop = mask[oy : oy + patch.height, ox : ox + patch.width]
        if crop.shape != (patch.height, patch.width):
            raise ValueError(
                f"previous mask {mask.shape} does not cover patch at {patch.origin}"
            )
        region = binarize(crop, threshold)
        if not region.any():
            return None
        return InpaintRegion(region=region, provenance=PROVENANCE_PREVIOUS_MASK)

    if candidate is None or not candidate.boxes:
        return None
    region = np.zeros((patch.height, patch.width), dtype=bool)
    patch_box = patch.bbox()
    for box in candidate.boxes:
        overlap = box.intersect(patch_box)
        if overlap is None:
            continue
        local = overlap.translate(-ox, -oy)
        region[local.slices()] = True
    if not region.any():
        return None
    return InpaintRegion(region=region, provenance=PROVENANCE_CANDIDATE_BOX)


def counterfactual_view(
    patch: Patch,
    region: InpaintRegion,
    fore: str,
    back: str,
    task_prompt: str,
    inpainter: Inpainter,
    ctx: CallContext,
) -> np.ndarray:
    """Inpaint the hypothesized object away, keeping the rest of the patch."""
    if region.region.shape != (patch.height, patch.width):
        raise ValueError("inpaint region does not match the patch view")
    positive = POSITIVE_PROMPT_TEMPLATE.format(back=back)
    negative = NEGATIVE_PROMPT_TEMPLATE.format(fore=fore, task=task_prompt)
    return inpainter.inpaint(patch.view, region.region, positive, negative, ctx)


def contrastive_diffs(
    orig: dict[str, float],
    masked: dict[str, float],
    patch_id: int = -1,
    iteration: int = 0,
) -> DiffVector:
    """Per-label score difference, original minus counterfactual (signed)."""
    if set(orig) != set(masked):
        raise ValueError("score vocabularies differ between original and masked views")
    entries = {label: orig[label] - masked[label] for label in orig}
    return DiffVector(entries=entries, patch_id=patch_id, iteration=iteration)


def zero_diffs(vocabulary: list[str], patch_id: int = -1, iteration: int = 0) -> DiffVector:
    """All-zero diff vector, used for patches with no counterfactual."""
    return DiffVector(
        entries={label: 0.0 for label in vocabulary}, patch_id=patch_id, iteration=iteration
    )


def patch_pick(diff: DiffVector) -> tuple[str, float]:
    """Largest-change label in one patch; ties go to the earliest label."""
    if not diff.entries:
        raise ValueError("empty diff vector")
    best_label = None
    best_value = -np.inf
    for label, value in diff.entries.items():
        if value > best_value:
            best_label, best_value = label, value
    return best_label, float(best_value)


def iteration_scores(diffs: list[DiffVector], clamp_negative: bool = True) -> dict[str, float]:
    """Collapse per-patch diffs into one non-negative per-label vector.

    Per label the evidence is the best drop across patches. With
    ``clamp_negative`` the per-patch values are floored at zero before the
    max; otherwise only the final maximum is floored (a score that rises
    after occlusion is never counted as evidence either way).
    """
    if not diffs:
        raise ValueError("no diff vectors to reduce")
    vocab = list(diffs[0].entries)
    for d in diffs[1:]:
        if list(d.entries) != vocab:
            raise ValueError("diff vectors do not share one vocabulary")
    scores: dict[str, float] = {}
    for label in vocab:
        values = [d.entries[label] for d in diffs]
        if clamp_negative:
            best = max(max(v, 0.0) for v in values)
        else:
            best = max(0.0, max(values))
        scores[label] = float(best)
    return scores


def normalize_scores(scores: dict[str, float]) -> dict[str, float]:
    """Divide by the sum; a zero-sum vector becomes the uniform distribution."""
    if not scores:
        raise ValueError("empty score vector")
    for label, value in scores.items():
        if value < 0.0:
            raise ValueError(f"negative score for {label!r}: {value}")
    total = sum(scores.values())
    if total <= 0.0:
        uniform = 1.0 / len(scores)
        return {label: uniform for label in scores}
    return {label: value / total for label, value in scores.items()}


def progressive_update(
    ledger: ScoreLedger,
    new_raw: dict[str, float],
    zero_sum_policy: str = "uniform",
    ledger_floor: float = 0.0,
) -> ScoreLedger:
    """Fold one iteration's raw vector into the ledger.

    The effective vector is the raw vector times the normalized vector
    carried from the previous iteration (first iteration: the raw vector
    itself); the stored cumulative is its normalization. Labels appearing
    for the first time enter with the uniform prior 1/|vocabulary|, so late
    discovery carries no retroactive penalty.

    ``zero_sum_policy`` controls an all-zero iteration: "uniform" resets the
    cumulative to uniform (no information), "carry" leaves it unchanged.
    ``ledger_floor`` > 0 keeps exactly-suppressed labels faintly alive by
    flooring both factors of the product.
    """
    if zero_sum_policy not in ("uniform", "carry"):
        raise ValueError(f"unknown zero_sum_policy: {zero_sum_policy!r}")
    for label, value in new_raw.items():
        if value < 0.0:
            raise ValueError(f"negative raw score for {label!r}: {value}")

    out = ledger.snapshot()
    for label in new_raw:
        if label not in out.vocabulary:
            out.vocabulary.append(label)
    aligned_raw = {label: float(new_raw.get(label, 0.0)) for label in out.vocabulary}
    out.per_iteration_raw.append(aligned_raw)

    if out.iteration_count == 1:
        effective = dict(aligned_raw)
    else:
        uniform = 1.0 / len(out.vocabulary)
        prior = {label: out.cumulative.get(label, uniform) for label in out.vocabulary}
        if ledger_floor > 0.0:
            effective = {
                label: max(aligned_raw[label], ledger_floor) * max(prior[label], ledger_floor)
                for label in out.vocabulary
            }
        else:
            effective = {label: aligned_raw[label] * prior[label] for label in out.vocabulary}

    if sum(effective.values()) <= 0.0 and zero_sum_policy == "carry" and out.cumulative:
        uniform = 1.0 / len(out.vocabulary)
        out.cumulative = {
            label: out.cumulative.get(label, uniform) for label in out.vocabulary
        }
        out.cumulative = normalize_scores(out.cumulative)
    else:
        out.cumulative = normalize_scores(effective)
    return out


def select_prompt(ledger: ScoreLedger) -> str:
    """Cumulative argmax; ties go to the earliest vocabulary entry."""
    if ledger.iteration_count < 1:
        raise ValueError("ledger has no iterations")
    best_label = None
    best_value = -np.inf
    for label in ledger.vocabulary:
        value = ledger.cumulative[label]
        if value > best_value:
            best_label, best_value = label, value
    return best_label
