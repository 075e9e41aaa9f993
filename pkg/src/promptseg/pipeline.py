"""The outer refinement loop.

Each iteration: decompose the current image into patches, collect candidate
prompts, run counterfactual scoring over the accumulated vocabulary, fold
the result into the score ledger, pick the iteration's label, and build its
canvas mask. The mask is blended back into the image so the next iteration
works on a view with irrelevant regions dimmed. After the last iteration the
mask closest (mean absolute difference) to the pixelwise mean of all
iteration masks is returned.

Iterations are strictly sequential; determinism is guaranteed for a fixed
(image, config, backend suite) because every stage is a pure function.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .backends.contracts import BackendSuite, CallContext
from .candidates import CandidateSet, generate_candidates, merge_candidates
from .config import PipelineConfig
from .core import binarize, check_image, check_mask, mask_l1_distance
from .errors import BackendError, StageError
from .maskgen import (
    PatchMaskRecord,
    aggregate_masks,
    detect_boxes,
    generate_patch_mask,
    score_mask,
    spatial_points,
)
from .mining import (
    ScoreLedger,
    build_inpaint_region,
    contrastive_diffs,
    counterfactual_view,
    iteration_scores,
    progressive_update,
    select_prompt,
    zero_diffs,
)
from .patching import build_patch_set, lift_mask

log = logging.getLogger(__name__)


@dataclass
class IterationRecord:
    iteration: int  # 1-based
    input_image: np.ndarray
    selected_label: str
    ledger: ScoreLedger  # snapshot after this iteration's update
    patch_masks: list[PatchMaskRecord]
    canvas_mask: np.ndarray
    skipped_patches: list[int] = field(default_factory=list)


@dataclass
class PipelineResult:
    final_mask: np.ndarray
    chosen_index: int  # 1-based iteration index of the final mask
    history: list[IterationRecord]
    stage_seconds: dict[str, float] = field(default_factory=dict)

    @property
    def selected_labels(self) -> list[str]:
        return [record.selected_label for record in self.history]

    @property
    def final_label(self) -> str:
        return self.history[-1].selected_label


@dataclass
class _LoopState:
    image: np.ndarray
    ledger: ScoreLedger
    carry: CandidateSet | None = None
    previous_mask: np.ndarray | None = None


def blend_image(image: np.ndarray, mask: np.ndarray, weight: float) -> np.ndarray:
    """Soft-focus the image on the mask: w*(x*m) + (1-w)*x per pixel/channel.

    weight 0 leaves the image untouched; weight 1 multiplies it by the mask.
    Output never exceeds the input value anywhere.
    """
    img = check_image(image)
    m = check_mask(mask)
    if img.shape[:2] != m.shape:
        raise ValueError(f"image {img.shape[:2]} and mask {m.shape} dimensions differ")
    if not 0.0 <= weight <= 1.0:
        raise ValueError(f"blend weight {weight} outside [0, 1]")
    return weight * (img * m[:, :, None]) + (1.0 - weight) * img


def select_final_mask(history: list[np.ndarray]) -> tuple[int, np.ndarray]:
    """Pick the iteration mask closest to the mean of all of them.

    Returns (1-based index, mask); ties go to the earliest iteration.
    """
    if not history:
        raise ValueError("no masks to select from")
    stack = np.stack([np.asarray(m, dtype=np.float64) for m in history])
    mean_mask = stack.mean(axis=0)
    best_index = 0
    best_dist = np.inf
    for i in range(len(history)):
        dist = mask_l1_distance(stack[i], mean_mask)
        if dist < best_dist:
            best_index, best_dist = i, dist
    return best_index + 1, history[best_index]


def run_iteration(
    state: _LoopState,
    backends: BackendSuite,
    config: PipelineConfig,
    iteration: int,
    timings: dict[str, float] | None = None,
) -> IterationRecord:
    """One full pass: candidates -> counterfactual scoring -> ledger -> mask."""
    t = _StageClock(timings)

    with t.stage("patching"):
        try:
            patchset = build_patch_set(state.image, config.patch_scheme)
        except ValueError as exc:
            raise StageError("patching", str(exc)) from exc

    with t.stage("candidates"):
        try:
            current = generate_candidates(
                patchset,
                config.task_prompt,
                backends.vlm,
                iteration,
                box_template=config.prompt_box_template,
                name_template=config.prompt_name_template,
            )
        except BackendError as exc:
            raise StageError("candidates", str(exc)) from exc
        merged = merge_candidates(current, state.carry)
        vocabulary = list(merged.vocabulary)

    # A mask that binarizes empty everywhere holds no occlusion hypothesis,
    # so the next pass falls back to candidate boxes as on the first one.
    previous_mask = state.previous_mask
    if previous_mask is not None and not binarize(previous_mask).any():
        previous_mask = None

    skipped: list[int] = []
    with t.stage("counterfactual"):
        diffs = []
        for patch in patchset:
            ctx = CallContext(iteration=iteration, patch_id=patch.patch_id, origin=patch.origin)
            candidate = current.by_patch(patch.patch_id, iteration)
            region = build_inpaint_region(patch, previous_mask, candidate)
            if region is None:
                diffs.append(zero_diffs(vocabulary, patch.patch_id, iteration))
                continue
            fore = candidate.fore if candidate is not None else vocabulary[0]
            back = candidate.back if candidate is not None else "background"
            try:
                masked_view = counterfactual_view(
                    patch, region, fore, back, config.task_prompt, backends.inpainter, ctx
                )
                orig_scores = backends.vlm.score_query(patch.view, vocabulary, ctx)
                masked_scores = backends.vlm.score_query(masked_view, vocabulary, ctx)
            except BackendError as exc:
                log.warning("patch %d skipped during scoring: %s", patch.patch_id, exc)
                skipped.append(patch.patch_id)
                diffs.append(zero_diffs(vocabulary, patch.patch_id, iteration))
                continue
            diffs.append(
                contrastive_diffs(orig_scores, masked_scores, patch.patch_id, iteration)
            )
        if len(skipped) == len(patchset):
            raise StageError("counterfactual", "scoring failed on every patch")

    with t.stage("ledger"):
        raw = iteration_scores(diffs, clamp_negative=config.clamp_negative)
        ledger = progressive_update(
            state.ledger,
            raw,
            zero_sum_policy=config.zero_sum_policy,
            ledger_floor=config.ledger_floor,
        )
        label = select_prompt(ledger)

    with t.stage("masking"):
        boxes_by_patch = detect_boxes(patchset, label, backends.detector, iteration)
        records: list[PatchMaskRecord] = []
        for patch in patchset:
            boxes = boxes_by_patch.get(patch.patch_id, [])
            points = spatial_points(
                label, patch, backends.scorer, n_points=config.n_points, iteration=iteration
            )
            patch_mask = generate_patch_mask(
                patch, boxes, points, backends.mask_generator, iteration=iteration
            )
            if patch_mask is None:
                continue
            lifted = lift_mask(patch_mask, patch, patchset.canvas_size)
            similarity = score_mask(
                lifted, state.image, label, backends.scorer, iteration=iteration
            )
            records.append(
                PatchMaskRecord(
                    patch_id=patch.patch_id, mask=lifted, raw_similarity=similarity
                )
            )
        if records:
            canvas_mask = aggregate_masks(records, threshold=config.similarity_threshold)
        else:
            # Nothing matched the selected label anywhere: an empty mask is a
            # legitimate outcome, not a failure.
            canvas_mask = np.zeros(state.image.shape[:2], dtype=np.float64)

    state.ledger = ledger
    state.carry = merged if config.candidate_carry == "accumulate" else None
    state.previous_mask = canvas_mask
    return IterationRecord(
        iteration=iteration,
        input_image=state.image,
        selected_label=label,
        ledger=ledger.snapshot(),
        patch_masks=records,
        canvas_mask=canvas_mask,
        skipped_patches=skipped,
    )


def run_pipeline(image: np.ndarray, config: PipelineConfig, backends: BackendSuite) -> PipelineResult:
    """Run the full loop and select the final mask across iterations.

    Stage failures (and a breached wall-clock budget, when ``max_seconds`` is
    set) raise :class:`StageError` with the iterations completed so far
    attached as ``partial_history``; a timeout is never silently converted
    into a truncated result, which keeps outputs timing-independent.
    """
    img = check_image(image)
    state = _LoopState(image=img, ledger=ScoreLedger())
    timings: dict[str, float] = {}
    history: list[IterationRecord] = []
    started = time.perf_counter()
    for iteration in range(1, config.iterations + 1):
        if config.max_seconds > 0.0 and time.perf_counter() - started > config.max_seconds:
            timeout = StageError(
                "pipeline",
                f"wall-clock budget of {config.max_seconds}s exceeded "
                f"after {iteration - 1} iteration(s)",
            )
            timeout.partial_history = history
            raise timeout
        try:
            record = run_iteration(state, backends, config, iteration, timings)
        except StageError as err:
            err.partial_history = history
            raise
        history.append(record)
        if iteration < config.iterations:
            state.image = blend_image(state.image, record.canvas_mask, config.blend_weight)
    chosen_index, final_mask = select_final_mask([r.canvas_mask for r in history])
    return PipelineResult(
        final_mask=final_mask,
        chosen_index=chosen_index,
        history=history,
        stage_seconds=timings,
    )


class _StageClock:
    """Accumulates wall-clock seconds per stage (None-safe)."""

    def __init__(self, sink: dict[str, float] | None):
        self.sink = sink

    def stage(self, name: str):
        return _StageTimer(self.sink, name)


class _StageTimer:
    def __init__(self, sink: dict[str, float] | None, name: str):
        self.sink = sink
        self.name = name

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        if self.sink is not None:
            elapsed = time.perf_counter() - self.start
            self.sink[self.name] = self.sink.get(self.name, 0.0) + elapsed
        return False
