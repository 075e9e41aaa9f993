"""Per-patch VLM queries that build each iteration's candidate prompts.

Every patch is captioned, asked for task-relevant boxes, and asked to name
the task object and its surroundings. Labels are canonicalized to lowercase
tokens and deduplicated into the iteration vocabulary; boxes are mapped to
canvas coordinates. Candidate sets from earlier iterations can be merged in
so the score ledger keeps tracking labels seen before.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from .backends.contracts import CallContext, PromptingVLM
from .core import BBox
from .errors import BackendError
from .patching import PatchSet, patch_to_global

log = logging.getLogger(__name__)

# Prompt templates are data; {task} is replaced with the task-generic prompt.
DEFAULT_BOX_TEMPLATE = (
    "This image pertains to the {task} detection task, "
    "output the bounding box of the {task}."
)
DEFAULT_NAME_TEMPLATE = "Output the name of the {task} and its environment in one word."

_WS = re.compile(r"\s+")
_TRAILING_PUNCT = ".,;:!?\"'`)]}"


@dataclass(frozen=True)
class CandidatePrompt:
    fore: str
    back: str
    boxes: tuple[BBox, ...]  # canvas coordinates
    source_patch: int
    iteration: int


@dataclass(frozen=True)
class CandidateSet:
    iteration: int
    candidates: tuple[CandidatePrompt, ...]
    vocabulary: tuple[str, ...]  # deduplicated fore labels, first-seen order

    def by_patch(self, patch_id: int, iteration: int) -> CandidatePrompt | None:
        """The candidate a given patch produced in a given iteration, if any."""
        for cand in self.candidates:
            if cand.source_patch == patch_id and cand.iteration == iteration:
                return cand
        return None


def canonicalize_label(raw: str) -> str:
    """Normalize free-text model output into a canonical label token.

    Lowercases, collapses inner whitespace, strips surrounding whitespace and
    trailing punctuation. Raises ValueError when nothing survives.
    """
    text = _WS.sub(" ", raw.lower()).strip()
    text = text.rstrip(_TRAILING_PUNCT).strip()
    if not text:
        raise ValueError(f"label is empty after normalization: {raw!r}")
    return text


def generate_candidates(
    patchset: PatchSet,
    task_prompt: str,
    vlm: PromptingVLM,
    iteration: int,
    box_template: str = DEFAULT_BOX_TEMPLATE,
    name_template: str = DEFAULT_NAME_TEMPLATE,
) -> CandidateSet:
    """Query the VLM on every patch and assemble the iteration's candidates.

    A patch whose backend calls fail is skipped with a warning; only if every
    patch fails is the whole stage an error. Results are assembled in patch
    order, so the outcome is independent of any call scheduling.
    """
    if len(patchset) == 0:
        raise ValueError("patch set is empty")
    box_prompt = box_template.format(task=task_prompt)
    name_prompt = name_template.format(task=task_prompt)

    candidates: list[CandidatePrompt] = []
    failures: list[tuple[int, Exception]] = []
    for patch in patchset:
        ctx = CallContext(iteration=iteration, patch_id=patch.patch_id, origin=patch.origin)
        try:
            caption = vlm.caption(patch.view, ctx)
            raw_boxes = vlm.box_query(patch.view, box_prompt, ctx)
            fore_raw, back_raw = vlm.name_query(patch.view, name_prompt, ctx)
            fore = canonicalize_label(fore_raw)
            try:
                back = canonicalize_label(back_raw)
            except ValueError:
                back = "background"
            boxes = tuple(patch_to_global(b, patch) for b in raw_boxes)
        except (BackendError, ValueError) as exc:
            log.warning("patch %d skipped during candidate generation: %s", patch.patch_id, exc)
            failures.append((patch.patch_id, exc))
            continue
        log.debug("patch %d captioned %r, named %r/%r", patch.patch_id, caption, fore, back)
        candidates.append(
            CandidatePrompt(
                fore=fore,
                back=back,
                boxes=boxes,
                source_patch=patch.patch_id,
                iteration=iteration,
            )
        )

    if not candidates:
        raise BackendError(
            f"candidate generation failed on all {len(patchset)} patches "
            f"(first failure: {failures[0][1] if failures else 'none'})"
        )
    vocabulary: list[str] = []
    for cand in candidates:
        if cand.fore not in vocabulary:
            vocabulary.append(cand.fore)
    return CandidateSet(
        iteration=iteration, candidates=tuple(candidates), vocabulary=tuple(vocabulary)
    )


def merge_candidates(current: CandidateSet, carry: CandidateSet | None) -> CandidateSet:
    """Union a fresh candidate set with the accumulated one.

    The vocabulary keeps chronological first-seen order (carried labels come
    first); candidate lists are concatenated. With no carry the current set
    is returned unchanged.
    """
    if carry is None:
        return current
    vocabulary: list[str] = list(carry.vocabulary)
    for label in current.vocabulary:
        if label not in vocabulary:
            vocabulary.append(label)
    return CandidateSet(
        iteration=current.iteration,
        candidates=tuple(carry.candidates) + tuple(current.candidates),
        vocabulary=tuple(vocabulary),
    )
