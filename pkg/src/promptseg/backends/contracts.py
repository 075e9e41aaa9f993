"""The five model contracts the pipeline consumes.

Every call takes a :class:`CallContext` naming the iteration index, the
patch id, and the patch origin on the canvas. The context exists so a
simulated backend can both locate a view inside its world and vary seeded
behaviour across iterations while staying bit-reproducible; real model
adapters are free to ignore it.

A ``ScoredVocabulary`` is represented as a plain ``dict[str, float]`` whose
insertion order is the vocabulary order and whose values sum to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np

from ..core import BBox

# Canvas-level calls (for example scoring a whole masked image) use patch_id -1.
CANVAS_PATCH_ID = -1


@dataclass(frozen=True)
class CallContext:
    iteration: int = 0
    patch_id: int = CANVAS_PATCH_ID
    origin: tuple[int, int] = (0, 0)


def softmax_scores(weights: dict[str, float], temperature: float = 1.0) -> dict[str, float]:
    """Exponentiate-and-normalize a label->weight map into a distribution.

    Preserves key order. The max weight is subtracted before exponentiation
    for numerical stability; lower temperatures sharpen the distribution.
    """
    if not weights:
        raise ValueError("cannot normalize an empty vocabulary")
    if temperature <= 0.0:
        raise ValueError("temperature must be positive")
    top = max(weights.values())
    exps = {label: math.exp((w - top) / temperature) for label, w in weights.items()}
    total = sum(exps.values())
    return {label: e / total for label, e in exps.items()}


@runtime_checkable
class PromptingVLM(Protocol):
    """Vision-language model surface: captions, names, boxes, and a scored
    vocabulary distribution per query."""

    def caption(self, view: np.ndarray, ctx: CallContext) -> str: ...

    def name_query(self, view: np.ndarray, prompt: str, ctx: CallContext) -> tuple[str, str]:
        """Returns (foreground label, background label) raw text."""
        ...

    def box_query(self, view: np.ndarray, prompt: str, ctx: CallContext) -> list[BBox]: ...

    def score_query(
        self, view: np.ndarray, vocabulary: list[str], ctx: CallContext
    ) -> dict[str, float]:
        """Deterministic softmax-normalized scores over the given labels."""
        ...


@runtime_checkable
class Inpainter(Protocol):
    """Region fill-in. Pixels outside the region must come back bit-identical."""

    def inpaint(
        self,
        view: np.ndarray,
        region: np.ndarray,
        positive_prompt: str,
        negative_prompt: str,
        ctx: CallContext,
    ) -> np.ndarray: ...


@runtime_checkable
class Detector(Protocol):
    def detect(self, view: np.ndarray, label: str, ctx: CallContext) -> list[tuple[BBox, float]]:
        """(box, confidence) pairs; boxes are valid within the view."""
        ...


@runtime_checkable
class MaskGenerator(Protocol):
    def segment(
        self,
        view: np.ndarray,
        points: list[tuple[int, int]],
        box: BBox,
        ctx: CallContext,
    ) -> np.ndarray:
        """Soft mask with the view's dimensions."""
        ...


@runtime_checkable
class SemanticScorer(Protocol):
    def similarity(self, view: np.ndarray, label: str, ctx: CallContext) -> float:
        """Text-image similarity in [0, 1]."""
        ...

    def heatmap(self, view: np.ndarray, label: str, ctx: CallContext) -> np.ndarray:
        """Spatial prior for the label, same dimensions as the view."""
        ...


@dataclass(frozen=True)
class BackendSuite:
    """The full set of model surfaces the pipeline needs."""

    vlm: PromptingVLM
    inpainter: Inpainter
    detector: Detector
    mask_generator: MaskGenerator
    scorer: SemanticScorer
