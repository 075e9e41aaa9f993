"""Placeholder adapters for real model services.

Each surface raises :class:`AdapterNotConfiguredError`, so the pipeline
wiring can be exercised end to end without any model weights. A real
deployment replaces these classes with network/GPU adapters implementing
the same contracts; the call-context argument may be ignored there.
"""

from __future__ import annotations

import numpy as np

from ..core import BBox
from ..errors import AdapterNotConfiguredError
from .contracts import BackendSuite, CallContext


def _unconfigured(op: str):
    raise AdapterNotConfiguredError(f"adapter not configured: {op}")


class StubVLM:
    def caption(self, view: np.ndarray, ctx: CallContext) -> str:
        _unconfigured("vlm.caption")

    def name_query(self, view: np.ndarray, prompt: str, ctx: CallContext) -> tuple[str, str]:
        _unconfigured("vlm.name_query")

    def box_query(self, view: np.ndarray, prompt: str, ctx: CallContext) -> list[BBox]:
        _unconfigured("vlm.box_query")

    def score_query(self, view: np.ndarray, vocabulary: list[str], ctx: CallContext) -> dict[str, float]:
        _unconfigured("vlm.score_query")


class StubInpainter:
    def inpaint(
        self,
        view: np.ndarray,
        region: np.ndarray,
        positive_prompt: str,
        negative_prompt: str,
        ctx: CallContext,
    ) -> np.ndarray:
        _unconfigured("inpainter.inpaint")


class StubDetector:
    def detect(self, view: np.ndarray, label: str, ctx: CallContext) -> list[tuple[BBox, float]]:
        _unconfigured("detector.detect")


class StubMaskGenerator:
    def segment(
        self, view: np.ndarray, points: list[tuple[int, int]], box: BBox, ctx: CallContext
    ) -> np.ndarray:
        _unconfigured("mask_generator.segment")


class StubScorer:
    def similarity(self, view: np.ndarray, label: str, ctx: CallContext) -> float:
        _unconfigured("scorer.similarity")

    def heatmap(self, view: np.ndarray, label: str, ctx: CallContext) -> np.ndarray:
        _unconfigured("scorer.heatmap")


def stub_suite() -> BackendSuite:
    return BackendSuite(
        vlm=StubVLM(),
        inpainter=StubInpainter(),
        detector=StubDetector(),
        mask_generator=StubMaskGenerator(),
        scorer=StubScorer(),
    )
