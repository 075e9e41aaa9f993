from .contracts import (
    CANVAS_PATCH_ID,
    BackendSuite,
    CallContext,
    Detector,
    Inpainter,
    MaskGenerator,
    PromptingVLM,
    SemanticScorer,
    softmax_scores,
)
from .simulated import (
    Distractor,
    SimulatedWorld,
    WorldConfig,
    make_world,
    simulated_suite,
)
from .stub import stub_suite

__all__ = [
    "CANVAS_PATCH_ID",
    "BackendSuite",
    "CallContext",
    "Detector",
    "Distractor",
    "Inpainter",
    "MaskGenerator",
    "PromptingVLM",
    "SemanticScorer",
    "SimulatedWorld",
    "WorldConfig",
    "make_world",
    "simulated_suite",
    "softmax_scores",
    "stub_suite",
]
