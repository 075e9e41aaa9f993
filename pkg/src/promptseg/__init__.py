"""Task-generic promptable segmentation with progressive negative mining.

One coarse task prompt is turned into per-image instance-specific prompts
by counterfactual contrastive scoring over multi-scale patches; a
cumulative score ledger suppresses labels whose evidence flickers; the
selected prompt drives detection, point-primed segmentation, and
similarity-weighted mask aggregation through an iterative refine loop.
All model access goes through five backend contracts, with a deterministic
simulated suite for full offline verification.
"""

from .backends import (
    BackendSuite,
    CallContext,
    Distractor,
    SimulatedWorld,
    WorldConfig,
    make_world,
    simulated_suite,
    stub_suite,
)
from .candidates import (
    CandidatePrompt,
    CandidateSet,
    canonicalize_label,
    generate_candidates,
    merge_candidates,
)
from .config import PipelineConfig, load_config, parse_config_text
from .core import BBox, apply_mask, binarize, mask_l1_distance
from .errors import (
    AdapterNotConfiguredError,
    BackendError,
    ConfigError,
    DatasetError,
    PromptsegError,
    StageError,
)
from .maskgen import (
    PatchMaskRecord,
    aggregate_masks,
    detect_boxes,
    generate_patch_mask,
    score_mask,
    spatial_points,
)
from .metrics import (
    MetricReport,
    adaptive_fmeasure,
    evaluate_dataset,
    mae,
    mean_emeasure,
    smeasure,
)
from .mining import (
    DiffVector,
    InpaintRegion,
    ScoreLedger,
    build_inpaint_region,
    contrastive_diffs,
    counterfactual_view,
    iteration_scores,
    normalize_scores,
    patch_pick,
    progressive_update,
    select_prompt,
)
from .patching import Patch, PatchSet, build_patch_set, lift_mask, patch_to_global
from .pipeline import (
    IterationRecord,
    PipelineResult,
    blend_image,
    run_pipeline,
    select_final_mask,
)
from .simulate import SimulationReport, build_world, mask_iou, run_simulation_experiment

__version__ = "0.1.0"
