"""Seeded world generation and the mining-vs-ablation experiment.

Each world plants one rectangular target inside a random quadrant of the
canvas (so several patches never see it and hallucinate distractor labels),
then the full pipeline runs twice: once with the configured iteration count
(progressive mining on) and once with a single iteration (the ablation).
The report compares final-label accuracy, tracks the final-mask IoU against
the planted footprint, and gives the error trend that a growing iteration
budget produces.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .backends.simulated import Distractor, SimulatedWorld, WorldConfig, simulated_suite
from .config import PipelineConfig
from .core import BBox, binarize
from .metrics import mae
from .pipeline import run_pipeline, select_final_mask

TARGET_LABELS = ("gecko", "moth", "toad", "heron", "cuttlefish", "lynx")
DISTRACTOR_LABELS = ("snake", "leaf", "bark", "moss", "stone", "twig", "coral", "shadow")

_TAG_WORLDGEN = 101

DEFAULT_TASK_PROMPT = "camouflaged animal"


@dataclass
class WorldRun:
    seed: int
    planted_label: str
    mining_label: str
    ablation_label: str
    final_iou: float
    chosen_index: int
    prefix_mae: list[float]  # final-mask error if the run had stopped at 1..I


@dataclass
class SimulationReport:
    worlds: int
    iterations: int
    mining_accuracy: float
    ablation_accuracy: float
    mean_final_iou: float
    mae_trend: list[float]
    rows: list[WorldRun]


def mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    """IoU of two binary masks; empty union counts as perfect agreement."""
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    union = int((a | b).sum())
    if union == 0:
        return 1.0
    return float((a & b).sum()) / union


def build_world(config: PipelineConfig, index: int) -> SimulatedWorld:
    """One seeded world: footprint planted inside a random quadrant."""
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, index, _TAG_WORLDGEN]))
    side = config.sim_canvas
    half = side // 2
    margin = 2 if half >= 12 else 0
    lo = max(2, half // 3)
    hi = max(lo, half - 2 * margin - 1)
    w = int(rng.integers(lo, hi + 1))
    h = int(rng.integers(lo, hi + 1))
    qx = int(rng.integers(0, 2))
    qy = int(rng.integers(0, 2))
    x0 = qx * half + margin + int(rng.integers(0, half - w - 2 * margin + 1))
    y0 = qy * half + margin + int(rng.integers(0, half - h - 2 * margin + 1))
    target_box = BBox(x0, y0, x0 + w, y0 + h)

    target_label = TARGET_LABELS[int(rng.integers(0, len(TARGET_LABELS)))]
    names = list(DISTRACTOR_LABELS)
    while len(names) < config.sim_distractors:
        names.append(f"decoy{len(names)}")
    distractors = tuple(
        Distractor(
            label=names[i],
            flicker_probability=config.sim_flicker_probability,
            magnitude=config.sim_distractor_magnitude,
        )
        for i in range(config.sim_distractors)
    )
    world_config = WorldConfig(
        width=side,
        height=side,
        target_label=target_label,
        target_box=target_box,
        distractors=distractors,
        target_magnitude=config.sim_target_magnitude,
        weight_floor=config.sim_weight_floor,
        temperature=config.sim_temperature,
        box_jitter_px=config.sim_box_jitter,
        texture_jitter=config.sim_texture_jitter,
    )
    return SimulatedWorld(world_config, seed=int(rng.integers(0, 2**63 - 1)))


def run_simulation_experiment(config: PipelineConfig, n: int) -> SimulationReport:
    """Run n seeded worlds through mining and single-iteration ablation."""
    if n < 1:
        raise ValueError("need at least one world")
    task = config.task_prompt or DEFAULT_TASK_PROMPT
    run_config = replace(config, task_prompt=task)
    ablation_config = replace(run_config, iterations=1)

    rows: list[WorldRun] = []
    for index in range(n):
        world = build_world(config, index)
        suite = simulated_suite(world)
        image = world.canvas

        mining = run_pipeline(image, run_config, suite)
        ablation = run_pipeline(image, ablation_config, suite)

        footprint = world.target_region
        final_iou = mask_iou(binarize(mining.final_mask), footprint)
        masks = [record.canvas_mask for record in mining.history]
        prefix_mae = [
            mae(select_final_mask(masks[:upto])[1], footprint)
            for upto in range(1, len(masks) + 1)
        ]
        rows.append(
            WorldRun(
                seed=index,
                planted_label=world.config.target_label,
                mining_label=mining.final_label,
                ablation_label=ablation.final_label,
                final_iou=final_iou,
                chosen_index=mining.chosen_index,
                prefix_mae=prefix_mae,
            )
        )

    mining_accuracy = float(np.mean([r.mining_label == r.planted_label for r in rows]))
    ablation_accuracy = float(np.mean([r.ablation_label == r.planted_label for r in rows]))
    mean_final_iou = float(np.mean([r.final_iou for r in rows]))
    depth = max(len(r.prefix_mae) for r in rows)
    mae_trend = [
        float(np.mean([r.prefix_mae[min(i, len(r.prefix_mae) - 1)] for r in rows]))
        for i in range(depth)
    ]
    return SimulationReport(
        worlds=n,
        iterations=run_config.iterations,
        mining_accuracy=mining_accuracy,
        ablation_accuracy=ablation_accuracy,
        mean_final_iou=mean_final_iou,
        mae_trend=mae_trend,
        rows=rows,
    )


def format_simulation_report(report: SimulationReport) -> str:
    """Byte-stable text rendering of the experiment outcome."""
    lines = [
        "simulation report",
        f"worlds={report.worlds}",
        f"iterations={report.iterations}",
        f"mining_accuracy={report.mining_accuracy:.6f}",
        f"ablation_accuracy={report.ablation_accuracy:.6f}",
        f"mean_final_iou={report.mean_final_iou:.6f}",
        "mae_trend=" + ",".join(f"{v:.6f}" for v in report.mae_trend),
    ]
    for row in report.rows:
        lines.append(
            f"world seed={row.seed} planted={row.planted_label} "
            f"mining={row.mining_label} ablation={row.ablation_label} "
            f"final_iou={row.final_iou:.6f} chosen_index={row.chosen_index} "
            "prefix_mae=" + ",".join(f"{v:.6f}" for v in row.prefix_mae)
        )
    return "\n".join(lines) + "\n"
