"""Command-line harness: run, evaluate, simulate.

``run`` segments every image in a directory and writes soft masks plus a
per-image history record; ``evaluate`` scores predicted masks against
ground truth; ``simulate`` runs the seeded-world experiment. Log verbosity
comes from the PROMPTSEG_LOG environment variable (debug/info/warning).

Outputs are byte-stable for fixed inputs and seeds: reports use fixed
number formatting and every file is written via temp-file rename.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from .backends.contracts import BackendSuite
from .backends.simulated import simulated_suite
from .backends.stub import stub_suite
from .config import PipelineConfig, load_config
from .dataset import (
    DatasetEntry,
    load_dataset,
    read_gt_mask,
    read_image,
    read_soft_mask,
    write_mask_png,
    write_text_atomic,
)
from .errors import ConfigError, DatasetError, PromptsegError
from .metrics import METRIC_KEYS, evaluate_dataset
from .pipeline import PipelineResult, run_pipeline
from .simulate import format_simulation_report, run_simulation_experiment

log = logging.getLogger(__name__)


def _setup_logging() -> None:
    level_name = os.environ.get("PROMPTSEG_LOG", "warning").upper()
    level = getattr(logging, level_name, logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _format_value(value: float) -> str:
    """4 significant digits, byte-stable."""
    return f"{value:.4g}"


def _history_record(image_id: str, result: PipelineResult) -> str:
    lines = [
        f"image={image_id}",
        f"iterations={len(result.history)}",
        f"chosen_index={result.chosen_index}",
    ]
    for record in result.history:
        lines.append(f"label_{record.iteration}={record.selected_label}")
    return "\n".join(lines) + "\n"


def _run_one_image(entry: DatasetEntry, config: PipelineConfig, backends: BackendSuite):
    image = read_image(entry.image_path)
    if config.backend == "simulated":
        expected = (config.sim_canvas, config.sim_canvas)
        if image.shape[:2] != expected:
            raise DatasetError(
                f"image {entry.image_id} is {image.shape[1]}x{image.shape[0]} but the "
                f"simulated backend expects {expected[1]}x{expected[0]}"
            )
    return run_pipeline(image, config, backends)


def cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if args.task is not None:
        config = replace(config, task_prompt=args.task)
    if args.workers is not None:
        config = replace(config, workers=args.workers)
    config.validate()
    if not config.task_prompt:
        raise ConfigError("missing required key 'task_prompt' (or pass --task)")

    backends = _make_backends(config)
    manifest = load_dataset(args.images)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    # The worker pool only parallelizes across images; each pipeline is
    # independent and pure, so results are identical for any pool size.
    failures: list[tuple[str, str]] = []
    results: dict[str, PipelineResult] = {}
    with concurrent.futures.ThreadPoolExecutor(max_workers=config.workers) as pool:
        futures = {
            pool.submit(_run_one_image, entry, config, backends): entry
            for entry in manifest
        }
        for future in concurrent.futures.as_completed(futures):
            entry = futures[future]
            try:
                results[entry.image_id] = future.result()
            except Exception as exc:
                log.error("image %s failed: %s", entry.image_id, exc)
                failures.append((entry.image_id, str(exc)))

    for image_id in sorted(results):
        result = results[image_id]
        write_mask_png(out_dir / f"{image_id}_mask.png", result.final_mask)
        write_text_atomic(out_dir / f"{image_id}_history.txt", _history_record(image_id, result))

    if failures:
        failure_lines = [f"image={image_id} error={msg}" for image_id, msg in sorted(failures)]
        write_text_atomic(out_dir / "failures.txt", "\n".join(failure_lines) + "\n")
        print(f"{len(results)} succeeded, {len(failures)} failed (see failures.txt)")
        return 1
    print(f"{len(results)} image(s) segmented into {out_dir}")
    return 0


def _make_backends(config: PipelineConfig) -> BackendSuite:
    if config.backend == "stub":
        return stub_suite()
    # A standalone simulated suite for `run` on real image files: the world
    # geometry comes from the config seed. Mostly useful for smoke tests;
    # the simulate command builds richer per-seed worlds.
    from .simulate import build_world

    return simulated_suite(build_world(config, index=0))


def _pred_id(stem: str) -> str:
    """Prediction stems may carry the run command's _mask suffix."""
    return stem[: -len("_mask")] if stem.endswith("_mask") else stem


def cmd_evaluate(args: argparse.Namespace) -> int:
    pred_dir = Path(args.pred)
    gt_dir = Path(args.gt)
    if not pred_dir.is_dir():
        raise DatasetError(f"prediction directory not found: {pred_dir}")
    gt_manifest = load_dataset(gt_dir)
    gt_by_id = {entry.image_id: entry.image_path for entry in gt_manifest}

    pairs = []
    broken: list[str] = []
    pred_paths = sorted(
        p for p in pred_dir.iterdir()
        if p.is_file() and p.suffix.lower() in (".png", ".jpg", ".jpeg")
    )
    for path in pred_paths:
        image_id = _pred_id(path.stem)
        gt_path = gt_by_id.get(image_id)
        if gt_path is None:
            log.warning("prediction %s has no ground truth, skipped", image_id)
            continue
        pred = read_soft_mask(path)
        gt = read_gt_mask(gt_path)
        if pred.shape != gt.shape:
            log.error(
                "dimension mismatch for %s: pred %s vs gt %s",
                image_id, pred.shape, gt.shape,
            )
            broken.append(image_id)
            continue
        pairs.append((image_id, pred, gt))
    if not pairs:
        raise DatasetError("no evaluable prediction/ground-truth pairs")

    report = evaluate_dataset(pairs)
    lines = []
    for image_id in sorted(report.per_image):
        metrics = report.per_image[image_id]
        rendered = " ".join(f"{key}={_format_value(metrics[key])}" for key in METRIC_KEYS)
        lines.append(f"image {image_id} {rendered}")
    aggregate = " ".join(
        f"{key}={_format_value(report.aggregate[key])}" for key in METRIC_KEYS
    )
    lines.append(f"aggregate count={report.count} {aggregate}")
    if broken:
        for image_id in broken:
            lines.append(f"error {image_id} dimension_mismatch")
    text = "\n".join(lines) + "\n"

    if args.out:
        write_text_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    return 1 if broken else 0


def cmd_simulate(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if config.backend != "simulated":
        raise ConfigError("simulate requires backend=simulated")
    if args.n < 1:
        raise ConfigError("--n must be >= 1")
    report = run_simulation_experiment(config, args.n)
    text = format_simulation_report(report)
    if args.out:
        write_text_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="promptseg",
        description="Task-generic promptable segmentation pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="segment every image in a directory")
    p_run.add_argument("--config", required=True, help="flat key=value config file")
    p_run.add_argument("--images", required=True, help="directory of input images")
    p_run.add_argument("--out", default="out", help="output directory")
    p_run.add_argument("--task", default=None, help="override task_prompt")
    p_run.add_argument("--workers", type=int, default=None, help="override worker pool size")
    p_run.set_defaults(handler=cmd_run)

    p_eval = sub.add_parser("evaluate", help="score predicted masks against ground truth")
    p_eval.add_argument("--pred", required=True, help="directory of predicted masks")
    p_eval.add_argument("--gt", required=True, help="directory of ground-truth masks")
    p_eval.add_argument("--out", default=None, help="report file (default: stdout)")
    p_eval.set_defaults(handler=cmd_evaluate)

    p_sim = sub.add_parser("simulate", help="seeded-world mining experiment")
    p_sim.add_argument("--config", required=True, help="flat key=value config file")
    p_sim.add_argument("--n", type=int, required=True, help="number of seeded worlds")
    p_sim.add_argument("--out", default=None, help="report file (default: stdout)")
    p_sim.set_defaults(handler=cmd_simulate)
    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except PromptsegError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
