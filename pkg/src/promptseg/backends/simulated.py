"""A deterministic simulated world implementing all five backend contracts.

The world plants one target object (a footprint of pixels rendered in a
bright value band on a dark background) plus a set of *distractor* labels
that are never in the scene but flicker into the score distribution with a
seeded per-view coin. That flicker reproduces the failure mode the
progressive ledger is built to suppress: a wrong label occasionally shows a
large before/after-occlusion score difference in one iteration and nearly
none in the next, while the planted label responds consistently.

Every operation is a pure function of (world, inputs, call context): seeded
draws are keyed by the world seed, a per-operation tag, the context indices,
and a content fingerprint of the view, so identical calls are bit-identical
and reruns reproduce exactly.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from ..core import BBox
from .contracts import BackendSuite, CallContext

# Seed-stream tags; each operation family draws from its own stream.
_TAG_RENDER = 1
_TAG_SCORE_COIN = 2
_TAG_NAME = 3
_TAG_BOX = 4
_TAG_DETECT = 5
_TAG_SIMILARITY = 6


@dataclass(frozen=True)
class Distractor:
    """A label that is not in the scene but intermittently scores high."""

    label: str
    flicker_probability: float  # chance the coin lands heads for one view
    magnitude: float  # pre-softmax weight when it does

    def __post_init__(self):
        if not 0.0 <= self.flicker_probability <= 1.0:
            raise ValueError(f"flicker_probability {self.flicker_probability} outside [0, 1]")
        if not 0.0 <= self.magnitude <= 1.0:
            raise ValueError(f"magnitude {self.magnitude} outside [0, 1]")


@dataclass
class WorldConfig:
    width: int = 64
    height: int = 64
    target_label: str = "gecko"
    background_label: str = "background"
    target_box: BBox | None = None  # rectangle footprint; or pass target_region
    target_region: np.ndarray | None = None  # explicit bool footprint (H, W)
    distractors: tuple[Distractor, ...] = ()
    target_magnitude: float = 1.0
    weight_floor: float = 0.05
    temperature: float = 1.0  # sharpness of the power normalization in score_query
    target_value: float = 0.85
    background_value: float = 0.15
    visibility_threshold: float = 0.35
    texture_jitter: float = 0.0  # per-pixel render jitter amplitude
    box_jitter_px: int = 0  # detector box edge noise, in pixels
    allow_ill_posed: bool = False  # permit distractor magnitude >= target

    def resolved_region(self) -> np.ndarray:
        if self.target_region is not None:
            region = np.asarray(self.target_region, dtype=bool)
            if region.shape != (self.height, self.width):
                raise ValueError(
                    f"target_region shape {region.shape} does not match "
                    f"({self.height}, {self.width})"
                )
            return region
        if self.target_box is None:
            raise ValueError("world config needs target_box or target_region")
        if not self.target_box.fits_in(self.width, self.height):
            raise ValueError(f"target_box {self.target_box} exceeds the canvas")
        region = np.zeros((self.height, self.width), dtype=bool)
        region[self.target_box.slices()] = True
        return region


def _check_label(label: str, what: str) -> str:
    if not label or label != label.strip() or label != label.lower():
        raise ValueError(f"{what} must be a non-empty lowercase token: {label!r}")
    return label


def _fingerprint(view: np.ndarray) -> int:
    """Stable 64-bit content hash of a view array."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(view.shape).encode())
    h.update(np.ascontiguousarray(view).tobytes())
    return int.from_bytes(h.digest(), "big")


def _label_key(label: str) -> int:
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


class SimulatedWorld:
    """Seeded oracle scene; immutable after construction."""

    def __init__(self, config: WorldConfig, seed: int):
        if config.width < 8 or config.height < 8:
            raise ValueError("simulated canvas must be at least 8x8")
        _check_label(config.target_label, "target label")
        _check_label(config.background_label, "background label")
        for d in config.distractors:
            _check_label(d.label, "distractor label")
            if d.label == config.target_label:
                raise ValueError(f"distractor duplicates the target label {d.label!r}")
        if config.distractors and not config.allow_ill_posed:
            worst = max(d.magnitude for d in config.distractors)
            if config.target_magnitude <= worst:
                raise ValueError(
                    "ill-posed scene: target magnitude must exceed every distractor "
                    "(set allow_ill_posed to override)"
                )

        self.config = config
        self.seed = int(seed)
        self.target_region = config.resolved_region()
        self.target_pixels = int(self.target_region.sum())
        if self.target_pixels == 0:
            raise ValueError("target region is empty")
        self._distractor_index = {d.label: (i, d) for i, d in enumerate(config.distractors)}
        self.canvas = self._render()

    # -- construction -----------------------------------------------------

    def _rng(self, *tags: int) -> np.random.Generator:
        entropy = [self.seed & 0xFFFFFFFFFFFFFFFF] + [int(t) for t in tags]
        return np.random.default_rng(np.random.SeedSequence(entropy))

    def _render(self) -> np.ndarray:
        cfg = self.config
        img = np.full((cfg.height, cfg.width, 3), cfg.background_value, dtype=np.float64)
        img[self.target_region] = cfg.target_value
        if cfg.texture_jitter > 0.0:
            rng = self._rng(_TAG_RENDER)
            noise = rng.uniform(-cfg.texture_jitter, cfg.texture_jitter, size=img.shape[:2])
            img += noise[:, :, None]
            np.clip(img, 0.0, 1.0, out=img)
        return img

    # -- view geometry ----------------------------------------------------

    def _window(self, view: np.ndarray, ctx: CallContext) -> tuple[int, int, int, int]:
        """(oy, ox, h, w) of the view inside the canvas; validates the fit."""
        h, w = view.shape[:2]
        ox, oy = ctx.origin
        if ox < 0 or oy < 0 or oy + h > self.config.height or ox + w > self.config.width:
            raise ValueError(
                f"view {w}x{h} at origin {ctx.origin} does not fit the "
                f"{self.config.width}x{self.config.height} canvas"
            )
        return oy, ox, h, w

    def visible_target(self, view: np.ndarray, ctx: CallContext) -> np.ndarray:
        """Bool map (view coords) of target pixels still showing the target band."""
        oy, ox, h, w = self._window(view, ctx)
        region = self.target_region[oy : oy + h, ox : ox + w]
        bright = view.mean(axis=2) >= self.config.visibility_threshold
        return region & bright

    def visible_fraction(self, view: np.ndarray, ctx: CallContext) -> float:
        """Fraction of the whole footprint visible within this view."""
        return float(self.visible_target(view, ctx).sum()) / self.target_pixels

    # -- scoring mechanics --------------------------------------------------

    def _distractor_fires(self, d_index: int, d: Distractor, view: np.ndarray, ctx: CallContext) -> bool:
        rng = self._rng(
            _TAG_SCORE_COIN, d_index, ctx.iteration, ctx.patch_id + 1, _fingerprint(view)
        )
        return bool(rng.uniform() < d.flicker_probability)

    def score_weights(self, view: np.ndarray, vocabulary: list[str], ctx: CallContext) -> dict[str, float]:
        """Pre-softmax label weights for one view."""
        cfg = self.config
        vf = self.visible_fraction(view, ctx)
        weights: dict[str, float] = {}
        for label in vocabulary:
            if label == cfg.target_label:
                weights[label] = cfg.target_magnitude * vf
            elif label in self._distractor_index:
                d_index, d = self._distractor_index[label]
                if self._distractor_fires(d_index, d, view, ctx):
                    weights[label] = d.magnitude
                else:
                    weights[label] = cfg.weight_floor
            else:
                weights[label] = cfg.weight_floor
        return weights


class SimulatedVLM:
    def __init__(self, world: SimulatedWorld):
        self.world = world

    def caption(self, view: np.ndarray, ctx: CallContext) -> str:
        self.world._window(view, ctx)  # validate placement
        return f"a cluttered {self.world.config.background_label} scene"

    def name_query(self, view: np.ndarray, prompt: str, ctx: CallContext) -> tuple[str, str]:
        world = self.world
        back = world.config.background_label
        if world.visible_target(view, ctx).any():
            return world.config.target_label, back
        # Nothing recognizable in view: the model falls back on prior
        # knowledge and guesses one of the plausible-but-wrong labels.
        distractors = world.config.distractors
        if not distractors:
            return back, back
        rng = world._rng(_TAG_NAME, ctx.iteration, ctx.patch_id + 1, _fingerprint(view))
        pick = int(rng.integers(0, len(distractors)))
        return distractors[pick].label, back

    def box_query(self, view: np.ndarray, prompt: str, ctx: CallContext) -> list[BBox]:
        world = self.world
        visible = world.visible_target(view, ctx)
        if visible.any():
            return [_tight_box(visible, world, ctx, view, _TAG_BOX)]
        # Hallucinated guess at where a task object might hide.
        h, w = view.shape[:2]
        rng = world._rng(_TAG_BOX, ctx.iteration, ctx.patch_id + 1, _fingerprint(view))
        bw = int(rng.integers(max(2, w // 4), max(3, w // 2 + 1)))
        bh = int(rng.integers(max(2, h // 4), max(3, h // 2 + 1)))
        x0 = int(rng.integers(0, w - bw + 1))
        y0 = int(rng.integers(0, h - bh + 1))
        return [BBox(x0, y0, x0 + bw, y0 + bh)]

    def score_query(self, view: np.ndarray, vocabulary: list[str], ctx: CallContext) -> dict[str, float]:
        if not vocabulary:
            raise ValueError("score_query needs a non-empty vocabulary")
        weights = self.world.score_weights(view, list(vocabulary), ctx)
        # Softmax over log-weights (power normalization): an invisible target
        # scores exactly zero, and label coupling stays strong enough that a
        # firing distractor genuinely contests single-view comparisons.
        temperature = self.world.config.temperature
        powered = {label: w ** (1.0 / temperature) for label, w in weights.items()}
        total = sum(powered.values())
        if total <= 0.0:
            uniform = 1.0 / len(powered)
            return {label: uniform for label in powered}
        return {label: value / total for label, value in powered.items()}


class SimulatedInpainter:
    def __init__(self, world: SimulatedWorld):
        self.world = world

    def inpaint(
        self,
        view: np.ndarray,
        region: np.ndarray,
        positive_prompt: str,
        negative_prompt: str,
        ctx: CallContext,
    ) -> np.ndarray:
        region = np.asarray(region, dtype=bool)
        if region.shape != view.shape[:2]:
            raise ValueError(
                f"inpaint region {region.shape} does not match view {view.shape[:2]}"
            )
        out = view.copy()
        out[region] = self.world.config.background_value
        return out


class SimulatedDetector:
    def __init__(self, world: SimulatedWorld):
        self.world = world

    def detect(self, view: np.ndarray, label: str, ctx: CallContext) -> list[tuple[BBox, float]]:
        world = self.world
        if label != world.config.target_label:
            world._window(view, ctx)
            return []
        visible = world.visible_target(view, ctx)
        if not visible.any():
            return []
        box = _tight_box(visible, world, ctx, view, _TAG_DETECT)
        confidence = float(visible.sum()) / world.target_pixels
        return [(box, confidence)]


class SimulatedMaskGenerator:
    def __init__(self, world: SimulatedWorld):
        self.world = world

    def segment(
        self,
        view: np.ndarray,
        points: list[tuple[int, int]],
        box: BBox,
        ctx: CallContext,
    ) -> np.ndarray:
        h, w = view.shape[:2]
        if not box.fits_in(w, h):
            raise ValueError(f"segment box {box} exceeds view {w}x{h}")
        visible = self.world.visible_target(view, ctx)
        in_box = np.zeros((h, w), dtype=bool)
        in_box[box.slices()] = True
        hit = any(
            0 <= y < h and 0 <= x < w and visible[int(y), int(x)] for x, y in points
        )
        mask = np.zeros((h, w), dtype=np.float64)
        if hit and (visible & in_box).any():
            mask[visible & in_box] = 1.0
        else:
            mask[in_box] = 0.5
        return mask


class SimulatedScorer:
    def __init__(self, world: SimulatedWorld):
        self.world = world

    def similarity(self, view: np.ndarray, label: str, ctx: CallContext) -> float:
        world = self.world
        oy, ox, h, w = world._window(view, ctx)
        if label == world.config.target_label:
            support = view.max(axis=2) > 0.0
            region = world.target_region[oy : oy + h, ox : ox + w]
            union = int((support | region).sum())
            if union == 0:
                return 0.0
            return float((support & region).sum()) / union
        rng = world._rng(_TAG_SIMILARITY, _label_key(label), _fingerprint(view))
        return float(rng.uniform(0.0, 0.2))

    def heatmap(self, view: np.ndarray, label: str, ctx: CallContext) -> np.ndarray:
        world = self.world
        world._window(view, ctx)
        h, w = view.shape[:2]
        out = np.zeros((h, w), dtype=np.float64)
        if label != world.config.target_label:
            return out
        visible = world.visible_target(view, ctx)
        if not visible.any():
            return out
        rows, cols = np.nonzero(visible)
        cy = float(rows.mean())
        cx = float(cols.mean())
        radius = max(4.0, min(h, w) / 3.0)
        yy, xx = np.mgrid[0:h, 0:w]
        dist = np.hypot(yy - cy, xx - cx)
        np.maximum(out, 1.0 - dist / radius, out=out)
        np.clip(out, 0.0, 1.0, out=out)
        return out


def _tight_box(
    visible: np.ndarray,
    world: SimulatedWorld,
    ctx: CallContext,
    view: np.ndarray,
    tag: int,
) -> BBox:
    """Tight bounding box of a non-empty bool map, with optional seeded jitter."""
    rows, cols = np.nonzero(visible)
    x0, x1 = int(cols.min()), int(cols.max()) + 1
    y0, y1 = int(rows.min()), int(rows.max()) + 1
    jitter = world.config.box_jitter_px
    if jitter > 0:
        h, w = visible.shape
        rng = world._rng(tag, ctx.iteration, ctx.patch_id + 1, _fingerprint(view))
        dx0, dy0, dx1, dy1 = (int(v) for v in rng.integers(-jitter, jitter + 1, size=4))
        x0 = max(0, min(x0 + dx0, w - 1))
        y0 = max(0, min(y0 + dy0, h - 1))
        x1 = max(x0 + 1, min(x1 + dx1, w))
        y1 = max(y0 + 1, min(y1 + dy1, h))
    return BBox(x0, y0, x1, y1)


def make_world(config: WorldConfig, seed: int) -> SimulatedWorld:
    """Build a seeded world; same config + seed gives a bit-identical world."""
    return SimulatedWorld(config, seed)


def simulated_suite(world: SimulatedWorld) -> BackendSuite:
    """All five contracts wired to one world."""
    return BackendSuite(
        vlm=SimulatedVLM(world),
        inpainter=SimulatedInpainter(world),
        detector=SimulatedDetector(world),
        mask_generator=SimulatedMaskGenerator(world),
        scorer=SimulatedScorer(world),
    )
