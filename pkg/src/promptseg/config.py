"""Pipeline configuration and the flat key=value config file format.

One ``key=value`` per line, ``#`` starts a comment, unknown keys are an
error so typos never pass silently. Missing keys take the documented
defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .candidates import DEFAULT_BOX_TEMPLATE, DEFAULT_NAME_TEMPLATE
from .errors import ConfigError
from .maskgen import DEFAULT_N_POINTS, DEFAULT_SIMILARITY_THRESHOLD
from .patching import PATCH_SCHEMES, SCHEME_FULL

BACKENDS = ("simulated", "stub")
ZERO_SUM_POLICIES = ("uniform", "carry")
CARRY_MODES = ("accumulate", "reset")


@dataclass
class PipelineConfig:
    # outer loop
    iterations: int = 5
    blend_weight: float = 0.3
    patch_scheme: str = SCHEME_FULL
    task_prompt: str = ""
    seed: int = 0
    backend: str = "simulated"
    workers: int = 1
    # wall-clock budget per image in seconds; 0 disables the guard (results
    # must stay timing-independent, so a breach is an error, never a
    # truncated result)
    max_seconds: float = 0.0
    # candidate generation
    prompt_box_template: str = DEFAULT_BOX_TEMPLATE
    prompt_name_template: str = DEFAULT_NAME_TEMPLATE
    candidate_carry: str = "accumulate"
    # negative mining
    clamp_negative: bool = True
    zero_sum_policy: str = "uniform"
    ledger_floor: float = 0.0
    # mask generation
    similarity_threshold: float = DEFAULT_SIMILARITY_THRESHOLD
    n_points: int = DEFAULT_N_POINTS
    # simulated-world generation (used by the simulate command and tests)
    sim_canvas: int = 64
    sim_distractors: int = 4
    sim_flicker_probability: float = 0.4
    sim_distractor_magnitude: float = 0.6
    sim_target_magnitude: float = 1.0
    sim_temperature: float = 1.0
    sim_weight_floor: float = 0.05
    sim_box_jitter: int = 0
    # nonzero texture makes inpainting change pixels even on pure-background
    # patches, so counterfactual queries genuinely redraw hallucinations
    sim_texture_jitter: float = 0.02

    def validate(self) -> "PipelineConfig":
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if not 0.0 <= self.blend_weight <= 1.0:
            raise ConfigError("blend_weight must lie in [0, 1]")
        if self.patch_scheme not in PATCH_SCHEMES:
            raise ConfigError(
                f"patch_scheme must be one of {', '.join(PATCH_SCHEMES)}"
            )
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {', '.join(BACKENDS)}")
        if self.zero_sum_policy not in ZERO_SUM_POLICIES:
            raise ConfigError(
                f"zero_sum_policy must be one of {', '.join(ZERO_SUM_POLICIES)}"
            )
        if self.candidate_carry not in CARRY_MODES:
            raise ConfigError(f"candidate_carry must be one of {', '.join(CARRY_MODES)}")
        if not 0.0 <= self.similarity_threshold <= 1.0:
            raise ConfigError("similarity_threshold must lie in [0, 1]")
        if self.n_points < 1:
            raise ConfigError("n_points must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.max_seconds < 0.0:
            raise ConfigError("max_seconds must be >= 0")
        if self.ledger_floor < 0.0:
            raise ConfigError("ledger_floor must be >= 0")
        if self.sim_canvas < 8:
            raise ConfigError("sim_canvas must be >= 8")
        if self.sim_distractors < 0:
            raise ConfigError("sim_distractors must be >= 0")
        if not 0.0 <= self.sim_flicker_probability <= 1.0:
            raise ConfigError("sim_flicker_probability must lie in [0, 1]")
        return self


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_PARSERS = {int: int, float: float, str: str, bool: _parse_bool}


def parse_config_text(text: str, source: str = "<config>") -> PipelineConfig:
    """Parse config file content into a validated PipelineConfig."""
    # dataclass field types arrive as strings under `from __future__ import annotations`
    type_by_key = {}
    for f in fields(PipelineConfig):
        name = f.type if isinstance(f.type, str) else f.type.__name__
        type_by_key[f.name] = {"int": int, "float": float, "str": str, "bool": bool}[name]

    values: dict[str, object] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {raw_line!r}")
        key, _, raw_value = line.partition("=")
        key = key.strip()
        raw_value = raw_value.strip()
        if key not in type_by_key:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        parser = _PARSERS[type_by_key[key]]
        try:
            values[key] = parser(raw_value)
        except ValueError as exc:
            raise ConfigError(
                f"{source}:{lineno}: bad value for key {key!r}: {exc}"
            ) from None
    return PipelineConfig(**values).validate()


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text(encoding="utf-8"), source=str(path))
