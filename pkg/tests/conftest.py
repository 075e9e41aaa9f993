import numpy as np
import pytest

from promptseg.backends.simulated import (
    Distractor,
    SimulatedWorld,
    WorldConfig,
    simulated_suite,
)
from promptseg.core import BBox


def make_test_world(
    seed=7,
    distractors=(),
    target_box=BBox(16, 16, 32, 32),
    **overrides,
) -> SimulatedWorld:
    config = WorldConfig(
        width=64,
        height=64,
        target_label="gecko",
        target_box=target_box,
        distractors=tuple(distractors),
        **overrides,
    )
    return SimulatedWorld(config, seed=seed)


@pytest.fixture
def world():
    """Noiseless 64x64 world with one planted square and two distractors."""
    return make_test_world(
        distractors=(
            Distractor("snake", flicker_probability=0.5, magnitude=0.6),
            Distractor("leaf", flicker_probability=0.0, magnitude=0.5),
        )
    )


@pytest.fixture
def suite(world):
    return simulated_suite(world)


@pytest.fixture
def canvas_ctx():
    from promptseg.backends.contracts import CallContext

    return CallContext(iteration=1, patch_id=-1, origin=(0, 0))


def masked_by(world, mask_bool):
    """World canvas with everything outside the bool mask zeroed."""
    out = world.canvas.copy()
    out[~np.asarray(mask_bool, dtype=bool)] = 0.0
    return out
