from __future__ import annotations

import numpy as np
import pytest

from botuner.knobs import KnobSpace, KnobSpec, ligen8_space


@pytest.fixture
def default_space() -> KnobSpace:
    return ligen8_space()


@pytest.fixture
def space2() -> KnobSpace:
    """One quality knob, one throughput knob."""
    return KnobSpace(
        (
            KnobSpec("repetitions", 1, 5, affects_quality=True),
            KnobSpec("cuda_threads", 32, 64, affects_quality=False),
        )
    )


@pytest.fixture
def space3() -> KnobSpace:
    """Two quality knobs plus a throughput knob, small enough to enumerate."""
    return KnobSpace(
        (
            KnobSpec("repetitions", 1, 5, affects_quality=True),
            KnobSpec("sim_thresh", 1, 4, affects_quality=True),
            KnobSpec("buffer_size", 1, 20, affects_quality=False),
        )
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
