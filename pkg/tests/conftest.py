import numpy as np
import pytest

from astra.config import Element
from astra.frames import Frame
from astra.geometry import NormalizedBlock


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def card_bundle(tmp_path_factory):
    """One shared card-sim bundle per test session (rendering is not free)."""
    from astra.harness import CardSim

    path = tmp_path_factory.getbasetemp() / "card_bundle"
    sim = CardSim(7)
    config = sim.make_bundle(path)
    return sim, config, path


def make_frame(pixels: np.ndarray, t_ms: int = 0) -> Frame:
    return Frame(pixels=np.asarray(pixels, dtype=np.uint8), t_ms=t_ms)


def element(x1, y1, x2, y2, content="", interactive=True, provenance="manual"):
    return Element(block=NormalizedBlock(x1, y1, x2, y2), content=content,
                   interactivity=interactive, provenance=provenance)
