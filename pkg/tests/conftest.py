import numpy as np
import pytest

from mptk.tracks import TrackSet


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_random_trackset(rng, n, t, width=128, height=128, vis_p=0.8):
    """Random in-frame TrackSet with Bernoulli visibility."""
    pos = np.stack(
        [
            rng.uniform(0, width - 1, size=(n, t)),
            rng.uniform(0, height - 1, size=(n, t)),
        ],
        axis=-1,
    )
    vis = (rng.random((n, t)) < vis_p).astype(np.uint8)
    return TrackSet(pos, vis, width, height)


@pytest.fixture
def random_trackset(rng):
    return make_random_trackset(rng, n=6, t=5)
