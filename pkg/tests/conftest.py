import numpy as np
import pytest

from skysift import DbscanParams, dbscan, sequence_from_frame_arrays, superimpose


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def make_sequence(frames_xyz, dt=0.1, t0=0.0):
    """Sequence from a list of (n_i, 3) arrays at uniform timestamps."""
    ts = t0 + dt * np.arange(len(frames_xyz))
    return sequence_from_frame_arrays(ts, [np.asarray(f, dtype=np.float64)
                                           for f in frames_xyz])


def cluster_full(seq, eps=1.0, min_pts=4):
    """Superimpose the whole sequence and cluster it."""
    full = superimpose(seq, seq.full_window())
    return full, dbscan(full, DbscanParams(eps=eps, min_pts=min_pts),
                        seq.full_window())
