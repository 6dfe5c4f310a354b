import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prefcluster.clusterability import default_sample_size, hopkins
from prefcluster.errors import DegenerateDataError, SamplingError


def brute_hopkins(X, m, seed):
    """Loop-based reference using the same draws as the implementation."""
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(X), size=m, replace=False)
    probes = rng.uniform(X.min(axis=0), X.max(axis=0), size=(m, X.shape[1]))
    w = [min(np.linalg.norm(X[i] - X[j]) for j in range(len(X)) if j != i) for i in idx]
    u = [min(np.linalg.norm(p - x) for x in X) for p in probes]
    return sum(w) / (sum(u) + sum(w))


def test_matches_loop_reference():
    X = np.random.default_rng(3).normal(size=(60, 4))
    assert hopkins(X, 12, 5).h == pytest.approx(brute_hopkins(X, 12, 5), rel=1e-12)


def test_duplicates_give_zero():
    base = np.array([[0, 0, 1], [1, 1, 0], [0, 1, 0]])
    X = np.repeat(base, 20, axis=0)
    assert hopkins(X, 30, 1).h == 0.0


def test_uniform_near_half():
    hs = [hopkins(np.random.default_rng(100 + s).random((2000, 2)), 200, s).h for s in range(20)]
    assert abs(np.mean(hs) - 0.5) <= 0.1


def test_tight_blobs_are_clusterable():
    rng = np.random.default_rng(0)
    X = np.vstack([rng.normal(0.1, 0.01, (500, 2)), rng.normal(0.9, 0.01, (500, 2))])
    assert hopkins(X, 100, 0).h < 0.1


def test_deterministic():
    X = np.random.default_rng(1).random((300, 5))
    assert hopkins(X, 30, 9) == hopkins(X, 30, 9)


def test_sample_too_large():
    with pytest.raises(SamplingError):
        hopkins(np.random.default_rng(0).random((10, 2)), 10, 0)


def test_identical_rows():
    with pytest.raises(DegenerateDataError):
        hopkins(np.ones((10, 3)), 3, 0)


def test_default_sample_size():
    assert default_sample_size(100) == 10
    assert default_sample_size(73421) == 500
    assert hopkins(np.random.default_rng(0).random((50, 2)), seed=0).m == 5


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), scale=st.floats(1e-3, 1e3))
def test_range_and_scale_invariance(seed, scale):
    X = np.random.default_rng(seed).normal(size=(40, 3))
    h = hopkins(X, 8, seed).h
    assert 0.0 <= h <= 1.0
    assert hopkins(X * scale, 8, seed).h == pytest.approx(h, rel=1e-9)
