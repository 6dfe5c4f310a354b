"""Hopkins statistic for cluster tendency.

Uses the convention ``H = sum(w) / (sum(u) + sum(w))`` where ``w`` are
nearest-neighbour distances of sampled data rows and ``u`` those of uniform
probe points.  Values near 0 mean strongly clustered data, values near 0.5
mean data indistinguishable from uniform noise.
"""

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DegenerateDataError, SamplingError, ShapeError

_CHUNK = 8192


@dataclass(frozen=True)
class HopkinsResult:
    h: float
    m: int
    seed: int

    def to_json(self):
        return json.dumps(asdict(self), indent=2)


def default_sample_size(n):
    return max(1, min(math.ceil(0.1 * n), 500))


def _nearest_distances(queries, data, exclude=None):
    # exact brute force, chunked over the reference rows to bound memory
    best = np.full(queries.shape[0], np.inf)
    rows = np.arange(queries.shape[0])
    for start in range(0, data.shape[0], _CHUNK):
        block = data[start:start + _CHUNK]
        d = cdist(queries, block)
        if exclude is not None:
            local = exclude - start
            inside = (local >= 0) & (local < block.shape[0])
            d[rows[inside], local[inside]] = np.inf
        np.minimum(best, d.min(axis=1), out=best)
    return best


def hopkins(data, m=None, seed=0):
    """Compute the Hopkins statistic of ``data`` with ``m`` probes.

    ``m`` defaults to ``min(ceil(0.1 n), 500)``.  Sampled rows are excluded
    from their own nearest-neighbour search by index, so exact duplicates
    elsewhere in the data give a distance of zero.
    """
    X = np.asarray(data, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] < 1:
        raise ShapeError(f"hopkins needs an n x d matrix, got shape {X.shape}")
    n = X.shape[0]
    if m is None:
        m = default_sample_size(n)
    if m < 1 or m >= n:
        raise SamplingError(f"sample size m={m} must satisfy 1 <= m < n={n}")
    lo, hi = X.min(axis=0), X.max(axis=0)
    if np.all(lo == hi):
        raise DegenerateDataError("all rows are identical; bounding box has zero volume")

    rng = np.random.default_rng(seed)
    idx = rng.choice(n, size=m, replace=False)
    probes = rng.uniform(lo, hi, size=(m, X.shape[1]))

    w = _nearest_distances(X[idx], X, exclude=idx)
    u = _nearest_distances(probes, X)
    sw, su = float(w.sum()), float(u.sum())
    h = sw / (su + sw) if su + sw > 0 else 0.0
    return HopkinsResult(h=h, m=int(m), seed=int(seed))
