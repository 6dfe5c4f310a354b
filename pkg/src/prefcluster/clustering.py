"""k-Modes and k-Means clustering with Cao or random seeding, plus elbow selection.

k-Modes works on {0, 1} matrices with the simple-matching (Hamming)
dissimilarity and column-wise mode centroids.  k-Means is plain Lloyd
iteration under squared Euclidean distance.  On binary data with binary
centroids the two costs coincide, which is what makes a WCSS elbow curve
meaningful for both.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DetectionError, FormatError, ShapeError

MODEL_FORMAT = "prefcluster-model-v1"
METRICS = ("matching", "squared_euclidean")


@dataclass
class ClusterModel:
    algorithm: str
    k: int
    centroids: np.ndarray
    final_cost: float
    n_iter: int
    seed: int
    labels: np.ndarray = field(default=None, repr=False, compare=False)
    cost_history: list = field(default=None, repr=False, compare=False)

    @property
    def metric(self):
        return "matching" if self.algorithm == "kmodes" else "squared_euclidean"

    def to_dict(self):
        c = self.centroids.astype(int) if self.algorithm == "kmodes" else self.centroids
        return {
            "format": MODEL_FORMAT,
            "algorithm": self.algorithm,
            "k": int(self.k),
            "centroids": c.tolist(),
            "cost": float(self.final_cost),
            "n_iter": int(self.n_iter),
            "seed": int(self.seed),
        }


@dataclass(frozen=True)
class ElbowCurve:
    ks: tuple
    costs: tuple

    def __post_init__(self):
        if len(self.ks) != len(self.costs):
            raise ShapeError("ks and costs must have equal length")
        if any(b <= a for a, b in zip(self.ks, self.ks[1:])):
            raise ConfigurationError("ks must be strictly increasing")


def _check_pair(x, y):
    x, y = np.asarray(x), np.asarray(y)
    if x.shape != y.shape or x.ndim != 1:
        raise ShapeError(f"vectors must have equal 1-D shape, got {x.shape} and {y.shape}")
    return x, y


def matching_dissimilarity(x, y):
    """Number of positions where ``x`` and ``y`` differ."""
    x, y = _check_pair(x, y)
    if (x == -1).any() or (y == -1).any():
        raise ConfigurationError("matching dissimilarity is undefined on missing (-1) entries")
    return int(np.count_nonzero(x != y))


def squared_euclidean(x, y):
    x, y = _check_pair(x, y)
    diff = x.astype(np.float64) - y.astype(np.float64)
    return float(diff @ diff)


def pairwise(data, centroids, metric):
    """n x k matrix of distances from every row of ``data`` to every centroid."""
    X = np.asarray(data)
    C = np.asarray(centroids)
    if X.ndim != 2 or C.ndim != 2 or X.shape[1] != C.shape[1]:
        raise ShapeError(f"data shape {X.shape} incompatible with centroids {C.shape}")
    if metric not in METRICS:
        raise ConfigurationError(f"unknown metric {metric!r}")
    n, d = X.shape
    k = C.shape[0]
    out = np.empty((n, k), dtype=np.int64 if metric == "matching" else np.float64)
    step = max(1, (1 << 22) // max(1, k * d))
    Cf = C.astype(np.float64)
    for s in range(0, n, step):
        block = X[s:s + step]
        if metric == "matching":
            out[s:s + step] = (block[:, None, :] != C[None, :, :]).sum(axis=2)
        else:
            diff = block[:, None, :].astype(np.float64) - Cf[None, :, :]
            out[s:s + step] = np.einsum("nkd,nkd->nk", diff, diff)
    return out


def assign(centroids, data, metric):
    """Nearest-centroid labels; exact ties go to the lowest cluster index."""
    return np.argmin(pairwise(data, centroids, metric), axis=1)


def wcss(data, labels, centroids):
    X = np.asarray(data, dtype=np.float64)
    C = np.asarray(centroids, dtype=np.float64)
    labels = np.asarray(labels)
    if X.ndim != 2 or C.ndim != 2 or X.shape[1] != C.shape[1] or labels.shape != (X.shape[0],):
        raise ShapeError("inconsistent shapes for wcss")
    diff = X - C[labels]
    return float(np.einsum("nd,nd->", diff, diff))


def matching_cost(data, labels, centroids):
    X = np.asarray(data)
    C = np.asarray(centroids)
    return int(np.count_nonzero(X != C[np.asarray(labels)]))


def _binary(data, what):
    X = np.asarray(data)
    if X.ndim != 2:
        raise ShapeError(f"{what} needs a 2-D matrix, got shape {X.shape}")
    if (X == -1).any():
        raise ConfigurationError(f"{what} cannot handle missing (-1) entries; impute first")
    if not np.isin(X, (0, 1)).all():
        raise ConfigurationError(f"{what} needs a {{0,1}} matrix")
    return X.astype(np.int8)


def _check_k(n, k):
    if k < 1:
        raise ConfigurationError(f"k must be >= 1, got {k}")
    if k > n:
        raise ConfigurationError(f"k={k} exceeds the number of rows n={n}")


def cao_init(data, k):
    """Cao et al. seeding: densest row first, then max of density x distance-to-nearest-seed.

    The density of a row is the average, over columns, of the fraction of rows
    sharing its value in that column.  Ties resolve to the lowest row index.
    """
    X = _binary(data, "cao_init")
    n, d = X.shape
    _check_k(n, k)
    ones = X.sum(axis=0, dtype=np.int64)
    counts = np.where(X == 1, ones, n - ones)
    density = counts.sum(axis=1) / (n * d)

    chosen = [int(np.argmax(density))]
    nearest = np.count_nonzero(X != X[chosen[0]], axis=1).astype(np.float64)
    for _ in range(1, k):
        score = density * nearest
        nxt = int(np.argmax(score))
        chosen.append(nxt)
        np.minimum(nearest, np.count_nonzero(X != X[nxt], axis=1), out=nearest)
    return X[chosen].copy()


def random_init(data, k, rng):
    X = np.asarray(data)
    _check_k(X.shape[0], k)
    return X[np.sort(rng.choice(X.shape[0], size=k, replace=False))].copy()


def _repair_empty(X, labels, centroids, dists):
    """Reseed each empty cluster with the point farthest from its own centroid.

    Only points in clusters with at least two members are eligible, and only
    when that distance is positive, so the cost never increases.
    """
    k = centroids.shape[0]
    sizes = np.bincount(labels, minlength=k)
    own = dists[np.arange(len(labels)), labels].astype(np.float64)
    for c in np.flatnonzero(sizes == 0):
        eligible = np.where(sizes[labels] >= 2, own, -1.0)
        i = int(np.argmax(eligible))
        if eligible[i] <= 0:
            break
        sizes[labels[i]] -= 1
        sizes[c] = 1
        labels[i] = c
        own[i] = 0.0
        centroids[c] = X[i]
    return labels, centroids


def _mode_update(X, labels, centroids):
    k = centroids.shape[0]
    new = centroids.copy()
    sizes = np.bincount(labels, minlength=k)
    ones = np.zeros((k, X.shape[1]), dtype=np.int64)
    np.add.at(ones, labels, X)
    zeros = sizes[:, None] - ones
    new[ones > zeros] = 1
    new[zeros > ones] = 0
    # equal counts (and empty clusters) keep the current value
    return new


def _mean_update(X, labels, centroids):
    k = centroids.shape[0]
    sums = np.zeros_like(centroids, dtype=np.float64)
    np.add.at(sums, labels, X)
    sizes = np.bincount(labels, minlength=k)
    new = centroids.astype(np.float64).copy()
    nz = sizes > 0
    new[nz] = sums[nz] / sizes[nz, None]
    return new


def _kmodes_run(X, centroids, max_iter):
    C = centroids.astype(np.int8).copy()
    history = []
    n_iter = 0
    for _ in range(max_iter):
        dists = pairwise(X, C, "matching")
        labels = np.argmin(dists, axis=1)
        labels, C = _repair_empty(X, labels, C, dists)
        new = _mode_update(X, labels, C)
        history.append(matching_cost(X, labels, new))
        n_iter += 1
        if np.array_equal(new, C):
            break
        C = new
    labels = assign(C, X, "matching")
    return C, labels, matching_cost(X, labels, C), n_iter, history


def _kmeans_run(X, centroids, max_iter, tol):
    C = centroids.astype(np.float64).copy()
    history = []
    n_iter = 0
    for _ in range(max_iter):
        dists = pairwise(X, C, "squared_euclidean")
        labels = np.argmin(dists, axis=1)
        labels, C = _repair_empty(X, labels, C, dists)
        new = _mean_update(X, labels, C)
        history.append(wcss(X, labels, new))
        n_iter += 1
        shift = float(np.sqrt(((new - C) ** 2).sum(axis=1)).max())
        C = new
        if shift <= tol:
            break
    labels = assign(C, X, "squared_euclidean")
    return C, labels, wcss(X, labels, C), n_iter, history


def _restart_rngs(seed, n_restarts):
    return [np.random.default_rng([int(seed), r]) for r in range(n_restarts)]


def kmodes_fit(data, k, init="cao", seed=0, max_iter=100, n_restarts=8):
    """Fit k-Modes and keep the lowest-cost of ``n_restarts`` runs.

    ``init`` is ``"cao"`` (deterministic, so a single run), ``"random"``
    (k distinct rows), or an explicit k x d array of starting centroids.
    """
    X = _binary(data, "kmodes_fit")
    _check_k(X.shape[0], k)
    if max_iter < 1:
        raise ConfigurationError("max_iter must be >= 1")
    if isinstance(init, str):
        if init == "cao":
            starts = [cao_init(X, k)]
        elif init == "random":
            starts = [random_init(X, k, rng) for rng in _restart_rngs(seed, max(1, n_restarts))]
        else:
            raise ConfigurationError(f"unknown kmodes init {init!r}")
    else:
        start = np.asarray(init)
        if start.shape != (k, X.shape[1]):
            raise ShapeError(f"initial centroids have shape {start.shape}, expected {(k, X.shape[1])}")
        starts = [start]
    best = None
    for start in starts:
        run = _kmodes_run(X, start, max_iter)
        if best is None or run[2] < best[2]:
            best = run
    C, labels, cost, n_iter, history = best
    return ClusterModel("kmodes", k, C, float(cost), n_iter, int(seed), labels, history)


def kmeans_fit(data, k, init="random-points", seed=0, max_iter=300, tol=1e-6, n_restarts=8):
    """Lloyd k-Means, best of ``n_restarts``; ``"cao-on-binary"`` seeds deterministically."""
    X = np.asarray(data, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeError(f"kmeans_fit needs a 2-D matrix, got shape {X.shape}")
    _check_k(X.shape[0], k)
    if tol < 0 or max_iter < 1:
        raise ConfigurationError("tol must be >= 0 and max_iter >= 1")
    if isinstance(init, str):
        if init == "cao-on-binary":
            starts = [cao_init(X, k)]
        elif init == "random-points":
            starts = [random_init(X, k, rng) for rng in _restart_rngs(seed, max(1, n_restarts))]
        else:
            raise ConfigurationError(f"unknown kmeans init {init!r}")
    else:
        start = np.asarray(init, dtype=np.float64)
        if start.shape != (k, X.shape[1]):
            raise ShapeError(f"initial centroids have shape {start.shape}, expected {(k, X.shape[1])}")
        starts = [start]
    best = None
    for start in starts:
        run = _kmeans_run(X, start, max_iter, tol)
        if best is None or run[2] < best[2]:
            best = run
    C, labels, cost, n_iter, history = best
    return ClusterModel("kmeans", k, C, float(cost), n_iter, int(seed), labels, history)


def fit(data, k, algorithm="kmodes", init="cao", seed=0, n_restarts=8, max_iter=None):
    """Dispatch to kmodes_fit or kmeans_fit, translating the shared init names."""
    if algorithm == "kmodes":
        return kmodes_fit(data, k, init=init, seed=seed, n_restarts=n_restarts, max_iter=max_iter or 100)
    if algorithm == "kmeans":
        if isinstance(init, str):
            init = {"cao": "cao-on-binary", "random": "random-points"}.get(init, init)
        return kmeans_fit(data, k, init=init, seed=seed, n_restarts=n_restarts, max_iter=max_iter or 300)
    raise ConfigurationError(f"unknown algorithm {algorithm!r}")


def _grow(X, centroids, k, metric):
    # add the points currently worst served until there are k centroids
    C = np.asarray(centroids).copy()
    while C.shape[0] < k:
        i = int(np.argmax(pairwise(X, C, metric).min(axis=1)))
        C = np.vstack([C, X[i:i + 1].astype(C.dtype)])
    return C


def elbow_curve(data, algorithm="kmodes", ks=(1, 2, 3, 4, 5), seed=0, n_restarts=8, init="random"):
    """Best-of-restarts cost for each k.

    Besides the ``n_restarts`` fresh seeded starts per k, each k also gets one
    warm start grown from the previous k's best centroids, which keeps the
    curve non-increasing.
    """
    ks = tuple(int(k) for k in ks)
    if not ks:
        raise ConfigurationError("ks must be non-empty")
    X = np.asarray(data)
    metric = "matching" if algorithm == "kmodes" else "squared_euclidean"
    costs = []
    prev = None
    for k in ks:
        _check_k(X.shape[0], k)
        model = fit(X, k, algorithm, init, seed=int(np.random.default_rng([int(seed), k]).integers(2**63)),
                    n_restarts=n_restarts)
        if prev is not None and prev.k < k:
            warm = fit(X, k, algorithm, _grow(X, prev.centroids, k, metric), seed=model.seed)
            if warm.final_cost < model.final_cost:
                model = warm
        costs.append(model.final_cost)
        prev = model
    return ElbowCurve(ks, tuple(costs))


def second_differences(curve):
    c = curve.costs
    return [(c[i - 1] - c[i]) - (c[i] - c[i + 1]) for i in range(1, len(c) - 1)]


def detect_elbow(curve):
    """Interior k with the largest second difference of cost; ties go to the smallest k."""
    if len(curve.ks) < 3:
        raise DetectionError(f"elbow detection needs at least 3 points, got {len(curve.ks)}")
    d2 = second_differences(curve)
    return curve.ks[1 + int(np.argmax(d2))]


def save_model(path, model):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh, indent=2)


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != MODEL_FORMAT:
        raise FormatError(MODEL_FORMAT, doc.get("format"), path)
    dtype = np.int8 if doc["algorithm"] == "kmodes" else np.float64
    return ClusterModel(doc["algorithm"], int(doc["k"]), np.array(doc["centroids"], dtype=dtype),
                        float(doc["cost"]), int(doc["n_iter"]), int(doc["seed"]))


def write_elbow(path, curve):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("k,cost\n")
        for k, c in zip(curve.ks, curve.costs):
            fh.write(f"{k},{c!r}\n")


def read_elbow(path):
    ks, costs = [], []
    with open(path, encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            if line.strip():
                k, c = line.split(",")
                ks.append(int(k))
                costs.append(float(c))
    return ElbowCurve(tuple(ks), tuple(costs))
