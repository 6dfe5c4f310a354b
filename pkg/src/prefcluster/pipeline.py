"""Artifact-file pipeline: every stage reads the previous stages' files from the
output directory and writes its own, so stages can run one at a time from the
CLI or all together through :func:`run_pipeline` with identical results.

Stage seeds are ``derive_seed(master_seed, stage_name)``: the first 8 bytes
(little endian) of ``blake2b(f"{master_seed}:{stage_name}")``.
"""

import configparser
import hashlib
import json
import logging
import os
import time
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .analysis import emit_pattern_chart, overlap_test, preference_patterns, write_overlap
from .clusterability import default_sample_size, hopkins
from .clustering import assign, detect_elbow, elbow_curve, fit, load_model, save_model, \
    second_differences, write_elbow
from .errors import ConfigurationError, FormatError, PrefclusterError, StageError
from .rbm import TrainConfig, build_d1_d2, evaluate_mae, load_rbm, save_rbm, train
from .ratings_io import UserSplit, binarize, load_ratings, read_binary, split_users, write_binary

log = logging.getLogger(__name__)

MANIFEST_FORMAT = "prefcluster-manifest-v1"
ELBOW_FORMAT = "prefcluster-elbow-v1"
STAGES = ("ingest", "train-rbm", "impute", "hopkins", "elbow", "cluster", "preferences", "overlap")

BINARY = "binary.csv"
SPLIT = "split.json"
RBM = "rbm.json"
RBM_REPORT = "rbm_report.json"
D1 = "d1.csv"
D2 = "d2.csv"
HOPKINS = "hopkins.json"
ELBOW_CSV = "elbow.csv"
ELBOW_JSON = "elbow.json"
MODEL = "model.json"
LABELS = "labels.csv"
OVERLAP = "overlap.json"
MANIFEST = "manifest.json"


@dataclass
class PipelineConfig:
    input: str = None
    has_count_column: bool = False
    test_fraction: float = 0.2
    n_hidden: int = 100
    cd_k: int = 10
    learning_rate: float = 0.05
    epochs: int = 10
    batch_size: int = 100
    hopkins_m: int = None
    elbow_ks: tuple = (1, 2, 3, 4, 5)
    algorithm: str = "kmodes"
    init: str = "cao"
    k: int = None
    n_restarts: int = 8
    output_dir: str = "prefcluster-run"
    seed: int = 0

    def __post_init__(self):
        self.elbow_ks = tuple(int(k) for k in self.elbow_ks)
        if self.algorithm not in ("kmodes", "kmeans"):
            raise ConfigurationError(f"algorithm must be kmodes or kmeans, got {self.algorithm!r}")
        if self.init not in ("cao", "random"):
            raise ConfigurationError(f"init must be cao or random, got {self.init!r}")
        if not 0 < self.test_fraction < 1:
            raise ConfigurationError("test_fraction must lie in (0, 1)")
        if self.k is not None and self.k < 1:
            raise ConfigurationError("k must be >= 1")
        if self.n_restarts < 1:
            raise ConfigurationError("n_restarts must be >= 1")
        if not self.elbow_ks or any(k < 1 for k in self.elbow_ks):
            raise ConfigurationError("elbow_ks must be a non-empty list of positive integers")

    def path(self, name):
        return os.path.join(self.output_dir, name)

    def train_config(self):
        return TrainConfig(self.n_hidden, self.cd_k, self.learning_rate, self.epochs, self.batch_size,
                           derive_seed(self.seed, "train-rbm"))

    def to_dict(self):
        d = asdict(self)
        d["elbow_ks"] = list(self.elbow_ks)
        return d


def _parse_value(name, raw, kind):
    raw = raw.strip()
    if raw.lower() in ("none", ""):
        return None
    if name == "elbow_ks":
        return tuple(int(x) for x in raw.replace(",", " ").split())
    if kind is bool:
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigurationError(f"{name}: expected a boolean, got {raw!r}")
    try:
        return kind(raw)
    except ValueError:
        raise ConfigurationError(f"{name}: cannot parse {raw!r}") from None


_KINDS = {
    "input": str, "has_count_column": bool, "test_fraction": float, "n_hidden": int, "cd_k": int,
    "learning_rate": float, "epochs": int, "batch_size": int, "hopkins_m": int, "elbow_ks": tuple,
    "algorithm": str, "init": str, "k": int, "n_restarts": int, "output_dir": str, "seed": int,
}


def read_config_file(path):
    """Parse a ``key = value`` file (``#`` comments; kebab- or snake-case keys)."""
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_string("[pipeline]\n" + fh.read())
    except configparser.Error as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
    out = {}
    for key, raw in parser["pipeline"].items():
        name = key.replace("-", "_")
        if name not in _KINDS:
            raise ConfigurationError(f"{path}: unknown key {key!r}")
        out[name] = _parse_value(name, raw, _KINDS[name])
    return out


def derive_seed(master_seed, stage):
    digest = hashlib.blake2b(f"{int(master_seed)}:{stage}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def _dump(path, doc):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _load(path, expected_format=None):
    if not os.path.exists(path):
        raise FileNotFoundError(f"missing artifact {path}; run the earlier stage first")
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if expected_format is not None and doc.get("format") != expected_format:
        raise FormatError(expected_format, doc.get("format"), path)
    return doc


def stage_ingest(cfg):
    if not cfg.input:
        raise ConfigurationError("no input file given")
    if not os.path.exists(cfg.input):
        raise FileNotFoundError(f"input file not found: {cfg.input}")
    binary = binarize(load_ratings(cfg.input, cfg.has_count_column))
    split = split_users(binary, cfg.test_fraction, derive_seed(cfg.seed, "ingest"))
    write_binary(cfg.path(BINARY), binary)
    _dump(cfg.path(SPLIT), {"format": "prefcluster-split-v1", "unit": "users", **split.to_dict()})
    v = binary.values
    return {
        "n_users": binary.n_users,
        "n_jokes": binary.n_jokes,
        "n_observed": int(np.count_nonzero(v != -1)),
        "n_likes": int(np.count_nonzero(v == 1)),
        "n_train_users": len(split.train_rows),
        "n_test_users": len(split.test_rows),
        "split_unit": "users",
    }


def stage_train_rbm(cfg):
    binary = read_binary(cfg.path(BINARY)).values
    split = UserSplit.from_dict(_load(cfg.path(SPLIT), "prefcluster-split-v1"))
    tc = cfg.train_config()
    params, history = train(tc, binary[list(split.train_rows)])
    mae = evaluate_mae(params, binary[list(split.test_rows)])
    save_rbm(cfg.path(RBM), params, tc)
    _dump(cfg.path(RBM_REPORT), {"test_mae": mae, "reconstruction_error": history.reconstruction_error})
    return {"test_mae": mae, "final_reconstruction_error": history.reconstruction_error[-1]}


def stage_impute(cfg):
    params, _ = load_rbm(cfg.path(RBM))
    binary = read_binary(cfg.path(BINARY))
    imputed = build_d1_d2(params, binary)
    write_binary(cfg.path(D1), imputed.d1)
    write_binary(cfg.path(D2), imputed.d2)
    observed = binary.observed
    return {
        "n_imputed": int(np.count_nonzero(~observed)),
        "d1_like_rate": float(imputed.d1.values.mean()),
        "d1_disagreement_on_observed": float((imputed.d1.values != binary.values)[observed].mean()),
    }


def stage_hopkins(cfg):
    d1 = read_binary(cfg.path(D1)).values
    m = cfg.hopkins_m or default_sample_size(d1.shape[0])
    result = hopkins(d1, m, derive_seed(cfg.seed, "hopkins"))
    _dump(cfg.path(HOPKINS), {"format": "prefcluster-hopkins-v1", "h": result.h, "m": result.m,
                               "seed": result.seed})
    return {"h": result.h, "m": result.m}


def stage_elbow(cfg):
    d1 = read_binary(cfg.path(D1)).values
    ks = tuple(k for k in cfg.elbow_ks if k <= d1.shape[0])
    curve = elbow_curve(d1, cfg.algorithm, ks, derive_seed(cfg.seed, "elbow"), cfg.n_restarts)
    detected = detect_elbow(curve) if len(ks) >= 3 else None
    write_elbow(cfg.path(ELBOW_CSV), curve)
    diffs = second_differences(curve) if len(ks) >= 3 else []
    _dump(cfg.path(ELBOW_JSON), {"format": ELBOW_FORMAT, "algorithm": cfg.algorithm, "ks": list(curve.ks),
                                 "costs": list(curve.costs), "second_differences": diffs,
                                 "detected_k": detected})
    return {"ks": list(curve.ks), "costs": list(curve.costs), "second_differences": diffs, "detected_k": detected}


def stage_cluster(cfg):
    d1 = read_binary(cfg.path(D1)).values
    k = cfg.k
    if k is None:
        k = _load(cfg.path(ELBOW_JSON), ELBOW_FORMAT).get("detected_k")
        if k is None:
            raise ConfigurationError("elbow did not yield a k; pass --k")
    model = fit(d1, k, cfg.algorithm, cfg.init, derive_seed(cfg.seed, "cluster"), cfg.n_restarts)
    save_model(cfg.path(MODEL), model)
    return {"algorithm": model.algorithm, "k": model.k, "cost": model.final_cost, "n_iter": model.n_iter,
            "k_source": "override" if cfg.k is not None else "elbow"}


def _labels_for(model, d2):
    return assign(model.centroids, d2, model.metric)


def stage_preferences(cfg):
    model = load_model(cfg.path(MODEL))
    d2 = read_binary(cfg.path(D2)).values
    labels = _labels_for(model, d2)
    np.savetxt(cfg.path(LABELS), labels, fmt="%d")
    pattern = preference_patterns(labels, d2, model.k)
    emit_pattern_chart(pattern, cfg.output_dir)
    return {"cluster_sizes": list(pattern.cluster_sizes)}


def overlap_reports(model, data):
    """Overlap under both metrics; k-Means centroids are thresholded at 0.5 for the matching metric."""
    binary_centroids = model.centroids if model.algorithm == "kmodes" else (model.centroids >= 0.5).astype(np.int8)
    return [
        overlap_test(binary_centroids, data, "matching"),
        overlap_test(model.centroids, data, "squared_euclidean"),
    ]


def native_overlap(model, data):
    """Overlap report under the model's own distance (matching for kmodes, squared Euclidean for kmeans)."""
    return overlap_test(model.centroids, data, model.metric)


def overlap_comparison(d1, d2, k, seed, n_restarts=8):
    """Fit k-Modes (Cao) and k-Means on D1, then count overlapping pairs of each on D2."""
    kmodes = fit(d1, k, "kmodes", "cao", seed, n_restarts)
    kmeans = fit(d1, k, "kmeans", "random", seed, n_restarts)
    return {"kmodes": native_overlap(kmodes, d2), "kmeans": native_overlap(kmeans, d2)}


def stage_overlap(cfg):
    model = load_model(cfg.path(MODEL))
    d2 = read_binary(cfg.path(D2)).values
    reports = overlap_reports(model, d2)
    write_overlap(cfg.path(OVERLAP), reports)
    return {r.metric: {"pairs": [list(p) for p in r.pairs], "counts": [r.counts[p] for p in r.pairs]}
            for r in reports}


STAGE_FUNCS = {
    "ingest": stage_ingest,
    "train-rbm": stage_train_rbm,
    "impute": stage_impute,
    "hopkins": stage_hopkins,
    "elbow": stage_elbow,
    "cluster": stage_cluster,
    "preferences": stage_preferences,
    "overlap": stage_overlap,
}


def run_stage(name, cfg):
    """Run one stage against ``cfg.output_dir``; wraps failures in :class:`StageError`."""
    os.makedirs(cfg.output_dir, exist_ok=True)
    try:
        return STAGE_FUNCS[name](cfg)
    except (PrefclusterError, OSError, ValueError) as exc:
        if isinstance(exc, StageError):
            raise
        raise StageError(name, exc) from exc


def run_pipeline(cfg, stages=STAGES):
    """Run every stage in order and write ``manifest.json``; returns the manifest dict.

    On failure the manifest is still written, with ``status: incomplete`` and
    the failing stage, before the :class:`StageError` propagates.
    """
    manifest = {
        "format": MANIFEST_FORMAT,
        "tool_version": __version__,
        "config": cfg.to_dict(),
        "seeds": {s: derive_seed(cfg.seed, s) for s in STAGES},
        "status": "incomplete",
        "results": {},
        "timing_seconds": {},
    }
    os.makedirs(cfg.output_dir, exist_ok=True)
    try:
        for name in stages:
            t0 = time.perf_counter()
            log.info("stage %s", name)
            manifest["results"][name] = run_stage(name, cfg)
            manifest["timing_seconds"][name] = round(time.perf_counter() - t0, 3)
        manifest["status"] = "complete"
    except StageError as exc:
        manifest["failed_stage"] = exc.stage
        manifest["error"] = str(exc.cause)
        raise
    finally:
        _dump(cfg.path(MANIFEST), manifest)
    return manifest


def config_from_manifest(path):
    doc = _load(path, MANIFEST_FORMAT)
    return PipelineConfig(**doc["config"])
