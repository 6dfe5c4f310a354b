"""Cluster interpretation: per-cluster preference patterns and the overlap test."""

import json
import os
from dataclasses import dataclass, field
from itertools import combinations
from xml.sax.saxutils import escape

import numpy as np

from .clustering import METRICS, pairwise
from .errors import AnalysisError, ConfigurationError, ShapeError

REL_TOL = 1e-9
ABS_TOL_AT_ZERO = 1e-12

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


@dataclass(frozen=True)
class PreferencePattern:
    values: np.ndarray
    cluster_sizes: tuple
    like_counts: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def k(self):
        return self.values.shape[0]

    @property
    def n_items(self):
        return self.values.shape[1]


@dataclass
class OverlapReport:
    metric: str
    tolerance: float
    relative: bool
    pairs: list
    counts: dict

    @property
    def n_pairs(self):
        return len(self.pairs)

    def to_dict(self):
        return {
            "metric": self.metric,
            "tolerance": self.tolerance,
            "relative": self.relative,
            "pairs": [list(p) for p in self.pairs],
            "counts": [self.counts[p] for p in self.pairs],
        }


def preference_patterns(labels, d2, k):
    """Fraction of each cluster's readers who like each joke."""
    X = np.asarray(d2)
    labels = np.asarray(labels)
    if X.ndim != 2 or labels.shape != (X.shape[0],):
        raise ShapeError(f"labels {labels.shape} do not match data {X.shape}")
    if (X == -1).any():
        raise AnalysisError("preference patterns need a fully imputed matrix (found -1 entries)")
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise AnalysisError(f"labels must lie in [0, {k})")
    sizes = np.bincount(labels, minlength=k)
    if (sizes == 0).any():
        raise AnalysisError(f"clusters {np.flatnonzero(sizes == 0).tolist()} are empty")
    likes = np.zeros((k, X.shape[1]), dtype=np.int64)
    np.add.at(likes, labels, (X == 1).astype(np.int64))
    values = likes / sizes[:, None]
    return PreferencePattern(values, tuple(int(s) for s in sizes), likes)


def overlap_test(centroids, data, metric, tolerance=None):
    """Find cluster pairs that some point is (near-)equidistant to at its minimum distance.

    With ``tolerance=None`` the matching metric uses exact ties and squared
    Euclidean uses a per-point tolerance of ``1e-9 * dmin`` (``1e-12`` when
    ``dmin`` is 0).  An explicit tolerance is absolute.
    """
    if metric not in METRICS:
        raise ConfigurationError(f"unknown metric {metric!r}")
    if tolerance is not None and tolerance < 0:
        raise ConfigurationError("tolerance must be non-negative")
    dists = pairwise(data, centroids, metric).astype(np.float64)
    dmin = dists.min(axis=1, keepdims=True)
    relative = tolerance is None and metric == "squared_euclidean"
    if tolerance is None:
        tol = np.where(dmin > 0, REL_TOL * dmin, ABS_TOL_AT_ZERO) if relative else 0.0
        tolerance = REL_TOL if relative else 0.0
    else:
        tol = tolerance
    tied = (dists - dmin) <= tol
    counts = {}
    for row in np.flatnonzero(tied.sum(axis=1) >= 2):
        for pair in combinations(np.flatnonzero(tied[row]).tolist(), 2):
            counts[pair] = counts.get(pair, 0) + 1
    pairs = sorted(counts)
    return OverlapReport(metric, float(tolerance), relative, pairs, {p: counts[p] for p in pairs})


def write_pattern(path, pattern):
    """Delimited export: cluster id, cluster size, then 6-decimal values per item."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("cluster,size," + ",".join(f"item{j + 1}" for j in range(pattern.n_items)) + "\n")
        for c in range(pattern.k):
            vals = ",".join(f"{v:.6f}" for v in pattern.values[c])
            fh.write(f"{c},{pattern.cluster_sizes[c]},{vals}\n")


def read_pattern(path):
    """Parse :func:`write_pattern` output, recovering the exact count ratios.

    A 6-decimal value is within 5e-7 of ``likes / size``, so rounding
    ``value * size`` recovers the like count whenever size < 10**6.
    """
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    sizes = rows[:, 1].astype(np.int64)
    likes = np.rint(rows[:, 2:] * sizes[:, None]).astype(np.int64)
    return PreferencePattern(likes / sizes[:, None], tuple(int(s) for s in sizes), likes)


def pattern_svg(pattern, width=1000, height=400, title="Preference patterns"):
    left, right, top, bottom = 60, 130, 30, 50
    pw, ph = width - left - right, height - top - bottom
    n = pattern.n_items

    def sx(j):
        return left + (pw * (j - 1) / (n - 1) if n > 1 else pw / 2)

    def sy(v):
        return top + ph * (1.0 - v)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<line class="axis" x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line class="axis" x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
    ]
    for v in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = sy(v)
        out.append(f'<line x1="{left - 4}" y1="{y:.2f}" x2="{left}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{y + 4:.2f}" text-anchor="end" font-size="11">{v:.2f}</text>')
    ticks = sorted({1, n, *range(10, n + 1, 10)}) if n > 1 else [1]
    for j in ticks:
        x = sx(j)
        out.append(f'<line x1="{x:.2f}" y1="{top + ph}" x2="{x:.2f}" y2="{top + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{top + ph + 17}" text-anchor="middle" font-size="11">{j}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 10}" text-anchor="middle" font-size="12">Joke</text>')
    out.append(f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 16 {top + ph / 2:.1f})">Preference</text>')
    for c in range(pattern.k):
        colour = PALETTE[c % len(PALETTE)]
        pts = " ".join(f"{sx(j + 1):.2f},{sy(v):.2f}" for j, v in enumerate(pattern.values[c]))
        out.append(f'<polyline class="cluster" data-cluster="{c}" fill="none" stroke="{colour}" '
                   f'stroke-width="1.5" points="{pts}"/>')
        ly = top + 10 + 18 * c
        lx = left + pw + 15
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly + 4}" font-size="12">Cluster {c}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_pattern_chart(pattern, destination, stem="preferences", **svg_kwargs):
    """Write ``<stem>.csv`` and ``<stem>.svg`` into ``destination``; returns both paths."""
    try:
        os.makedirs(destination, exist_ok=True)
        csv_path = os.path.join(destination, f"{stem}.csv")
        svg_path = os.path.join(destination, f"{stem}.svg")
        write_pattern(csv_path, pattern)
        with open(svg_path, "w", encoding="utf-8") as fh:
            fh.write(pattern_svg(pattern, **svg_kwargs))
    except OSError as exc:
        raise AnalysisError(f"cannot write chart to {destination}: {exc}") from exc
    return csv_path, svg_path


def write_overlap(path, reports):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([r.to_dict() for r in reports], fh, indent=2)
