import json
import re
import xml.etree.ElementTree as ET
from itertools import combinations

import numpy as np
import pytest

from prefcluster.analysis import (
    emit_pattern_chart,
    overlap_test,
    pattern_svg,
    preference_patterns,
    read_pattern,
    write_overlap,
)
from prefcluster.errors import AnalysisError, ConfigurationError

SVG = "{http://www.w3.org/2000/svg}"


class TestPreferences:
    def test_two_of_three(self):
        d2 = np.zeros((3, 10), dtype=int)
        d2[:2, 7] = 1
        p = preference_patterns([0, 0, 0], d2, 1)
        assert p.values[0, 7] == pytest.approx(2 / 3, abs=0)

    def test_bounds(self):
        d2 = np.ones((4, 3), dtype=int)
        d2[:, 0] = 0
        p = preference_patterns([0, 1, 0, 1], d2, 2)
        np.testing.assert_array_equal(p.values[:, 1:], 1.0)
        np.testing.assert_array_equal(p.values[:, 0], 0.0)

    def test_empty_cluster(self):
        with pytest.raises(AnalysisError):
            preference_patterns([0, 0], np.zeros((2, 2), dtype=int), 2)

    def test_missing_marker(self):
        with pytest.raises(AnalysisError):
            preference_patterns([0], np.array([[1, -1]]), 1)

    def test_exact_ratios_random(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            k = int(rng.integers(1, 5))
            n = int(rng.integers(k, 40))
            labels = np.concatenate([np.arange(k), rng.integers(0, k, n - k)])
            d2 = rng.integers(0, 2, (n, 6))
            p = preference_patterns(labels, d2, k)
            assert sum(p.cluster_sizes) == n
            assert ((p.values >= 0) & (p.values <= 1)).all()
            for c in range(k):
                counts = p.values[c] * p.cluster_sizes[c]
                np.testing.assert_allclose(counts, np.rint(counts), atol=1e-9)
                np.testing.assert_array_equal(np.rint(counts), (d2[labels == c] == 1).sum(axis=0))


class TestOverlap:
    def test_constructed_tie(self):
        r = overlap_test(np.array([[0, 0], [1, 1]]), np.array([[0, 1]]), "matching")
        assert r.pairs == [(0, 1)] and r.counts[(0, 1)] == 1

    def test_no_tie(self):
        C = np.array([[0, 0, 0], [1, 1, 1], [1, 0, 1]])
        r = overlap_test(C, np.array([[0, 0, 0]]), "matching")
        assert r.pairs == []

    def test_three_identical_centroids(self):
        C = np.zeros((3, 4), dtype=int)
        r = overlap_test(C, np.array([[1, 0, 1, 0]]), "matching")
        assert r.pairs == [(0, 1), (0, 2), (1, 2)]

    def test_relative_tolerance_for_fractional_centroids(self):
        C = np.array([[0.0], [1.0]])
        r = overlap_test(C, np.array([[0.5], [0.2]]), "squared_euclidean")
        assert r.pairs == [(0, 1)] and r.counts[(0, 1)] == 1
        assert r.relative

    def test_bad_metric(self):
        with pytest.raises(ConfigurationError):
            overlap_test(np.zeros((2, 2)), np.zeros((1, 2)), "cosine")

    def test_monotone_in_tolerance_and_relabel_symmetric(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            k = int(rng.integers(2, 5))
            C = rng.integers(0, 2, (k, 6))
            X = rng.integers(0, 2, (30, 6))
            tols = sorted(rng.uniform(0, 3, 3))
            reports = [set(overlap_test(C, X, "matching", t).pairs) for t in [0.0] + tols]
            assert all(a <= b for a, b in zip(reports, reports[1:]))

            perm = rng.permutation(k)
            base = overlap_test(C, X, "matching")
            moved = overlap_test(C[perm], X, "matching")
            # centroid perm[i] now sits at index i
            inverse = {int(old): new for new, old in enumerate(perm)}
            remapped = {tuple(sorted((inverse[a], inverse[b]))): n for (a, b), n in base.counts.items()}
            assert moved.counts == remapped

    def test_brute_force_counts(self):
        rng = np.random.default_rng(3)
        C = rng.integers(0, 2, (3, 5))
        X = rng.integers(0, 2, (200, 5))
        expected = {}
        for x in X:
            d = [int((x != c).sum()) for c in C]
            tied = [i for i in range(3) if d[i] == min(d)]
            for pair in combinations(tied, 2):
                expected[pair] = expected.get(pair, 0) + 1
        assert overlap_test(C, X, "matching").counts == expected

    def test_json(self, tmp_path):
        r = overlap_test(np.array([[0, 0], [1, 1]]), np.array([[0, 1], [1, 0]]), "matching")
        write_overlap(tmp_path / "o.json", [r])
        doc = json.loads((tmp_path / "o.json").read_text())
        assert doc == [{"metric": "matching", "tolerance": 0.0, "relative": False, "pairs": [[0, 1]], "counts": [2]}]


def random_pattern(k=3, n_items=100, seed=0):
    rng = np.random.default_rng(seed)
    labels = np.concatenate([np.arange(k), rng.integers(0, k, 300)])
    return preference_patterns(labels, rng.integers(0, 2, (len(labels), n_items)), k)


class TestChart:
    def test_structure(self, tmp_path):
        csv_path, svg_path = emit_pattern_chart(random_pattern(), tmp_path)
        root = ET.parse(svg_path).getroot()
        assert root.get("width") == "1000" and root.get("height") == "400"
        lines = root.findall(f"{SVG}polyline")
        assert len(lines) == 3
        assert all(len(pl.get("points").split()) == 100 for pl in lines)
        texts = [t.text for t in root.iter(f"{SVG}text")]
        assert {"Cluster 0", "Cluster 1", "Cluster 2", "Joke", "Preference"} <= set(texts)

    def test_constant_pattern_is_horizontal_midline(self):
        d2 = np.zeros((2, 20), dtype=int)
        d2[0] = 1
        p = preference_patterns([0, 0], d2, 1)
        svg = pattern_svg(p)
        pts = re.search(r'points="([^"]+)"', svg).group(1).split()
        ys = {float(pt.split(",")[1]) for pt in pts}
        assert len(ys) == 1
        top, plot_h = 30, 400 - 30 - 50
        assert ys.pop() == pytest.approx(top + plot_h / 2)

    def test_csv_roundtrip_exact(self, tmp_path):
        p = random_pattern(seed=4)
        csv_path, _ = emit_pattern_chart(p, tmp_path)
        back = read_pattern(csv_path)
        assert back.cluster_sizes == p.cluster_sizes
        np.testing.assert_array_equal(back.values, p.values)
        header = open(csv_path).readline().strip().split(",")
        assert header[:2] == ["cluster", "size"] and len(header) == 102
        assert re.fullmatch(r"\d\.\d{6}", open(csv_path).readlines()[1].split(",")[2])

    def test_unwritable(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(AnalysisError):
            emit_pattern_chart(random_pattern(), blocker / "sub")
