"""Independent brute-force references used by the unit and acceptance tests."""

import itertools
import math

import numpy as np


def all_binary(d):
    return np.array(list(itertools.product((0, 1), repeat=d)), dtype=np.int8)


def best_binary_centroid_cost(rows):
    """Minimum total Hamming distance from ``rows`` to any {0,1}^d point."""
    return min(int((rows != c).sum()) for c in all_binary(rows.shape[1]))


def brute_kmodes_optimum(X, k=2):
    """Exact minimum matching cost over all partitions into k non-empty clusters."""
    best = None
    for labels in itertools.product(range(k), repeat=len(X)):
        labels = np.array(labels)
        if len(set(labels.tolist())) < k:
            continue
        cost = sum(best_binary_centroid_cost(X[labels == c]) for c in range(k))
        if best is None or cost < best[0]:
            best = (cost, labels)
    return best


def brute_kmeans_1d(x, k=2):
    best = None
    for labels in itertools.product(range(k), repeat=len(x)):
        labels = np.array(labels)
        if len(set(labels.tolist())) < k:
            continue
        cents = [x[labels == c].mean() for c in range(k)]
        cost = sum(((x[labels == c] - cents[c]) ** 2).sum() for c in range(k))
        if best is None or cost < best[0]:
            best = (cost, sorted(cents))
    return best


def rbm_joint_table(W, a, b):
    """Unnormalised exp(-E(v, h)) for every binary (v, h) of a small RBM."""
    table = {}
    for v in itertools.product((0, 1), repeat=len(a)):
        for h in itertools.product((0, 1), repeat=len(b)):
            va, ha = np.array(v, float), np.array(h, float)
            table[v, h] = math.exp(a @ va + b @ ha + ha @ W @ va)
    return table


def exact_conditionals(W, a, b):
    """Exact P(h_j=1|v), P(v_i=1|h) and visible marginals by enumeration."""
    table = rbm_joint_table(W, a, b)
    vs = list(itertools.product((0, 1), repeat=len(a)))
    hs = list(itertools.product((0, 1), repeat=len(b)))
    p_h = {}
    for v in vs:
        z = sum(table[v, h] for h in hs)
        p_h[v] = [sum(table[v, h] for h in hs if h[j]) / z for j in range(len(b))]
    p_v = {}
    for h in hs:
        z = sum(table[v, h] for v in vs)
        p_v[h] = [sum(table[v, h] for v in vs if v[i]) / z for i in range(len(a))]
    z = sum(table.values())
    marginals = [sum(val for (v, _), val in table.items() if v[i]) / z for i in range(len(a))]
    return p_h, p_v, marginals
