"""Independent reference computations the tests check the engine against.

Everything here is deliberately written the slow, obvious way (full DP
matrices, double loops) and never calls into the code paths under test.
"""
from __future__ import annotations

import numpy as np


def edit_distance_full_dp(a: str, b: str) -> int:
    """Full-matrix Wagner-Fischer edit distance."""
    m, n = len(a), len(b)
    table = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m + 1):
        table[i][0] = i
    for j in range(n + 1):
        table[0][j] = j
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            table[i][j] = min(table[i - 1][j] + 1, table[i][j - 1] + 1, table[i - 1][j - 1] + cost)
    return table[m][n]


def greedy_match_double_loop(vecs_a: np.ndarray, vecs_b: np.ndarray) -> float:
    """Mean over rows of vecs_a of the best dot product against vecs_b."""
    total = 0.0
    for row_a in np.asarray(vecs_a, dtype=np.float64):
        best = -np.inf
        for row_b in np.asarray(vecs_b, dtype=np.float64):
            best = max(best, float(np.dot(row_a, row_b)))
        total += best
    return total / vecs_a.shape[0]


def mean_pairwise_double_loop(labels, sim) -> float:
    """Plain double loop over unordered pairs."""
    t = len(labels)
    total = 0.0
    count = 0
    for i in range(t):
        for j in range(t):
            if i < j:
                total += sim(labels[i], labels[j])
                count += 1
    return total / count


def contingency_double_loop(labels_a, labels_b) -> dict[tuple[int, int], int]:
    counts: dict[tuple[int, int], int] = {}
    for i in range(len(labels_a)):
        for key in [(labels_a[i], labels_b[i])]:
            counts[key] = counts.get(key, 0) + 1
    return counts


def cosine_ranking_brute_force(member_vectors: np.ndarray) -> list[int]:
    """Indices of members sorted by cosine to the mean vector, descending."""
    centroid = member_vectors.mean(axis=0)
    centroid = centroid / np.linalg.norm(centroid)
    sims = []
    for i, row in enumerate(member_vectors):
        sims.append((-float(np.dot(row, centroid)), i))
    return [i for _s, i in sorted(sims)]
