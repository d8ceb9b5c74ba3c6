"""Density-based clustering: HDBSCAN with excess-of-mass extraction.

The pipeline is the standard one: core distances -> mutual-reachability
graph -> minimum spanning tree -> single-linkage hierarchy -> condensed
tree at min_cluster_size -> stability-based cluster selection. Points in
no selected cluster are outliers and get label -1. Everything is
deterministic; ties break toward the lowest point index.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

INF = float("inf")


@dataclass
class ClustererConfig:
    min_cluster_size: int = 5
    min_samples: int | None = None
    metric: str = "euclidean"
    selection: str = "eom"

    def __post_init__(self):
        if self.min_cluster_size < 2:
            raise ValueError("min_cluster_size must be >= 2")
        if self.metric != "euclidean":
            raise ValueError("only the euclidean metric is supported")
        if self.selection not in ("eom", "leaf"):
            raise ValueError("selection must be 'eom' or 'leaf'")
        if self.min_samples is None:
            self.min_samples = self.min_cluster_size
        if self.min_samples < 1:
            raise ValueError("min_samples must be >= 1")


@dataclass(frozen=True)
class Assignment:
    """Cluster labels for N points: -1 for outliers, 0..T-1 contiguous."""

    labels: tuple[int, ...]
    topic_count: int
    outlier_count: int

    def __post_init__(self):
        seen = sorted({l for l in self.labels if l >= 0})
        if seen != list(range(self.topic_count)):
            raise ValueError(f"labels are not contiguous 0..{self.topic_count - 1}: {seen}")
        n_out = sum(1 for l in self.labels if l == -1)
        if n_out != self.outlier_count:
            raise ValueError(f"outlier_count {self.outlier_count} != observed {n_out}")

    @property
    def degenerate(self) -> bool:
        """Fewer than two topics: the pairwise similarity term is undefined."""
        return self.topic_count < 2

    def members(self, label: int) -> list[int]:
        return [i for i, l in enumerate(self.labels) if l == label]

    def to_json(self) -> dict:
        return {"labels": list(self.labels), "T": self.topic_count, "outliers": self.outlier_count}

    @classmethod
    def from_json(cls, payload: dict) -> "Assignment":
        return cls(
            labels=tuple(int(l) for l in payload["labels"]),
            topic_count=int(payload["T"]),
            outlier_count=int(payload["outliers"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Assignment":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def _check_points(points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2:
        raise ValueError("points must be a 2-D array")
    if not np.isfinite(pts).all():
        raise ValueError("points contain non-finite values")
    return pts


def _pairwise_euclidean(points: np.ndarray) -> np.ndarray:
    sq = np.sum(points**2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (points @ points.T)
    np.maximum(d2, 0.0, out=d2)
    d = np.sqrt(d2)
    np.fill_diagonal(d, 0.0)
    return d


def core_distances(points: np.ndarray, min_samples: int) -> np.ndarray:
    """Distance from each point to its min_samples-th nearest other point."""
    pts = _check_points(points)
    n = pts.shape[0]
    if min_samples < 1:
        raise ValueError("min_samples must be >= 1")
    if n <= min_samples:
        raise ValueError(f"need more than min_samples={min_samples} points, got {n}")
    dist = _pairwise_euclidean(pts)
    # column min_samples of the row-sorted matrix skips the self distance 0
    part = np.partition(dist, min_samples, axis=1)
    return part[:, min_samples]


def _core_distances_with_self(dist: np.ndarray, min_samples: int) -> np.ndarray:
    """Core distance counting the point itself among its neighbors.

    This is the convention of the reference HDBSCAN implementations:
    min_samples=k means the k-th smallest entry of the distance row
    including the self distance 0.
    """
    k = min(min_samples - 1, dist.shape[0] - 1)
    if k <= 0:
        return np.zeros(dist.shape[0])
    part = np.partition(dist, k, axis=1)
    return part[:, k]


def _mutual_reachability(dist: np.ndarray, core: np.ndarray) -> np.ndarray:
    mr = np.maximum(dist, core[:, None])
    np.maximum(mr, core[None, :], out=mr)
    np.fill_diagonal(mr, 0.0)
    return mr


def _mst_prim(weights: np.ndarray) -> np.ndarray:
    """Dense Prim MST; returns (n-1, 3) rows (u, v, w). argmin tie-breaks low."""
    n = weights.shape[0]
    best = weights[0].copy()
    src = np.zeros(n, dtype=np.int64)
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    edges = np.empty((n - 1, 3), dtype=np.float64)
    for t in range(n - 1):
        masked = np.where(in_tree, np.inf, best)
        nxt = int(np.argmin(masked))
        edges[t, 0] = src[nxt]
        edges[t, 1] = nxt
        edges[t, 2] = best[nxt]
        in_tree[nxt] = True
        row = weights[nxt]
        better = (~in_tree) & (row < best)
        best[better] = row[better]
        src[better] = nxt
    return edges


class _UnionFind:
    """Union-find that assigns fresh linkage labels to merged components."""

    def __init__(self, n: int):
        self.parent = np.full(2 * n - 1, -1, dtype=np.int64)
        self.size = np.concatenate([np.ones(n, dtype=np.int64), np.zeros(n - 1, dtype=np.int64)])
        self.next_label = n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != -1:
            root = self.parent[root]
        while self.parent[x] != -1:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> int:
        new = self.next_label
        self.next_label += 1
        self.parent[a] = new
        self.parent[b] = new
        self.size[new] = self.size[a] + self.size[b]
        return new


def _single_linkage(mst_edges: np.ndarray, n: int) -> np.ndarray:
    """Hierarchy rows (left, right, dist, size) with labels n..2n-2."""
    a = np.minimum(mst_edges[:, 0], mst_edges[:, 1])
    b = np.maximum(mst_edges[:, 0], mst_edges[:, 1])
    w = mst_edges[:, 2]
    order = np.lexsort((b, a, w))
    uf = _UnionFind(n)
    hierarchy = np.empty((n - 1, 4), dtype=np.float64)
    for t, e in enumerate(order):
        ra = uf.find(int(a[e]))
        rb = uf.find(int(b[e]))
        new = uf.union(ra, rb)
        hierarchy[t] = (ra, rb, w[e], uf.size[new])
    return hierarchy


def _bfs_from_hierarchy(hierarchy: np.ndarray, start: int, n: int) -> list[int]:
    out: list[int] = []
    queue = deque([start])
    while queue:
        node = queue.popleft()
        out.append(node)
        if node >= n:
            row = hierarchy[node - n]
            queue.append(int(row[0]))
            queue.append(int(row[1]))
    return out


def _condense_tree(hierarchy: np.ndarray, min_cluster_size: int) -> list[tuple[int, int, float, int]]:
    """Condensed tree rows (parent, child, lambda, child_size).

    Clusters are labeled n, n+1, ... with n the number of points; child
    entries < n are points falling out of their parent cluster at the
    given lambda = 1/distance.
    """
    n = hierarchy.shape[0] + 1
    root = 2 * n - 2
    relabel = np.full(2 * n - 1, -1, dtype=np.int64)
    relabel[root] = n
    next_label = n + 1
    ignore = np.zeros(2 * n - 1, dtype=bool)
    rows: list[tuple[int, int, float, int]] = []

    def node_size(node: int) -> int:
        return 1 if node < n else int(hierarchy[node - n][3])

    for node in _bfs_from_hierarchy(hierarchy, root, n):
        if ignore[node] or node < n:
            continue
        left, right, dist, _ = hierarchy[node - n]
        left, right = int(left), int(right)
        lam = 1.0 / dist if dist > 0.0 else INF
        lsz, rsz = node_size(left), node_size(right)
        parent_label = int(relabel[node])

        if lsz >= min_cluster_size and rsz >= min_cluster_size:
            relabel[left] = next_label
            next_label += 1
            rows.append((parent_label, int(relabel[left]), lam, lsz))
            relabel[right] = next_label
            next_label += 1
            rows.append((parent_label, int(relabel[right]), lam, rsz))
        elif lsz < min_cluster_size and rsz < min_cluster_size:
            for side in (left, right):
                for sub in _bfs_from_hierarchy(hierarchy, side, n):
                    if sub < n:
                        rows.append((parent_label, sub, lam, 1))
                    ignore[sub] = True
        else:
            keep, drop = (right, left) if lsz < min_cluster_size else (left, right)
            relabel[keep] = parent_label
            for sub in _bfs_from_hierarchy(hierarchy, drop, n):
                if sub < n:
                    rows.append((parent_label, sub, lam, 1))
                ignore[sub] = True
    return rows


def _compute_stability(rows: list[tuple[int, int, float, int]], n: int) -> dict[int, float]:
    births: dict[int, float] = {n: 0.0}
    for parent, child, lam, _size in rows:
        if child >= n:
            births[child] = lam
    stability: dict[int, float] = {c: 0.0 for c in births}
    for parent, _child, lam, size in rows:
        stability[parent] += (lam - births[parent]) * size
    return stability


def _cluster_children(rows: list[tuple[int, int, float, int]], n: int) -> dict[int, list[int]]:
    children: dict[int, list[int]] = {}
    for parent, child, _lam, _size in rows:
        if child >= n:
            children.setdefault(parent, []).append(child)
    return children


def _select_eom(rows: list[tuple[int, int, float, int]], stability: dict[int, float], n: int) -> set[int]:
    children = _cluster_children(rows, n)
    node_list = sorted(stability.keys(), reverse=True)[:-1]  # root excluded
    is_cluster = {c: True for c in node_list}
    stash = dict(stability)
    for node in node_list:
        subtree = sum(stash[c] for c in children.get(node, []))
        if subtree > stash[node]:
            is_cluster[node] = False
            stash[node] = subtree
        else:
            queue = deque(children.get(node, []))
            while queue:
                sub = queue.popleft()
                is_cluster[sub] = False
                queue.extend(children.get(sub, []))
    return {c for c, keep in is_cluster.items() if keep}


def _select_leaf(rows: list[tuple[int, int, float, int]], n: int) -> set[int]:
    children = _cluster_children(rows, n)
    clusters = {child for _p, child, _l, _s in rows if child >= n} | {n}
    # the root is never selected, so a tree with no splits selects nothing
    return {c for c in clusters if not children.get(c) and c != n}


def _labels_from_selection(
    rows: list[tuple[int, int, float, int]], selected: set[int], n: int
) -> np.ndarray:
    parent_of: dict[int, int] = {}
    point_parent: dict[int, int] = {}
    for parent, child, _lam, _size in rows:
        if child >= n:
            parent_of[child] = parent
        else:
            point_parent[child] = parent
    raw = np.full(n, -1, dtype=np.int64)
    for point, cluster in point_parent.items():
        c = cluster
        while c not in selected and c in parent_of:
            c = parent_of[c]
        if c in selected:
            raw[point] = c
    return raw


def cluster_hdbscan(points: np.ndarray, config: ClustererConfig | None = None) -> Assignment:
    """Cluster points; outliers get -1. Degenerate inputs yield all outliers.

    Core distances use the conventional counting that includes the point
    itself, which is what the reference implementations do; the public
    `core_distances` helper (self excluded) relates by an offset of one.
    """
    config = config or ClustererConfig()
    pts = _check_points(points)
    n = pts.shape[0]
    if n < config.min_cluster_size or n < 2:
        labels = tuple([-1] * n)
        return Assignment(labels=labels, topic_count=0, outlier_count=n)

    dist = _pairwise_euclidean(pts)
    core = _core_distances_with_self(dist, int(config.min_samples))
    mreach = _mutual_reachability(dist, core)
    mst = _mst_prim(mreach)
    hierarchy = _single_linkage(mst, n)
    rows = _condense_tree(hierarchy, config.min_cluster_size)
    if config.selection == "eom":
        stability = _compute_stability(rows, n)
        selected = _select_eom(rows, stability, n)
    else:
        selected = _select_leaf(rows, n)
    raw = _labels_from_selection(rows, selected, n)

    # contiguous labels, numbered by each cluster's lowest point index
    order: dict[int, int] = {}
    for idx in range(n):
        c = int(raw[idx])
        if c != -1 and c not in order:
            order[c] = len(order)
    labels = tuple(order[int(c)] if c != -1 else -1 for c in raw)
    outliers = sum(1 for l in labels if l == -1)
    return Assignment(labels=labels, topic_count=len(order), outlier_count=outliers)
