"""Manifold dimensionality reduction for clustering, UMAP style.

The construction is the standard one: exact k-nearest-neighbor graph
under the configured metric, per-point bandwidth calibration (binary
search so each point's fuzzy neighborhood has cardinality log2(k)),
fuzzy union symmetrization, then stochastic attraction/repulsion layout
optimization with negative sampling. Every random draw comes from the
config seed, and the epoch loop is vectorized but fixed-order, so output
is bitwise stable run to run.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Protocol

import numpy as np
import scipy.sparse as sp
from scipy.optimize import curve_fit

SMOOTH_K_TOLERANCE = 1e-5
MIN_K_DIST_SCALE = 1e-3
_KNN_CHUNK = 512
_SPECTRAL_MAX_N = 1500


@dataclass
class ReducerConfig:
    n_neighbors: int = 5
    n_components: int = 5
    min_dist: float = 0.0
    metric: str = "cosine"
    seed: int = 42
    n_epochs: int = 500
    learning_rate: float = 1.0
    negative_sample_rate: int = 5
    repulsion_strength: float = 1.0
    spread: float = 1.0
    init: str = "auto"  # auto | spectral | random

    def __post_init__(self):
        if self.n_neighbors < 2:
            raise ValueError("n_neighbors must be >= 2")
        if self.n_components < 1:
            raise ValueError("n_components must be >= 1")
        if self.metric not in ("cosine", "euclidean"):
            raise ValueError("metric must be 'cosine' or 'euclidean'")
        if self.min_dist < 0:
            raise ValueError("min_dist must be >= 0")
        if self.init not in ("auto", "spectral", "random"):
            raise ValueError("init must be 'auto', 'spectral', or 'random'")


class Reducer(Protocol):
    """Pluggable reducer so tests can swap in PCA for the stochastic layout."""

    def fit_transform(self, embeddings: np.ndarray) -> np.ndarray: ...


def _exact_knn(X: np.ndarray, k: int, metric: str) -> tuple[np.ndarray, np.ndarray]:
    """Exact kNN including each point itself as its first neighbor."""
    n = X.shape[0]
    if metric == "cosine":
        norms = np.linalg.norm(X, axis=1, keepdims=True)
        if (norms == 0).any():
            raise ValueError("zero-norm row is invalid under the cosine metric")
        Xq = X / norms
    else:
        Xq = X
        sq = np.sum(Xq**2, axis=1)
    indices = np.empty((n, k), dtype=np.int64)
    dists = np.empty((n, k), dtype=np.float64)
    for start in range(0, n, _KNN_CHUNK):
        stop = min(start + _KNN_CHUNK, n)
        if metric == "cosine":
            d = 1.0 - Xq[start:stop] @ Xq.T
        else:
            d = sq[start:stop, None] + sq[None, :] - 2.0 * (Xq[start:stop] @ Xq.T)
            np.maximum(d, 0.0, out=d)
            np.sqrt(d, out=d)
        d[np.arange(stop - start), np.arange(start, stop)] = -1.0  # self first
        part = np.argpartition(d, k - 1, axis=1)[:, :k]
        part_d = np.take_along_axis(d, part, axis=1)
        order = np.lexsort((part, part_d), axis=1)
        indices[start:stop] = np.take_along_axis(part, order, axis=1)
        dists[start:stop] = np.take_along_axis(part_d, order, axis=1)
    np.maximum(dists, 0.0, out=dists)
    return indices, dists


def _smooth_knn_calibration(dists: np.ndarray, k: int, n_iter: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Per-point bandwidth sigma and connectivity offset rho.

    sigma_i solves sum_j exp(-max(0, d_ij - rho_i) / sigma_i) = log2(k)
    by binary search; rho_i is the distance to the nearest distinct
    neighbor, so each point is fully connected at local scale.
    """
    n = dists.shape[0]
    target = np.log2(k)
    rho = np.zeros(n)
    sigma = np.zeros(n)
    mean_all = float(np.mean(dists))
    for i in range(n):
        row = dists[i]
        nonzero = row[row > 0.0]
        if nonzero.size > 0:
            rho[i] = nonzero[0]
        lo, hi, mid = 0.0, np.inf, 1.0
        for _ in range(n_iter):
            psum = np.sum(np.exp(-np.maximum(row[1:] - rho[i], 0.0) / mid))
            if abs(psum - target) < SMOOTH_K_TOLERANCE:
                break
            if psum > target:
                hi = mid
                mid = (lo + hi) / 2.0
            else:
                lo = mid
                mid = mid * 2.0 if hi == np.inf else (lo + hi) / 2.0
        sigma[i] = mid
        floor = MIN_K_DIST_SCALE * (float(np.mean(row)) if rho[i] > 0.0 else mean_all)
        if sigma[i] < floor:
            sigma[i] = floor
    return sigma, rho


def _fuzzy_graph(indices: np.ndarray, dists: np.ndarray, sigma: np.ndarray, rho: np.ndarray) -> sp.csr_matrix:
    n, k = indices.shape
    rows = np.repeat(np.arange(n), k)
    cols = indices.ravel()
    d = dists.ravel()
    vals = np.exp(-np.maximum(d - np.repeat(rho, k), 0.0) / np.repeat(sigma, k))
    vals[cols == rows] = 0.0
    graph = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    transpose = graph.T.tocsr()
    product = graph.multiply(transpose)
    return (graph + transpose - product).tocsr()  # fuzzy set union


@lru_cache(maxsize=8)
def _curve_params(spread: float, min_dist: float) -> tuple[float, float]:
    """Fit 1/(1 + a x^{2b}) to the target membership falloff curve."""

    def curve(x, a, b):
        return 1.0 / (1.0 + a * x ** (2 * b))

    xv = np.linspace(0, spread * 3, 300)
    yv = np.zeros_like(xv)
    yv[xv < min_dist] = 1.0
    yv[xv >= min_dist] = np.exp(-(xv[xv >= min_dist] - min_dist) / spread)
    params, _ = curve_fit(curve, xv, yv)
    return float(params[0]), float(params[1])


def _spectral_init(graph: sp.csr_matrix, dim: int, rng: np.random.Generator) -> np.ndarray:
    n = graph.shape[0]
    deg = np.asarray(graph.sum(axis=1)).ravel()
    deg[deg == 0.0] = 1.0
    inv_sqrt = 1.0 / np.sqrt(deg)
    lap = np.eye(n) - (graph.toarray() * inv_sqrt[:, None]) * inv_sqrt[None, :]
    _vals, vecs = np.linalg.eigh(lap)
    comp = vecs[:, 1 : dim + 1]
    if comp.shape[1] < dim:
        comp = np.hstack([comp, rng.normal(0, 1.0, size=(n, dim - comp.shape[1]))])
    # canonical sign: largest-magnitude coordinate positive
    for j in range(comp.shape[1]):
        pivot = np.argmax(np.abs(comp[:, j]))
        if comp[pivot, j] < 0:
            comp[:, j] = -comp[:, j]
    peak = np.abs(comp).max()
    if peak == 0.0:
        return rng.uniform(-10.0, 10.0, size=(n, dim))
    Y = comp * (10.0 / peak)
    return Y + rng.normal(0.0, 1e-4, size=Y.shape)


def _optimize_layout(
    Y: np.ndarray,
    head: np.ndarray,
    tail: np.ndarray,
    epochs_per_sample: np.ndarray,
    config: ReducerConfig,
    a: float,
    b: float,
    rng: np.random.Generator,
) -> np.ndarray:
    n = Y.shape[0]
    gamma = config.repulsion_strength
    eps = epochs_per_sample
    epoch_of_next = eps.copy()
    eps_negative = eps / config.negative_sample_rate
    epoch_of_next_negative = eps_negative.copy()

    for epoch in range(config.n_epochs):
        alpha = config.learning_rate * (1.0 - epoch / config.n_epochs)
        active = epoch_of_next <= epoch
        if not active.any():
            continue
        h = head[active]
        t = tail[active]
        diff = Y[h] - Y[t]
        d2 = np.einsum("ij,ij->i", diff, diff)
        d2_safe = np.where(d2 > 0.0, d2, 1.0)
        coef = np.where(d2 > 0.0, (-2.0 * a * b * d2_safe ** (b - 1.0)) / (a * d2_safe**b + 1.0), 0.0)
        grad = np.clip(coef[:, None] * diff, -4.0, 4.0) * alpha
        np.add.at(Y, h, grad)
        np.add.at(Y, t, -grad)
        epoch_of_next[active] += eps[active]

        n_neg = np.floor((epoch - epoch_of_next_negative[active]) / eps_negative[active]).astype(np.int64)
        np.maximum(n_neg, 0, out=n_neg)
        total = int(n_neg.sum())
        if total > 0:
            rep_h = np.repeat(h, n_neg)
            neg_t = rng.integers(0, n, size=total)
            diff = Y[rep_h] - Y[neg_t]
            d2 = np.einsum("ij,ij->i", diff, diff)
            d2_safe = np.where(d2 > 0.0, d2, 1.0)
            coef = np.where(d2 > 0.0, (2.0 * gamma * b) / ((0.001 + d2_safe) * (a * d2_safe**b + 1.0)), 0.0)
            grad = np.where(coef[:, None] > 0.0, np.clip(coef[:, None] * diff, -4.0, 4.0), 4.0)
            grad[rep_h == neg_t] = 0.0  # a point is never its own negative
            np.add.at(Y, rep_h, grad * alpha)
        epoch_of_next_negative[active] += n_neg * eps_negative[active]
    return Y


def fit_reduce(embeddings: np.ndarray, config: ReducerConfig | None = None) -> np.ndarray:
    """Project an N x D embedding matrix to N x n_components.

    Deterministic for fixed (embeddings, config): the kNN graph is exact,
    and the layout RNG is seeded from config.seed.
    """
    config = config or ReducerConfig()
    X = np.asarray(embeddings, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("embeddings must be a 2-D matrix")
    if not np.isfinite(X).all():
        raise ValueError("embeddings contain non-finite values")
    n, d = X.shape
    if n <= config.n_neighbors:
        raise ValueError(f"need more than n_neighbors={config.n_neighbors} rows, got {n}")
    if d < config.n_components:
        raise ValueError(f"input dim {d} smaller than n_components={config.n_components}")

    indices, dists = _exact_knn(X, config.n_neighbors, config.metric)
    sigma, rho = _smooth_knn_calibration(dists, config.n_neighbors)
    graph = _fuzzy_graph(indices, dists, sigma, rho)

    # edges sampled too rarely to matter within the epoch budget are dropped
    data = graph.data.copy()
    data[data < data.max() / float(config.n_epochs)] = 0.0
    graph = sp.csr_matrix((data, graph.indices, graph.indptr), shape=graph.shape)
    graph.eliminate_zeros()
    coo = graph.tocoo()
    order = np.lexsort((coo.col, coo.row))
    head = coo.row[order].astype(np.int64)
    tail = coo.col[order].astype(np.int64)
    weights = coo.data[order]

    a, b = _curve_params(config.spread, config.min_dist)
    rng = np.random.default_rng(config.seed)
    use_spectral = config.init == "spectral" or (config.init == "auto" and n <= _SPECTRAL_MAX_N)
    if use_spectral:
        Y = _spectral_init(graph, config.n_components, rng)
    else:
        Y = rng.uniform(-10.0, 10.0, size=(n, config.n_components))

    if weights.size > 0:
        epochs_per_sample = weights.max() / weights * 1.0
        Y = _optimize_layout(Y, head, tail, epochs_per_sample, config, a, b, rng)
    return np.ascontiguousarray(Y, dtype=np.float32)


class UmapReducer:
    def __init__(self, config: ReducerConfig | None = None):
        self.config = config or ReducerConfig()

    def fit_transform(self, embeddings: np.ndarray) -> np.ndarray:
        return fit_reduce(embeddings, self.config)


class PcaReducer:
    """Deterministic PCA; a drop-in substitute that isolates clustering
    tests from layout stochasticity."""

    def __init__(self, n_components: int = 5):
        self.n_components = n_components

    def fit_transform(self, embeddings: np.ndarray) -> np.ndarray:
        X = np.asarray(embeddings, dtype=np.float64)
        if X.shape[1] < self.n_components:
            raise ValueError("input dim smaller than n_components")
        centered = X - X.mean(axis=0, keepdims=True)
        _u, _s, vt = np.linalg.svd(centered, full_matrices=False)
        comps = vt[: self.n_components]
        for j in range(comps.shape[0]):
            pivot = np.argmax(np.abs(comps[j]))
            if comps[j, pivot] < 0:
                comps[j] = -comps[j]
        return np.ascontiguousarray(centered @ comps.T, dtype=np.float32)
