"""Topic-name similarity metrics, the adaptation objective, and selection.

Three similarities between topic labels: normalized edit distance,
greedy token matching over word embeddings (symmetrized), and cosine of
whole-label embeddings. The objective for a checkpoint multiplies the
outlier-to-topic ratio by the mean pairwise label similarity; lower is
better, and the checkpoint with the lowest objective wins.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .backends import BackendClient, EmbeddingCheckpoint
from .cluster import Assignment
from .text import tokenize

METRIC_NAMES = ("levenshtein", "greedy_semantic", "label_cosine")

SimilarityFn = Callable[[str, str], float]


def levenshtein_distance(a: str, b: str) -> int:
    """Unit-cost edit distance (insert/delete/substitute), two-row DP."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i] + [0] * len(b)
        for j, cb in enumerate(b, start=1):
            current[j] = min(
                previous[j] + 1,
                current[j - 1] + 1,
                previous[j - 1] + (ca != cb),
            )
        previous = current
    return previous[len(b)]


def levenshtein_similarity(a: str, b: str) -> float:
    """1 - editdistance(lower(a), lower(b)) / max(|a|, |b|); 1.0 for two empties."""
    a = a.lower()
    b = b.lower()
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein_distance(a, b) / longest


def greedy_semantic_directional(
    a: str, b: str, client: BackendClient, checkpoint: EmbeddingCheckpoint | str | int
) -> float:
    """Mean over a's word tokens of the best cosine to any of b's tokens."""
    tokens_a = tokenize(a)
    tokens_b = tokenize(b)
    if not tokens_a or not tokens_b:
        raise ValueError("both labels must tokenize to at least one word")
    emb_a = client.embed_batch(tokens_a, checkpoint).astype(np.float64)
    emb_b = client.embed_batch(tokens_b, checkpoint).astype(np.float64)
    sims = emb_a @ emb_b.T
    return float(np.mean(sims.max(axis=1)))


def greedy_semantic_score(
    a: str, b: str, client: BackendClient, checkpoint: EmbeddingCheckpoint | str | int
) -> float:
    """Symmetrized greedy token-matching similarity (mean of both directions)."""
    forward = greedy_semantic_directional(a, b, client, checkpoint)
    backward = greedy_semantic_directional(b, a, client, checkpoint)
    return (forward + backward) / 2.0


def label_cosine_similarity(
    a: str, b: str, client: BackendClient, checkpoint: EmbeddingCheckpoint | str | int
) -> float:
    """Cosine between unit-normalized whole-label embeddings."""
    if not a.strip() or not b.strip():
        raise ValueError("labels must be non-empty")
    emb = client.embed_batch([a, b], checkpoint).astype(np.float64)
    return float(emb[0] @ emb[1])


def make_similarity_fn(
    metric: str,
    client: BackendClient | None = None,
    checkpoint: EmbeddingCheckpoint | str | int | None = None,
) -> SimilarityFn:
    """Bind a metric name to a (label, label) -> similarity callable."""
    if metric == "levenshtein":
        return levenshtein_similarity
    if metric in ("greedy_semantic", "label_cosine"):
        if client is None or checkpoint is None:
            raise ValueError(f"metric {metric!r} needs an embedding client and checkpoint")
        fn = greedy_semantic_score if metric == "greedy_semantic" else label_cosine_similarity
        return lambda a, b: fn(a, b, client, checkpoint)
    raise ValueError(f"unknown metric {metric!r}; expected one of {METRIC_NAMES}")


@dataclass
class SimilarityMatrix:
    metric: str
    labels: list[str]
    values: np.ndarray

    def mean_pairwise(self) -> float:
        return mean_pairwise_from_matrix(self.values)


def similarity_matrix(labels: Sequence[str], metric: str, sim: SimilarityFn | None = None) -> SimilarityMatrix:
    sim = sim or make_similarity_fn(metric)
    t = len(labels)
    values = np.ones((t, t), dtype=np.float64)
    for i in range(t):
        for j in range(i + 1, t):
            values[i, j] = values[j, i] = sim(labels[i], labels[j])
    return SimilarityMatrix(metric=metric, labels=list(labels), values=values)


def mean_pairwise_from_matrix(values: np.ndarray) -> float:
    t = values.shape[0]
    if t < 2:
        raise ValueError("need at least two labels")
    total = 0.0
    for i in range(t):
        for j in range(i + 1, t):
            total += float(values[i, j])
    return 2.0 * total / (t * (t - 1))


def mean_pairwise_similarity(labels: Sequence[str], sim: SimilarityFn) -> float:
    """Arithmetic mean of sim over unordered label pairs: 2 sum / (T(T-1))."""
    t = len(labels)
    if t < 2:
        raise ValueError("need at least two labels for pairwise similarity")
    total = 0.0
    for i in range(t):
        for j in range(i + 1, t):
            total += sim(labels[i], labels[j])
    return 2.0 * total / (t * (t - 1))


def outlier_ratio(assignment: Assignment) -> float:
    """Outlier documents per topic: O / T. T counts non-outlier topics only."""
    if assignment.topic_count == 0:
        raise ValueError("degenerate model: no topics")
    return assignment.outlier_count / assignment.topic_count


def outlier_reduction_percent(baseline_outliers: int, adapted_outliers: int) -> float:
    """Percent reduction of outliers relative to the baseline count."""
    if baseline_outliers <= 0:
        raise ValueError("baseline outlier count must be positive")
    return 100.0 * (baseline_outliers - adapted_outliers) / baseline_outliers


@dataclass
class AhamScore:
    """Per-checkpoint objective with every intermediate quantity kept."""

    checkpoint: EmbeddingCheckpoint
    topic_count: int
    outlier_count: int
    outlier_ratio: float
    mean_similarity: dict[str, float] = field(default_factory=dict)
    objective: dict[str, float] = field(default_factory=dict)
    degenerate: bool = False

    def to_json(self) -> dict:
        return {
            "checkpoint": {
                "id": self.checkpoint.checkpoint_id,
                "step": self.checkpoint.step,
                "dim": self.checkpoint.dim,
            },
            "T": self.topic_count,
            "O": self.outlier_count,
            "outlier_ratio": self.outlier_ratio,
            "mean_similarity": self.mean_similarity,
            "objective": {k: ("inf" if math.isinf(v) else v) for k, v in self.objective.items()},
            "degenerate": self.degenerate,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "AhamScore":
        ckpt = EmbeddingCheckpoint(
            step=payload["checkpoint"]["step"],
            checkpoint_id=payload["checkpoint"]["id"],
            dim=payload["checkpoint"]["dim"],
        )
        objective = {k: (math.inf if v == "inf" else float(v)) for k, v in payload["objective"].items()}
        return cls(
            checkpoint=ckpt,
            topic_count=payload["T"],
            outlier_count=payload["O"],
            outlier_ratio=payload["outlier_ratio"],
            mean_similarity={k: float(v) for k, v in payload["mean_similarity"].items()},
            objective=objective,
            degenerate=payload["degenerate"],
        )


def aham_objective(
    assignment: Assignment,
    labels: Sequence[str],
    sims: Mapping[str, SimilarityFn],
    checkpoint: EmbeddingCheckpoint,
) -> AhamScore:
    """Objective per metric: outlier_ratio x mean pairwise label similarity.

    Labels must align with the non-outlier topics (index = topic id).
    Models with T < 2 are degenerate: the pairwise term is undefined, so
    the objective is +inf and the checkpoint can never win selection.
    """
    t = assignment.topic_count
    if t != len(labels):
        raise ValueError(f"{len(labels)} labels for {t} topics")
    if t < 2:
        return AhamScore(
            checkpoint=checkpoint,
            topic_count=t,
            outlier_count=assignment.outlier_count,
            outlier_ratio=math.inf if t == 0 else outlier_ratio(assignment),
            mean_similarity={name: math.nan for name in sims},
            objective={name: math.inf for name in sims},
            degenerate=True,
        )
    ratio = outlier_ratio(assignment)
    mean_sim = {name: mean_pairwise_similarity(labels, fn) for name, fn in sims.items()}
    objective = {name: ratio * value for name, value in mean_sim.items()}
    return AhamScore(
        checkpoint=checkpoint,
        topic_count=t,
        outlier_count=assignment.outlier_count,
        outlier_ratio=ratio,
        mean_similarity=mean_sim,
        objective=objective,
        degenerate=False,
    )


def select_best_checkpoint(scores: Sequence[AhamScore], metric: str = "label_cosine") -> EmbeddingCheckpoint:
    """Argmin of the objective; ties break to the smallest step.

    Degenerate scores never win. Raises if every score is degenerate.
    """
    candidates = [s for s in scores if not s.degenerate and metric in s.objective]
    if not candidates:
        raise ValueError(f"no non-degenerate scores for metric {metric!r}")
    best = min(candidates, key=lambda s: (s.objective[metric], s.checkpoint.step))
    return best.checkpoint
