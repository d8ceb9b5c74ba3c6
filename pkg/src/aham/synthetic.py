"""Synthetic corpora with planted topic structure, for experiments and tests.

Each planted topic owns a disjoint vocabulary plus one high-frequency
marker token; documents sample their topic's vocabulary and add per-doc
noise tokens. With the hashed bag-of-words mock embedder this yields
controllable cluster structure, and the tightening transport simulates
domain adaptation: at the adapted step every document is pulled toward
its topic anchor, so clusters tighten and outliers drop.
"""
from __future__ import annotations

import numpy as np

from .backends import EmbeddingCheckpoint
from .corpus import Corpus, Document
from .mocks import HashedBagEmbedder, MockTransport
from .text import tokenize


def planted_corpus(
    n_topics: int = 3,
    docs_per_topic: int = 30,
    seed: int = 7,
    vocab_size: int = 40,
    topic_tokens_per_doc: int = 5,
    noise_tokens_per_doc: int = 10,
    start_year: int = 2000,
) -> tuple[Corpus, dict[str, int]]:
    """Corpus with n_topics planted vocabularies; returns (corpus, marker map).

    The marker map sends each topic's marker token to its topic index;
    document ids encode the planted topic as t<topic>_d<i>. The defaults
    put enough per-document noise into the base representation that a few
    documents fall out as outliers before adaptation.
    """
    rng = np.random.default_rng(seed)
    markers = {f"marker{t}": t for t in range(n_topics)}
    vocab = {t: [f"topic{t}term{k}" for k in range(vocab_size)] for t in range(n_topics)}
    fillers = ["study", "analysis", "results"]
    documents = []
    noise_id = 0
    for t in range(n_topics):
        for d in range(docs_per_topic):
            drawn = rng.choice(vocab[t], size=topic_tokens_per_doc, replace=True).tolist()
            noise = [f"noise{noise_id}w{j}" for j in range(noise_tokens_per_doc)]
            noise_id += 1
            # the shared leading token keeps generated topic labels lexically
            # and semantically related across topics, as real labels are
            title_tokens = ["literature", f"marker{t}"] + drawn[: topic_tokens_per_doc // 2]
            abstract_tokens = drawn[topic_tokens_per_doc // 2 :] + noise + [fillers[d % len(fillers)]]
            documents.append(
                Document.build(
                    id=f"t{t}_d{d}",
                    title=" ".join(title_tokens),
                    abstract=" ".join(abstract_tokens),
                    year=start_year + (d % 20),
                )
            )
    return Corpus(documents=tuple(documents), source_path="<planted>"), markers


class TighteningEmbedder(HashedBagEmbedder):
    """Hashed bag embedder whose adapted checkpoints tighten planted topics.

    At step 0 it behaves exactly like the base embedder. At any later
    step, a document containing a known marker token is blended toward a
    fixed random anchor for its topic, with blend weight `tighten`.
    """

    def __init__(
        self,
        markers: dict[str, int],
        dim: int = 96,
        tighten: float = 0.85,
        anchor_seed: int = 11,
    ):
        super().__init__(dim=dim)
        if not 0.0 < tighten < 1.0:
            raise ValueError("tighten must be in (0, 1)")
        self.markers = dict(markers)
        self.tighten = tighten
        rng = np.random.default_rng(anchor_seed)
        n_topics = max(markers.values()) + 1 if markers else 0
        anchors = rng.normal(size=(n_topics, dim))
        anchors /= np.linalg.norm(anchors, axis=1, keepdims=True)
        self.anchors = anchors

    def embed_text(self, text: str, checkpoint_id: str = "") -> np.ndarray:
        base = super().embed_text(text, checkpoint_id="")
        if checkpoint_id in ("", "step_0"):
            return base
        tokens = set(tokenize(text))
        topic = next((t for token, t in self.markers.items() if token in tokens), None)
        if topic is None:
            return base
        norm = np.linalg.norm(base)
        unit = base / norm if norm > 0 else base
        return (1.0 - self.tighten) * unit + self.tighten * self.anchors[topic]


def tightening_transport(
    markers: dict[str, int],
    dim: int = 96,
    adapted_step: int = 10000,
    tighten: float = 0.85,
) -> MockTransport:
    """Two-checkpoint mock backend: loose base model, tightened adapted model."""
    embedder = TighteningEmbedder(markers, dim=dim, tighten=tighten)
    checkpoints = [
        EmbeddingCheckpoint(step=0, checkpoint_id="step_0", dim=dim),
        EmbeddingCheckpoint(step=adapted_step, checkpoint_id=f"step_{adapted_step}", dim=dim),
    ]
    return MockTransport(embedder=embedder, checkpoints=checkpoints)
