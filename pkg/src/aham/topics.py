"""Topic representations: cluster-level term weights, keywords, exemplars.

Term weighting is class-based TF-IDF: each cluster's concatenated text is
one pseudo-document, term counts are damped by an inverse frequency
factor over the whole collection, and rows are L1-normalized so clusters
of different sizes are comparable. Keywords are 1-2-gram candidates
ranked by embedding cosine against the topic centroid.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .backends import BackendClient, EmbeddingCheckpoint
from .cluster import Assignment
from .corpus import Corpus, Document
from .text import STOPWORDS, tokenize

PROMPT_DOC_CHARS = 512


@dataclass
class TopicRepresentation:
    topic_id: int
    keywords: list[tuple[str, float]]
    central_doc_ids: list[str]
    centroid: np.ndarray

    def keyword_terms(self) -> list[str]:
        return [term for term, _score in self.keywords]

    def to_json(self) -> dict:
        return {
            "topic_id": self.topic_id,
            "keywords": [[term, score] for term, score in self.keywords],
            "central_docs": list(self.central_doc_ids),
        }


def save_representations(reps: Sequence[TopicRepresentation], path: str | Path) -> None:
    payload = [r.to_json() for r in reps]
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def _cluster_token_lists(corpus: Corpus, assignment: Assignment) -> list[list[str]]:
    clusters: list[list[str]] = [[] for _ in range(assignment.topic_count)]
    for doc, label in zip(corpus, assignment.labels):
        if label >= 0:
            clusters[label].extend(t for t in tokenize(doc.text) if t not in STOPWORDS)
    return clusters


def ctfidf_weights(corpus: Corpus, assignment: Assignment) -> tuple[np.ndarray, list[str]]:
    """Class-based TF-IDF matrix (T x V) and its vocabulary.

    weight(t, term) = count(term in cluster t) * log(1 + A / f(term)),
    A = mean token count per cluster, f = term frequency over the whole
    corpus; rows L1-normalized. Vocabulary is the sorted set of
    non-stopword terms appearing in at least one cluster.
    """
    if assignment.topic_count < 1:
        raise ValueError("need at least one cluster")
    if len(corpus) != len(assignment.labels):
        raise ValueError("corpus and assignment are misaligned")
    clusters = _cluster_token_lists(corpus, assignment)
    for t, tokens in enumerate(clusters):
        if not tokens:
            raise ValueError(f"cluster {t} has no usable terms")

    vocab = sorted({term for tokens in clusters for term in tokens})
    index = {term: i for i, term in enumerate(vocab)}

    corpus_freq = np.zeros(len(vocab), dtype=np.float64)
    for doc in corpus:
        for term in tokenize(doc.text):
            i = index.get(term)
            if i is not None:
                corpus_freq[i] += 1.0

    tf = np.zeros((assignment.topic_count, len(vocab)), dtype=np.float64)
    for t, tokens in enumerate(clusters):
        for term in tokens:
            tf[t, index[term]] += 1.0

    avg_cluster_tokens = float(np.mean([len(tokens) for tokens in clusters]))
    idf = np.log1p(avg_cluster_tokens / corpus_freq)
    weights = tf * idf[None, :]
    weights /= weights.sum(axis=1, keepdims=True)
    return weights, vocab


def top_ctfidf_terms(
    weights: np.ndarray, vocab: list[str], n_terms: int = 10
) -> list[list[tuple[str, float]]]:
    """Per-cluster top terms by weight, ties resolved alphabetically."""
    out = []
    for row in weights:
        order = sorted(range(len(vocab)), key=lambda i: (-row[i], vocab[i]))
        out.append([(vocab[i], float(row[i])) for i in order[:n_terms] if row[i] > 0])
    return out


def candidate_phrases(docs: Sequence[Document]) -> list[str]:
    """1-2-gram keyword candidates, stopword-boundary filtered, deduplicated."""
    seen: set[str] = set()
    out: list[str] = []
    for doc in docs:
        tokens = tokenize(doc.text)
        for i, tok in enumerate(tokens):
            if tok in STOPWORDS:
                continue
            if tok not in seen:
                seen.add(tok)
                out.append(tok)
            if i + 1 < len(tokens) and tokens[i + 1] not in STOPWORDS:
                phrase = f"{tok} {tokens[i + 1]}"
                if phrase not in seen:
                    seen.add(phrase)
                    out.append(phrase)
    return out


def topic_centroid(member_embeddings: np.ndarray) -> np.ndarray:
    """Unit-normalized mean of member embeddings."""
    centroid = member_embeddings.mean(axis=0)
    norm = float(np.linalg.norm(centroid))
    if norm == 0.0:
        raise ValueError("degenerate topic centroid")
    return centroid / norm


def extract_topic_keywords(
    topic_docs: Sequence[Document],
    client: BackendClient,
    checkpoint: EmbeddingCheckpoint | str | int,
    max_keywords: int = 10,
    member_embeddings: np.ndarray | None = None,
) -> list[tuple[str, float]]:
    """Rank candidate phrases by cosine to the topic centroid.

    Ties resolve alphabetically. Pass member_embeddings to reuse already
    computed document vectors; otherwise the documents are embedded here.
    """
    if not topic_docs:
        raise ValueError("topic has no documents")
    if max_keywords < 1:
        raise ValueError("max_keywords must be >= 1")
    candidates = candidate_phrases(topic_docs)
    if not candidates:
        raise ValueError("no keyword candidates after stopword filtering")
    if member_embeddings is None:
        member_embeddings = client.embed_batch([d.text for d in topic_docs], checkpoint)
    centroid = topic_centroid(member_embeddings)
    cand_emb = client.embed_batch(candidates, checkpoint)
    scores = cand_emb @ centroid
    ranked = sorted(zip(candidates, scores), key=lambda kv: (-kv[1], kv[0]))
    return [(term, float(score)) for term, score in ranked[:max_keywords]]


def central_documents(
    topic_doc_ids: Sequence[str], member_embeddings: np.ndarray, n: int = 3
) -> list[str]:
    """The n member documents closest (cosine) to the topic centroid.

    Returns all members when the topic is smaller than n. The result for
    n is always a prefix of the result for n+1.
    """
    if len(topic_doc_ids) == 0:
        raise ValueError("topic has no documents")
    if len(topic_doc_ids) != member_embeddings.shape[0]:
        raise ValueError("ids and embeddings are misaligned")
    centroid = topic_centroid(member_embeddings)
    sims = member_embeddings @ centroid
    order = sorted(range(len(topic_doc_ids)), key=lambda i: (-sims[i], i))
    return [topic_doc_ids[i] for i in order[:n]]


def build_topic_representations(
    corpus: Corpus,
    assignment: Assignment,
    embeddings: np.ndarray,
    client: BackendClient,
    checkpoint: EmbeddingCheckpoint | str | int,
    max_keywords: int = 10,
    n_central: int = 3,
) -> list[TopicRepresentation]:
    """Assemble keywords, central documents, and centroid per topic."""
    if len(corpus) != len(assignment.labels) or embeddings.shape[0] != len(corpus):
        raise ValueError("corpus, assignment, and embeddings are misaligned")
    reps = []
    for topic_id in range(assignment.topic_count):
        member_idx = assignment.members(topic_id)
        docs = [corpus[i] for i in member_idx]
        member_emb = embeddings[member_idx]
        keywords = extract_topic_keywords(
            docs, client, checkpoint, max_keywords=max_keywords, member_embeddings=member_emb
        )
        central = central_documents([d.id for d in docs], member_emb, n=n_central)
        reps.append(
            TopicRepresentation(
                topic_id=topic_id,
                keywords=keywords,
                central_doc_ids=central,
                centroid=topic_centroid(member_emb),
            )
        )
    return reps
