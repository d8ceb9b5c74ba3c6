from __future__ import annotations

import numpy as np
import pytest

from aham.backends import BackendClient, BackendConfig, EmbeddingCheckpoint
from aham.cluster import Assignment
from aham.corpus import Corpus, Document
from aham.mocks import HashedBagEmbedder, MockTransport
from aham.topics import (
    candidate_phrases,
    central_documents,
    ctfidf_weights,
    extract_topic_keywords,
    top_ctfidf_terms,
)

from oracles import cosine_ranking_brute_force


def corpus_of(texts, years=None):
    docs = []
    for i, t in enumerate(texts):
        docs.append(Document.build(id=f"d{i}", title=t, abstract="", year=years[i] if years else None))
    return Corpus(documents=tuple(docs), source_path="<mem>")


def marker_corpus():
    """Three clusters with disjoint marker vocabularies plus shared fillers."""
    texts, labels = [], []
    markers = ["quasar", "ribosome", "ledger"]
    extras = [
        ["galaxy", "telescope", "redshift"],
        ["protein", "enzyme", "cell"],
        ["audit", "account", "balance"],
    ]
    for cluster in range(3):
        for d in range(5):
            words = [markers[cluster]] * 3 + [extras[cluster][d % 3]] * 2 + ["common", "shared"]
            texts.append(" ".join(words))
            labels.append(cluster)
    corpus = corpus_of(texts)
    assignment = Assignment(labels=tuple(labels), topic_count=3, outlier_count=0)
    return corpus, assignment, markers


def mock_client(dim=128):
    transport = MockTransport(
        embedder=HashedBagEmbedder(dim=dim),
        checkpoints=[EmbeddingCheckpoint(step=0, checkpoint_id="step_0", dim=dim)],
    )
    return BackendClient(transport, BackendConfig(endpoint="mock://"))


# -------------------------------------------------------------------- ctfidf


def test_ctfidf_rows_sum_to_one():
    corpus, assignment, _markers = marker_corpus()
    weights, vocab = ctfidf_weights(corpus, assignment)
    assert weights.shape[0] == 3
    assert weights.shape[1] == len(vocab)
    np.testing.assert_allclose(weights.sum(axis=1), 1.0, atol=1e-9)
    assert (weights >= 0).all()


def test_ctfidf_marker_terms_dominate_their_cluster():
    corpus, assignment, markers = marker_corpus()
    weights, vocab = ctfidf_weights(corpus, assignment)
    index = {term: i for i, term in enumerate(vocab)}
    for cluster, marker in enumerate(markers):
        row = weights[cluster]
        assert row.argmax() == index[marker]


def test_ctfidf_single_cluster_single_term():
    corpus = corpus_of(["x x x"])
    assignment = Assignment(labels=(0,), topic_count=1, outlier_count=0)
    weights, vocab = ctfidf_weights(corpus, assignment)
    assert vocab == ["x"]
    assert weights.tolist() == [[1.0]]


def test_ctfidf_stopwords_excluded():
    corpus = corpus_of(["the model of the data", "model data results"])
    assignment = Assignment(labels=(0, 0), topic_count=1, outlier_count=0)
    _weights, vocab = ctfidf_weights(corpus, assignment)
    assert "the" not in vocab and "of" not in vocab
    assert "model" in vocab


def test_ctfidf_empty_cluster_text_error():
    corpus = corpus_of(["the of and", "real words here"])
    assignment = Assignment(labels=(0, 1), topic_count=2, outlier_count=0)
    with pytest.raises(ValueError, match="cluster 0"):
        ctfidf_weights(corpus, assignment)


def test_ctfidf_outlier_docs_excluded_from_rows():
    corpus = corpus_of(["alpha beta", "alpha gamma", "unique outlier words"])
    assignment = Assignment(labels=(0, 0, -1), topic_count=1, outlier_count=1)
    _weights, vocab = ctfidf_weights(corpus, assignment)
    assert "outlier" not in vocab


def test_top_ctfidf_terms_ranked():
    corpus, assignment, markers = marker_corpus()
    weights, vocab = ctfidf_weights(corpus, assignment)
    tops = top_ctfidf_terms(weights, vocab, n_terms=3)
    for cluster, marker in enumerate(markers):
        assert tops[cluster][0][0] == marker


# ------------------------------------------------------------------ keywords


def test_candidate_phrases_unigrams_and_bigrams():
    docs = [Document.build(id="a", title="Outlier detection in text mining", abstract="", year=None)]
    cands = candidate_phrases(docs)
    assert "outlier" in cands
    assert "outlier detection" in cands
    assert "in" not in cands  # stopword
    assert "detection in" not in cands  # bigram crossing a stopword
    assert "text mining" in cands


def test_candidate_phrases_deduplicated():
    docs = [
        Document.build(id="a", title="graph graph graph", abstract="", year=None),
        Document.build(id="b", title="graph theory", abstract="", year=None),
    ]
    cands = candidate_phrases(docs)
    assert cands.count("graph") == 1
    assert "graph graph" in cands


def test_keywords_capped_at_ten():
    texts = [" ".join(f"word{i}" for i in range(30))]
    docs = [Document.build(id="a", title=t, abstract="", year=None) for t in texts]
    keywords = extract_topic_keywords(docs, mock_client(), "step_0")
    assert len(keywords) == 10
    scores = [s for _t, s in keywords]
    assert scores == sorted(scores, reverse=True)


def test_keyword_equal_to_whole_doc_ranks_first():
    docs = [Document.build(id="a", title="quantum topology", abstract="", year=None)]
    keywords = extract_topic_keywords(docs, mock_client(), "step_0")
    # the bigram covering the entire document matches the centroid exactly
    assert keywords[0][0] == "quantum topology"
    assert keywords[0][1] == pytest.approx(1.0, abs=1e-6)


def test_keyword_ties_resolved_alphabetically():
    # two single-token docs with equal counts: both tokens tie at the centroid
    docs = [
        Document.build(id="a", title="zebra zebra", abstract="", year=None),
        Document.build(id="b", title="aardvark aardvark", abstract="", year=None),
    ]
    keywords = extract_topic_keywords(docs, mock_client(), "step_0")
    terms = [t for t, _s in keywords]
    assert terms.index("aardvark") < terms.index("zebra")
    assert keywords[0][1] == pytest.approx(keywords[1][1], abs=1e-6)


def test_keywords_need_documents():
    with pytest.raises(ValueError):
        extract_topic_keywords([], mock_client(), "step_0")


def test_keywords_no_candidates_error():
    docs = [Document.build(id="a", title="the of and", abstract="", year=None)]
    with pytest.raises(ValueError, match="candidates"):
        extract_topic_keywords(docs, mock_client(), "step_0")


# ------------------------------------------------------------- central docs


def test_central_documents_small_topic_returns_all():
    emb = np.eye(3, dtype=np.float32)
    assert central_documents(["a", "b", "c"], emb, n=3) == ["a", "b", "c"]


def test_central_documents_centroid_direction_first():
    centroid_like = np.array([1.0, 1.0]) / np.sqrt(2)
    emb = np.vstack([[1.0, 0.0], centroid_like, [0.0, 1.0]]).astype(np.float32)
    ids = ["x", "hub", "y"]
    assert central_documents(ids, emb, n=1) == ["hub"]


def test_central_documents_matches_brute_force():
    rng = np.random.default_rng(9)
    vecs = rng.normal(size=(10, 2))
    vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    ids = [f"d{i}" for i in range(10)]
    expect_order = cosine_ranking_brute_force(vecs)
    got = central_documents(ids, vecs, n=10)
    assert got == [ids[i] for i in expect_order]


def test_central_documents_prefix_property():
    rng = np.random.default_rng(10)
    vecs = rng.normal(size=(8, 4))
    vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    ids = [f"d{i}" for i in range(8)]
    for n in range(1, 8):
        assert central_documents(ids, vecs, n=n) == central_documents(ids, vecs, n=n + 1)[:n]
