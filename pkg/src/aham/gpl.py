"""Domain-adaptation training data: queries, hard negatives, margins.

For every corpus passage the generator writes up to q synthetic queries;
each query is paired with its source passage (positive) and one negative
mined by nucleus sampling over base-model cosine similarities; the
cross-encoder margin score(query, positive) - score(query, negative) is
stored for margin distillation. The whole dataset is a pure function of
(corpus, backends, seed) and serializes byte-for-byte reproducibly.
"""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
import numpy as np

from .backends import BackendClient, GenerationParams
from .corpus import Corpus
from .errors import AhamError

logger = logging.getLogger(__name__)

QUERY_MAX_TOKENS = 64
QUERY_PROMPT_TEMPLATE = """Write one short search query a researcher might use to find the passage below.
Passage: {passage}
Query {index}:"""


@dataclass(frozen=True)
class GplTriplet:
    query: str
    positive_id: str
    negative_id: str
    margin: float

    def __post_init__(self):
        if self.positive_id == self.negative_id:
            raise ValueError("positive and negative must differ")

    def to_json(self) -> dict:
        return {"query": self.query, "pos": self.positive_id, "neg": self.negative_id, "margin": self.margin}

    @classmethod
    def from_json(cls, payload: dict) -> "GplTriplet":
        return cls(
            query=payload["query"],
            positive_id=payload["pos"],
            negative_id=payload["neg"],
            margin=float(payload["margin"]),
        )


@dataclass
class GplDataset:
    triplets: list[GplTriplet]
    target_corpus_id: str
    seed: int
    q: int
    nucleus_p: float
    pool_size: int

    def save(self, path: str | Path) -> None:
        path = Path(path)
        header = {
            "seed": self.seed,
            "q": self.q,
            "nucleus_p": self.nucleus_p,
            "pool_size": self.pool_size,
            "corpus": self.target_corpus_id,
        }
        with path.open("w", encoding="utf-8") as fh:
            fh.write(json.dumps(header, sort_keys=True) + "\n")
            for t in self.triplets:
                fh.write(json.dumps(t.to_json(), sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "GplDataset":
        path = Path(path)
        with path.open("r", encoding="utf-8") as fh:
            lines = [l for l in fh.read().splitlines() if l.strip()]
        if not lines:
            raise AhamError(f"empty GPL dataset file: {path}")
        header = json.loads(lines[0])
        triplets = [GplTriplet.from_json(json.loads(l)) for l in lines[1:]]
        return cls(
            triplets=triplets,
            target_corpus_id=header.get("corpus", ""),
            seed=int(header["seed"]),
            q=int(header["q"]),
            nucleus_p=float(header["nucleus_p"]),
            pool_size=int(header["pool_size"]),
        )


def generate_queries(
    corpus: Corpus,
    client: BackendClient,
    q: int = 3,
    params: GenerationParams | None = None,
) -> dict[str, list[str]]:
    """Up to q synthetic queries per passage.

    Empty generations are dropped (logged, not fatal): a passage whose
    every generation comes back empty simply contributes no queries.
    Queries longer than the cap are truncated to their first 64 tokens.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    params = params or GenerationParams(max_new_tokens=64)
    queries: dict[str, list[str]] = {}
    n_failures = 0
    for doc in corpus:
        out: list[str] = []
        for index in range(1, q + 1):
            prompt = QUERY_PROMPT_TEMPLATE.format(passage=doc.text, index=index)
            raw = client.generate_text(prompt, params).strip()
            if not raw:
                n_failures += 1
                continue
            line = raw.splitlines()[0].strip()
            if not line:
                n_failures += 1
                continue
            tokens = line.split()
            if len(tokens) > QUERY_MAX_TOKENS:
                line = " ".join(tokens[:QUERY_MAX_TOKENS])
            out.append(line)
        queries[doc.id] = out
        if not out:
            logger.warning("no queries generated for passage %s", doc.id)
    if n_failures:
        logger.info("%d empty query generations dropped", n_failures)
    return queries


def nucleus_sample(probs: np.ndarray, nucleus_p: float, rng: np.random.Generator) -> int:
    """Sample an index from the smallest probability-mass prefix >= nucleus_p.

    Candidates are ordered by descending probability (ties by index); the
    prefix is renormalized before drawing.
    """
    if not 0.0 < nucleus_p <= 1.0:
        raise ValueError("nucleus_p must be in (0, 1]")
    order = np.lexsort((np.arange(len(probs)), -probs))
    cumulative = np.cumsum(probs[order])
    cutoff = int(np.searchsorted(cumulative, nucleus_p, side="left")) + 1
    kept = order[:cutoff]
    kept_probs = probs[kept] / probs[kept].sum()
    return int(rng.choice(kept, p=kept_probs))


def mine_negative(
    query: str,
    positive_id: str,
    corpus: Corpus,
    base_embeddings: np.ndarray,
    client: BackendClient,
    base_checkpoint,
    nucleus_p: float = 0.9,
    pool_size: int = 50,
    rng_seed: int = 0,
) -> str:
    """Nucleus-sample a hard negative from the query's nearest passages.

    Pool = top pool_size documents by cosine against the base embedding
    of the query, positive excluded; similarities are softmax-normalized
    and sampled through the nucleus. Deterministic given rng_seed.
    """
    if len(corpus) < 2:
        raise ValueError("need at least 2 documents to mine a negative")
    if pool_size < 1:
        raise ValueError("pool_size must be >= 1")
    if base_embeddings.shape[0] != len(corpus):
        raise ValueError("base embeddings are not row-aligned with the corpus")
    query_vec = client.embed_one(query, base_checkpoint)
    sims = base_embeddings @ query_vec
    pos_index = corpus.index_of(positive_id)
    candidate_idx = [i for i in range(len(corpus)) if i != pos_index]
    candidate_idx.sort(key=lambda i: (-sims[i], i))
    pool = candidate_idx[:pool_size]
    logits = sims[pool]
    weights = np.exp(logits - logits.max())
    probs = weights / weights.sum()
    rng = np.random.default_rng(rng_seed)
    chosen = nucleus_sample(probs, nucleus_p, rng)
    return corpus[pool[chosen]].id


def compute_margin(
    query: str,
    positive_id: str,
    negative_id: str,
    corpus: Corpus,
    client: BackendClient,
) -> GplTriplet:
    """Cross-encoder margin: score(q, positive) - score(q, negative), unclamped."""
    pos_text = corpus.by_id(positive_id).text
    neg_text = corpus.by_id(negative_id).text
    score_pos, score_neg = client.cross_encode_pairs([(query, pos_text), (query, neg_text)])
    return GplTriplet(
        query=query,
        positive_id=positive_id,
        negative_id=negative_id,
        margin=score_pos - score_neg,
    )


def _query_seed(run_seed: int, query_index: int) -> int:
    digest = hashlib.sha256(f"{run_seed}:{query_index}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def build_gpl_dataset(
    corpus: Corpus,
    client: BackendClient,
    q: int = 3,
    nucleus_p: float = 0.9,
    pool_size: int = 50,
    seed: int = 42,
    out_path: str | Path | None = None,
) -> GplDataset:
    """Full dataset: queries, mined negatives, margins; optionally persisted.

    Negatives are mined with base (step 0) embeddings only. The RNG
    stream is keyed per query index, so per-passage work could run
    concurrently without changing the result. A backend failure persists
    partial progress to <out_path>.partial before propagating.
    """
    if len(corpus) < 2:
        raise ValueError("cannot build GPL data from fewer than 2 documents")
    base = client.registry.base
    base_embeddings = client.embed_batch(corpus.texts(), base)
    queries = generate_queries(corpus, client, q=q)

    triplets: list[GplTriplet] = []
    query_index = 0
    try:
        for doc in corpus:
            for query in queries[doc.id]:
                negative_id = mine_negative(
                    query,
                    doc.id,
                    corpus,
                    base_embeddings,
                    client,
                    base,
                    nucleus_p=nucleus_p,
                    pool_size=pool_size,
                    rng_seed=_query_seed(seed, query_index),
                )
                triplets.append(compute_margin(query, doc.id, negative_id, corpus, client))
                query_index += 1
    except AhamError:
        if out_path is not None:
            partial = GplDataset(
                triplets=triplets,
                target_corpus_id=corpus.fingerprint(),
                seed=seed,
                q=q,
                nucleus_p=nucleus_p,
                pool_size=pool_size,
            )
            partial.save(str(out_path) + ".partial")
            logger.error("backend failure after %d triplets; partial progress saved", len(triplets))
        raise

    dataset = GplDataset(
        triplets=triplets,
        target_corpus_id=corpus.fingerprint(),
        seed=seed,
        q=q,
        nucleus_p=nucleus_p,
        pool_size=pool_size,
    )
    if out_path is not None:
        dataset.save(out_path)
    return dataset


def verify_margins(dataset: GplDataset, corpus: Corpus, client: BackendClient) -> bool:
    """Recompute every margin through the cross-encoder; exact equality."""
    for t in dataset.triplets:
        again = compute_margin(t.query, t.positive_id, t.negative_id, corpus, client)
        if again.margin != t.margin:
            return False
    return True
