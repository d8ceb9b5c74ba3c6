from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from modelserver.app import create_app
from modelserver.config import ServerConfig


@pytest.fixture
def config(tmp_path):
    return ServerConfig(checkpoint_dir=tmp_path / "ckpts")


@pytest.fixture
def client(config):
    return TestClient(create_app(config))


def write_gpl_fixture(tmp_path, n_triplets=64, seed=9):
    """Synthetic corpus + GPL dataset files in the engine's file formats."""
    import random

    rng = random.Random(seed)
    vocab = [f"term{i}" for i in range(50)]
    corpus_path = tmp_path / "corpus.jsonl"
    docs = []
    with corpus_path.open("w", encoding="utf-8") as fh:
        for i in range(32):
            words = rng.sample(vocab, 6)
            docs.append({"id": f"d{i}", "title": " ".join(words[:3]), "abstract": " ".join(words[3:]), "year": 2000})
            fh.write(json.dumps(docs[-1]) + "\n")

    dataset_path = tmp_path / "gpl.jsonl"
    with dataset_path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({"seed": seed, "q": 2, "nucleus_p": 0.9, "pool_size": 10}) + "\n")
        for i in range(n_triplets):
            pos = docs[rng.randrange(len(docs))]
            neg = docs[rng.randrange(len(docs))]
            while neg["id"] == pos["id"]:
                neg = docs[rng.randrange(len(docs))]
            query = " ".join(pos["title"].split()[:2])
            margin = rng.uniform(-0.5, 2.0)
            fh.write(
                json.dumps({"query": query, "pos": pos["id"], "neg": neg["id"], "margin": margin}) + "\n"
            )
    return dataset_path, corpus_path
