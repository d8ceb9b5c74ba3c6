from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aham.backends import (
    BackendClient,
    BackendConfig,
    CheckpointRegistry,
    EmbeddingCache,
    EmbeddingCheckpoint,
    GenerationParams,
)
from aham.errors import RegistryError
from aham.mocks import (
    HashedBagEmbedder,
    MockTransport,
    RuleBasedGenerator,
    TokenOverlapCrossEncoder,
    mock_transport_from_url,
)


def make_client(tmp_path=None, steps=(0,), dim=64, generator=None):
    checkpoints = [EmbeddingCheckpoint(step=s, checkpoint_id=f"step_{s}", dim=dim) for s in steps]
    transport = MockTransport(
        embedder=HashedBagEmbedder(dim=dim), generator=generator, checkpoints=checkpoints
    )
    cache_dir = tmp_path / "cache" if tmp_path else None
    return BackendClient(transport, BackendConfig(endpoint="mock://", cache_dir=cache_dir, batch_size=8))


def test_embed_same_text_twice_identical(tmp_path):
    client = make_client(tmp_path)
    a = client.embed_batch(["outlier detection in text"], "step_0")
    b = client.embed_batch(["outlier detection in text"], "step_0")
    assert np.array_equal(a, b)


def test_embed_cache_hit_bit_identical(tmp_path):
    client = make_client(tmp_path)
    fresh = client.embed_batch(["alpha beta", "gamma delta"], "step_0")
    # new client over the same cache dir: values must come back bit-identical
    again = make_client(tmp_path).embed_batch(["alpha beta", "gamma delta"], "step_0")
    assert fresh.tobytes() == again.tobytes()


def test_embed_matrix_shape_and_unit_norms(tmp_path):
    dim = 384
    checkpoints = [EmbeddingCheckpoint(step=0, checkpoint_id="step_0", dim=dim)]
    transport = MockTransport(embedder=HashedBagEmbedder(dim=dim), checkpoints=checkpoints)
    client = BackendClient(transport, BackendConfig(endpoint="mock://", cache_dir=tmp_path / "c"))
    texts = [f"document number {i} about subject {i % 7}" for i in range(389)]
    matrix = client.embed_batch(texts, "step_0")
    assert matrix.shape == (389, dim)
    # norm checked against direct summation, not linalg
    for row in matrix:
        norm = sum(float(x) * float(x) for x in row) ** 0.5
        assert abs(norm - 1.0) <= 1e-6


def test_embed_unknown_checkpoint(tmp_path):
    client = make_client(tmp_path)
    with pytest.raises(RegistryError, match="unknown checkpoint"):
        client.embed_batch(["text"], "step_999")


def test_embed_rejects_empty_text(tmp_path):
    client = make_client(tmp_path)
    with pytest.raises(ValueError, match="empty"):
        client.embed_batch(["fine", "  "], "step_0")
    with pytest.raises(ValueError):
        client.embed_batch([], "step_0")


def test_embed_batch_partition_invariance():
    client = make_client()
    texts = [f"text {i} with tokens {i % 5} {i % 3}" for i in range(23)]
    whole = client.embed_batch(texts, "step_0")
    parts = np.vstack(
        [client.embed_batch(texts[:7], "step_0"), client.embed_batch(texts[7:], "step_0")]
    )
    assert np.array_equal(whole, parts)


def test_cache_key_components():
    k0 = EmbeddingCache.key("embed", "step_0", "hello world")
    assert EmbeddingCache.key("generate", "step_0", "hello world") != k0
    assert EmbeddingCache.key("embed", "step_1", "hello world") != k0
    assert EmbeddingCache.key("embed", "step_0", "hello worlds") != k0
    # NFC normalization folds composed/decomposed forms together
    assert EmbeddingCache.key("embed", "s", "café") == EmbeddingCache.key("embed", "s", "café")


def test_generation_defaults():
    params = GenerationParams()
    assert params.temperature == 0.0
    assert params.max_new_tokens == 500
    assert params.repetition_penalty == 1.1


def test_generate_temperature_validation():
    with pytest.raises(ValueError):
        GenerationParams(temperature=-0.1)


def test_generate_echo_first_keyword():
    client = make_client(generator=RuleBasedGenerator.echo_first_keyword())
    prompt = "The topic is described by the following keywords: outlier, mining"
    assert client.generate_text(prompt) == "outlier"


def test_generate_rejects_empty_prompt():
    client = make_client()
    with pytest.raises(ValueError):
        client.generate_text("   ")


def test_cross_encode_token_overlap():
    client = make_client()
    scores = client.cross_encode_pairs([("a b", "a c"), ("x y z", "x y z"), ("p", "q")])
    assert scores == [1.0, 3.0, 0.0]


def test_cross_encode_identical_pair_counts_tokens():
    ce = TokenOverlapCrossEncoder()
    assert ce.score("knowledge graph embeddings", "knowledge graph embeddings") == 3.0


def test_cross_encode_order_preserved():
    client = make_client()
    pairs = [("a", "a"), ("b b", "b"), ("c", "d")]
    assert client.cross_encode_pairs(pairs) == [1.0, 1.0, 0.0]


def test_list_checkpoints_sorted_with_base(tmp_path):
    client = make_client(tmp_path, steps=(30000, 0, 10000, 20000, 40000, 50000))
    steps = [c.step for c in client.list_checkpoints()]
    assert steps == [0, 10000, 20000, 30000, 40000, 50000]


def test_registry_single_base():
    reg = CheckpointRegistry([EmbeddingCheckpoint(step=0, checkpoint_id="base", dim=8)])
    assert [c.step for c in reg.all()] == [0]


def test_registry_duplicate_steps_error():
    cks = [
        EmbeddingCheckpoint(step=0, checkpoint_id="a", dim=8),
        EmbeddingCheckpoint(step=0, checkpoint_id="b", dim=8),
    ]
    with pytest.raises(RegistryError, match="duplicate"):
        CheckpointRegistry(cks)


def test_registry_empty_error():
    with pytest.raises(RegistryError, match="empty"):
        CheckpointRegistry([])


def test_registry_dim_mismatch_error():
    cks = [
        EmbeddingCheckpoint(step=0, checkpoint_id="a", dim=8),
        EmbeddingCheckpoint(step=10, checkpoint_id="b", dim=16),
    ]
    with pytest.raises(RegistryError, match="dims"):
        CheckpointRegistry(cks)


def test_mock_transport_from_url():
    transport = mock_transport_from_url("mock://hashed?dim=32&steps=0,10000")
    steps = [c.step for c in transport.checkpoints()]
    assert steps == [0, 10000]
    assert transport.embedder.dim == 32


@settings(max_examples=30, deadline=None)
@given(st.text(alphabet="abcdef ", min_size=1).filter(lambda s: s.strip()))
def test_hashed_embedder_deterministic(text):
    emb = HashedBagEmbedder(dim=32)
    assert np.array_equal(emb.embed_text(text), emb.embed_text(text))


def test_load_registry_file(tmp_path):
    import json

    from aham.backends import load_registry_file

    path = tmp_path / "registry.json"
    path.write_text(
        json.dumps(
            {
                "checkpoints": [
                    {"id": "step_10000", "step": 10000, "dim": 8},
                    {"id": "step_0", "step": 0, "dim": 8},
                ]
            }
        )
    )
    checkpoints = load_registry_file(path)
    assert {c.step for c in checkpoints} == {0, 10000}

    empty = tmp_path / "empty.json"
    empty.write_text(json.dumps({"checkpoints": []}))
    with pytest.raises(RegistryError):
        load_registry_file(empty)
