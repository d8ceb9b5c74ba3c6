from __future__ import annotations

import json

import pytest

from aham.backends import BackendClient, BackendConfig, EmbeddingCheckpoint
from aham.mocks import HashedBagEmbedder, MockTransport


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    return path


@pytest.fixture
def mock_client(tmp_path):
    """Backend client over the default mocks with a disk cache."""
    transport = MockTransport(
        embedder=HashedBagEmbedder(dim=64),
        checkpoints=[
            EmbeddingCheckpoint(step=0, checkpoint_id="step_0", dim=64),
            EmbeddingCheckpoint(step=10000, checkpoint_id="step_10000", dim=64),
        ],
    )
    config = BackendConfig(endpoint="mock://", cache_dir=tmp_path / "cache", batch_size=16)
    return BackendClient(transport, config)


@pytest.fixture
def uncached_client():
    transport = MockTransport(embedder=HashedBagEmbedder(dim=64))
    return BackendClient(transport, BackendConfig(endpoint="mock://"))
