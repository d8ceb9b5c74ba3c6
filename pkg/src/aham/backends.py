"""Clients for the three model capabilities plus cache and registry.

A `Transport` moves JSON in and out of a model server (HTTP) or an
in-process mock. `BackendClient` layers the engine contracts on top:
input validation, batching, L2 normalization of embeddings, the
content-addressed disk cache, and checkpoint registry checks.
"""
from __future__ import annotations

import hashlib
import logging
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np
import requests

from .errors import BackendError, RegistryError
from .protocol import (
    validate_checkpoints_response,
    validate_cross_encode_response,
    validate_embed_response,
    validate_generate_response,
)
from .text import normalize_nfc

logger = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class EmbeddingCheckpoint:
    """A named embedding source at a given adaptation step (0 = base model)."""

    step: int
    checkpoint_id: str
    dim: int

    def __post_init__(self):
        if self.step < 0:
            raise ValueError("step must be >= 0")
        if self.dim <= 0:
            raise ValueError("dim must be positive")


@dataclass
class GenerationParams:
    temperature: float = 0.0
    max_new_tokens: int = 500
    repetition_penalty: float = 1.1

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_new_tokens <= 0:
            raise ValueError("max_new_tokens must be positive")
        if self.repetition_penalty <= 0:
            raise ValueError("repetition_penalty must be positive")


@dataclass
class BackendConfig:
    endpoint: str
    cache_dir: str | Path | None = None
    timeout: float = 60.0
    batch_size: int = 32

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


class Transport(Protocol):
    """Raw capability calls; no caching, no normalization."""

    def embed(self, texts: Sequence[str], checkpoint_id: str) -> tuple[int, list[list[float]]]: ...

    def generate(self, prompt: str, params: GenerationParams) -> str: ...

    def cross_encode(self, pairs: Sequence[tuple[str, str]]) -> list[float]: ...

    def checkpoints(self) -> list[EmbeddingCheckpoint]: ...


class HttpTransport:
    """Transport over the JSON wire protocol via HTTP."""

    def __init__(self, endpoint: str, timeout: float = 60.0):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self._session = requests.Session()

    def _post(self, path: str, payload: dict) -> dict:
        try:
            resp = self._session.post(self.endpoint + path, json=payload, timeout=self.timeout)
        except requests.RequestException as exc:
            raise BackendError(f"backend unreachable: POST {path}: {exc}") from exc
        if resp.status_code != 200:
            raise BackendError(f"POST {path} -> HTTP {resp.status_code}: {resp.text[:200]}")
        return resp.json()

    def embed(self, texts: Sequence[str], checkpoint_id: str) -> tuple[int, list[list[float]]]:
        payload = self._post("/embed", {"texts": list(texts), "checkpoint": checkpoint_id})
        return validate_embed_response(payload, len(texts))

    def generate(self, prompt: str, params: GenerationParams) -> str:
        payload = self._post(
            "/generate",
            {
                "prompt": prompt,
                "temperature": params.temperature,
                "max_new_tokens": params.max_new_tokens,
                "repetition_penalty": params.repetition_penalty,
            },
        )
        return validate_generate_response(payload)

    def cross_encode(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        payload = self._post("/cross_encode", {"pairs": [list(p) for p in pairs]})
        return validate_cross_encode_response(payload, len(pairs))

    def checkpoints(self) -> list[EmbeddingCheckpoint]:
        try:
            resp = self._session.get(self.endpoint + "/checkpoints", timeout=self.timeout)
        except requests.RequestException as exc:
            raise BackendError(f"backend unreachable: GET /checkpoints: {exc}") from exc
        if resp.status_code != 200:
            raise BackendError(f"GET /checkpoints -> HTTP {resp.status_code}")
        entries = validate_checkpoints_response(resp.json())
        return [EmbeddingCheckpoint(step=e["step"], checkpoint_id=e["id"], dim=e["dim"]) for e in entries]


class EmbeddingCache:
    """Content-addressed vector cache: one binary file per key.

    File layout: little-endian uint32 dim, then dim little-endian float32
    values. Writes go through a temp file and an atomic rename, so
    concurrent writers of the same key are idempotent.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def key(capability: str, checkpoint_id: str, text: str) -> str:
        h = hashlib.sha256()
        h.update(capability.encode("utf-8"))
        h.update(b"\x00")
        h.update(checkpoint_id.encode("utf-8"))
        h.update(b"\x00")
        h.update(normalize_nfc(text).encode("utf-8"))
        return h.hexdigest()

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / key[2:]

    def get(self, key: str) -> np.ndarray | None:
        path = self._path(key)
        try:
            blob = path.read_bytes()
        except FileNotFoundError:
            return None
        (dim,) = struct.unpack("<I", blob[:4])
        vec = np.frombuffer(blob[4:], dtype="<f4")
        if vec.shape[0] != dim:
            raise BackendError(f"corrupt cache entry {path}: dim {dim} vs {vec.shape[0]} floats")
        return vec.copy()

    def put(self, key: str, vector: np.ndarray) -> None:
        vec = np.ascontiguousarray(vector, dtype="<f4")
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(struct.pack("<I", vec.shape[0]))
                fh.write(vec.tobytes())
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


class CheckpointRegistry:
    """Validated checkpoint list: unique steps, constant dim, base present."""

    def __init__(self, checkpoints: Sequence[EmbeddingCheckpoint]):
        if not checkpoints:
            raise RegistryError("empty checkpoint registry")
        steps = [c.step for c in checkpoints]
        if len(set(steps)) != len(steps):
            dupes = sorted({s for s in steps if steps.count(s) > 1})
            raise RegistryError(f"duplicate checkpoint steps: {dupes}")
        ids = [c.checkpoint_id for c in checkpoints]
        if len(set(ids)) != len(ids):
            raise RegistryError("duplicate checkpoint ids")
        dims = {c.dim for c in checkpoints}
        if len(dims) != 1:
            raise RegistryError(f"checkpoint dims not constant: {sorted(dims)}")
        if 0 not in steps:
            raise RegistryError("registry missing base checkpoint (step 0)")
        self._by_step = {c.step: c for c in checkpoints}
        self._by_id = {c.checkpoint_id: c for c in checkpoints}

    def all(self) -> list[EmbeddingCheckpoint]:
        return sorted(self._by_step.values(), key=lambda c: c.step)

    @property
    def dim(self) -> int:
        return next(iter(self._by_step.values())).dim

    @property
    def base(self) -> EmbeddingCheckpoint:
        return self._by_step[0]

    def resolve(self, ref: "EmbeddingCheckpoint | str | int") -> EmbeddingCheckpoint:
        if isinstance(ref, EmbeddingCheckpoint):
            known = self._by_id.get(ref.checkpoint_id)
            if known is None or known != ref:
                raise RegistryError(f"unknown checkpoint {ref.checkpoint_id!r}")
            return known
        if isinstance(ref, int):
            if ref not in self._by_step:
                raise RegistryError(f"no checkpoint at step {ref}")
            return self._by_step[ref]
        if ref not in self._by_id:
            raise RegistryError(f"unknown checkpoint {ref!r}")
        return self._by_id[ref]


class BackendClient:
    """Engine-facing client over a transport.

    Embeddings come back row-aligned with the input texts, every row
    L2-normalized, and (when a cache dir is configured) bit-identical on
    cache hits. Batch partitioning never changes row values.
    """

    def __init__(self, transport: Transport, config: BackendConfig | None = None):
        self.transport = transport
        self.config = config or BackendConfig(endpoint="")
        self.cache = EmbeddingCache(self.config.cache_dir) if self.config.cache_dir else None
        self._registry: CheckpointRegistry | None = None

    @property
    def registry(self) -> CheckpointRegistry:
        if self._registry is None:
            self._registry = CheckpointRegistry(self.transport.checkpoints())
        return self._registry

    def list_checkpoints(self) -> list[EmbeddingCheckpoint]:
        """Registered checkpoints sorted ascending by step (base first)."""
        return self.registry.all()

    def embed_batch(
        self, texts: Sequence[str], checkpoint: EmbeddingCheckpoint | str | int
    ) -> np.ndarray:
        """Embed texts at a registered checkpoint; rows are unit vectors."""
        if len(texts) == 0:
            raise ValueError("texts must be non-empty")
        for i, t in enumerate(texts):
            if not t or not t.strip():
                raise ValueError(f"text {i} is empty")
        ckpt = self.registry.resolve(checkpoint)
        dim = ckpt.dim

        out = np.empty((len(texts), dim), dtype=np.float32)
        misses: list[int] = []
        keys: list[str | None] = [None] * len(texts)
        if self.cache is not None:
            for i, t in enumerate(texts):
                key = EmbeddingCache.key("embed", ckpt.checkpoint_id, t)
                keys[i] = key
                vec = self.cache.get(key)
                if vec is None:
                    misses.append(i)
                elif vec.shape[0] != dim:
                    raise BackendError(
                        f"cache entry dim {vec.shape[0]} != registry dim {dim} for checkpoint {ckpt.checkpoint_id}"
                    )
                else:
                    out[i] = vec
        else:
            misses = list(range(len(texts)))

        for start in range(0, len(misses), self.config.batch_size):
            chunk = misses[start : start + self.config.batch_size]
            batch_texts = [normalize_nfc(texts[i]) for i in chunk]
            got_dim, vectors = self.transport.embed(batch_texts, ckpt.checkpoint_id)
            if got_dim != dim:
                raise BackendError(
                    f"backend dim {got_dim} != registry dim {dim} for checkpoint {ckpt.checkpoint_id}"
                )
            for i, vec in zip(chunk, vectors):
                row = np.asarray(vec, dtype=np.float64)
                norm = float(np.linalg.norm(row))
                if norm == 0.0:
                    raise BackendError(f"zero-norm embedding for text {i!r:.60}")
                row32 = (row / norm).astype(np.float32)
                out[i] = row32
                if self.cache is not None:
                    self.cache.put(keys[i], row32)  # type: ignore[arg-type]
        return out

    def embed_one(self, text: str, checkpoint: EmbeddingCheckpoint | str | int) -> np.ndarray:
        return self.embed_batch([text], checkpoint)[0]

    def generate_text(self, prompt: str, params: GenerationParams | None = None) -> str:
        """Generate text (defaults: temperature 0, 500 new tokens, repetition penalty 1.1)."""
        if not prompt or not prompt.strip():
            raise ValueError("prompt must be non-empty")
        params = params or GenerationParams()
        return self.transport.generate(prompt, params)

    def cross_encode_pairs(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        """Score (text, text) pairs; one score per pair, order preserved."""
        if len(pairs) == 0:
            raise ValueError("pairs must be non-empty")
        scores = self.transport.cross_encode([(a, b) for a, b in pairs])
        return [float(s) for s in scores]


def load_registry_file(path: str | Path) -> list[EmbeddingCheckpoint]:
    """Read a checkpoint registry from a JSON file with a 'checkpoints' list."""
    import json

    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    entries = validate_checkpoints_response(payload)
    if not entries:
        raise RegistryError(f"empty checkpoint registry: {path}")
    return [EmbeddingCheckpoint(step=e["step"], checkpoint_id=e["id"], dim=e["dim"]) for e in entries]
