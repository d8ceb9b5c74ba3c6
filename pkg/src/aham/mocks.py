"""Deterministic in-process mock backends.

These let the whole pipeline (and the full test suite) run with no model
server: a hashed bag-of-words embedder, a rule-based generator, and a
token-overlap cross-encoder. All of them are pure functions of their
inputs, so temperature-0 determinism and cache invariants hold exactly.
"""
from __future__ import annotations

import hashlib
import re
from typing import Callable, Sequence
from urllib.parse import parse_qs, urlparse

import numpy as np

from .backends import EmbeddingCheckpoint, GenerationParams
from .text import content_tokens, tokenize


def _token_hash(token: str, salt: str = "") -> int:
    digest = hashlib.sha256((salt + token).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


class HashedBagEmbedder:
    """Embeds text as a hashed bag of word tokens.

    Each token deterministically owns one coordinate (sha256 bucket); a
    text maps to the sum of its token indicators. Texts sharing tokens
    are similar, and texts whose tokens occupy disjoint buckets are
    exactly orthogonal.
    """

    def __init__(self, dim: int = 64, vary_by_checkpoint: bool = False):
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.vary_by_checkpoint = vary_by_checkpoint

    def bucket(self, token: str, checkpoint_id: str = "") -> int:
        salt = checkpoint_id if self.vary_by_checkpoint else ""
        return _token_hash(token, salt) % self.dim

    def embed_text(self, text: str, checkpoint_id: str = "") -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        for token in tokenize(text):
            vec[self.bucket(token, checkpoint_id)] += 1.0
        return vec


class RuleBasedGenerator:
    """Generator backed by a plain prompt -> text function."""

    def __init__(self, fn: Callable[[str], str]):
        self.fn = fn

    def generate(self, prompt: str) -> str:
        return self.fn(prompt)

    @classmethod
    def fixed(cls, text: str) -> "RuleBasedGenerator":
        return cls(lambda _prompt: text)

    @classmethod
    def sequence(cls, responses: Sequence[str]) -> "RuleBasedGenerator":
        """Cycle through a fixed response sequence, one item per call."""
        state = {"i": 0}

        def fn(_prompt: str) -> str:
            out = responses[state["i"] % len(responses)]
            state["i"] += 1
            return out

        return cls(fn)

    @classmethod
    def echo_first_keyword(cls) -> "RuleBasedGenerator":
        return cls(lambda prompt: first_keyword_in_prompt(prompt) or "")

    @classmethod
    def first_words_question(cls, n_words: int = 5) -> "RuleBasedGenerator":
        def fn(prompt: str) -> str:
            passage = passage_in_prompt(prompt)
            words = passage.split()[:n_words]
            return (" ".join(words) + "?") if words else ""

        return cls(fn)


_KEYWORDS_RE = re.compile(r"keywords:\s*(.+)", re.IGNORECASE)
_PASSAGE_RE = re.compile(r"Passage:\s*(.+?)(?:\n|$)", re.DOTALL)
_TITLE_RE = re.compile(r"document:\s*\n?(.+?)(?:\n|$)", re.IGNORECASE)


def first_keyword_in_prompt(prompt: str) -> str:
    """First comma-separated item on the last 'keywords:' line of a prompt."""
    matches = _KEYWORDS_RE.findall(prompt)
    if not matches:
        return ""
    first = matches[-1].split(",")[0]
    return first.strip().rstrip(".")


def passage_in_prompt(prompt: str) -> str:
    """Text following 'Passage:' up to the next line break."""
    m = _PASSAGE_RE.search(prompt)
    if not m:
        return ""
    return m.group(1).splitlines()[0].strip()


def default_mock_generator() -> RuleBasedGenerator:
    """Composite rule covering every prompt the pipeline issues.

    Query prompts get a first-words question, classification prompts a
    title-hash class, topic-label prompts the first keyword.
    """

    def fn(prompt: str) -> str:
        if "Passage:" in prompt:
            passage = passage_in_prompt(prompt)
            words = [t for t in content_tokens(passage)][:5]
            return (" ".join(words) + "?") if words else ""
        if "'methodology' and 'application'" in prompt:
            m = _TITLE_RE.findall(prompt)
            title = m[-1].strip() if m else ""
            return "methodology" if _token_hash(title) % 2 == 0 else "application"
        kw = first_keyword_in_prompt(prompt)
        return kw if kw else "ok"

    return RuleBasedGenerator(fn)


class TokenOverlapCrossEncoder:
    """Scores a pair as the number of shared distinct word tokens."""

    def score(self, a: str, b: str) -> float:
        return float(len(set(tokenize(a)) & set(tokenize(b))))


class MockTransport:
    """In-process Transport over the three mocks and a checkpoint list."""

    def __init__(
        self,
        embedder: HashedBagEmbedder | None = None,
        generator: RuleBasedGenerator | None = None,
        cross_encoder: TokenOverlapCrossEncoder | None = None,
        checkpoints: Sequence[EmbeddingCheckpoint] | None = None,
        dim: int = 64,
    ):
        self.embedder = embedder or HashedBagEmbedder(dim=dim)
        self.generator = generator or default_mock_generator()
        self.cross_encoder = cross_encoder or TokenOverlapCrossEncoder()
        if checkpoints is None:
            checkpoints = [EmbeddingCheckpoint(step=0, checkpoint_id="step_0", dim=self.embedder.dim)]
        self._checkpoints = list(checkpoints)

    def embed(self, texts: Sequence[str], checkpoint_id: str) -> tuple[int, list[list[float]]]:
        vectors = [self.embedder.embed_text(t, checkpoint_id).tolist() for t in texts]
        return self.embedder.dim, vectors

    def generate(self, prompt: str, params: GenerationParams) -> str:
        return self.generator.generate(prompt)

    def cross_encode(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        return [self.cross_encoder.score(a, b) for a, b in pairs]

    def checkpoints(self) -> list[EmbeddingCheckpoint]:
        return list(self._checkpoints)


def mock_transport_from_url(url: str) -> MockTransport:
    """Build a MockTransport from a mock:// endpoint.

    Example: mock://hashed?dim=64&steps=0,10000,20000&vary=1
    """
    parsed = urlparse(url)
    if parsed.scheme != "mock":
        raise ValueError(f"not a mock endpoint: {url!r}")
    params = parse_qs(parsed.query)
    dim = int(params.get("dim", ["64"])[0])
    steps = [int(s) for s in params.get("steps", ["0"])[0].split(",") if s != ""]
    vary = params.get("vary", ["0"])[0] not in ("0", "false", "")
    embedder = HashedBagEmbedder(dim=dim, vary_by_checkpoint=vary)
    checkpoints = [
        EmbeddingCheckpoint(step=s, checkpoint_id=f"step_{s}", dim=dim) for s in sorted(steps)
    ]
    return MockTransport(embedder=embedder, checkpoints=checkpoints)
