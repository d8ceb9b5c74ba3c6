"""Model loading for the three capabilities.

Model ids select an implementation:

    embedding      toy:dim=32,vocab=2048,seed=0   trainable hashed-vocab bag
                   st:<sentence-transformers id>  real model (weights required)
    generation     toy-gen                        deterministic rule
                   hf:<transformers id>           real causal LM (weights required)
    cross-encoder  toy-ce                         token-overlap count
                   st-ce:<cross-encoder id>       real cross-encoder

The toy family is fully offline and deterministic, so the server and its
tests run with no downloaded weights.
"""
from __future__ import annotations

import hashlib
import re
from pathlib import Path

import numpy as np
import torch

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def _bucket(token: str, vocab: int) -> int:
    digest = hashlib.sha256(token.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") % vocab


def _parse_kv(spec: str) -> dict[str, str]:
    out = {}
    for part in spec.split(","):
        if part:
            key, _, value = part.partition("=")
            out[key.strip()] = value.strip()
    return out


class ToyEmbedder(torch.nn.Module):
    """Trainable hashed bag-of-words embedding model.

    Tokens hash into a fixed vocabulary; a text embeds as the mean of its
    token embeddings. Small enough to fine-tune in milliseconds, which is
    all the smoke-test training run needs.
    """

    def __init__(self, dim: int = 32, vocab: int = 2048, seed: int = 0):
        super().__init__()
        self.dim = dim
        self.vocab = vocab
        self.seed = seed
        generator = torch.Generator().manual_seed(seed)
        weights = torch.randn(vocab, dim, generator=generator) / dim**0.5
        self.embedding = torch.nn.EmbeddingBag(vocab, dim, mode="mean")
        with torch.no_grad():
            self.embedding.weight.copy_(weights)

    def forward(self, texts: list[str]) -> torch.Tensor:
        """Unit-normalized embeddings with gradient support."""
        flat: list[int] = []
        offsets: list[int] = []
        for text in texts:
            offsets.append(len(flat))
            tokens = tokenize(text)
            if not tokens:
                tokens = [""]
            flat.extend(_bucket(t, self.vocab) for t in tokens)
        indices = torch.tensor(flat, dtype=torch.long)
        offs = torch.tensor(offsets, dtype=torch.long)
        raw = self.embedding(indices, offs)
        return torch.nn.functional.normalize(raw, dim=1, eps=1e-12)

    @torch.no_grad()
    def encode(self, texts: list[str]) -> np.ndarray:
        return self.forward(texts).cpu().numpy().astype(np.float32)

    def save(self, path: str | Path) -> None:
        torch.save(
            {"dim": self.dim, "vocab": self.vocab, "seed": self.seed, "state": self.state_dict()},
            path,
        )

    @classmethod
    def load(cls, path: str | Path) -> "ToyEmbedder":
        payload = torch.load(path, map_location="cpu", weights_only=True)
        model = cls(dim=payload["dim"], vocab=payload["vocab"], seed=payload["seed"])
        model.load_state_dict(payload["state"])
        return model


class StEmbedder:
    """sentence-transformers adapter; needs downloadable weights."""

    def __init__(self, name: str, device: str = "cpu"):
        from sentence_transformers import SentenceTransformer

        self.model = SentenceTransformer(name, device=device)
        self.dim = self.model.get_sentence_embedding_dimension()

    def forward(self, texts: list[str]) -> torch.Tensor:
        features = self.model.tokenize(texts)
        features = {k: v.to(self.model.device) for k, v in features.items()}
        out = self.model(features)["sentence_embedding"]
        return torch.nn.functional.normalize(out, dim=1, eps=1e-12)

    def encode(self, texts: list[str]) -> np.ndarray:
        return np.asarray(
            self.model.encode(texts, normalize_embeddings=True, convert_to_numpy=True),
            dtype=np.float32,
        )

    def save(self, path: str | Path) -> None:
        self.model.save(str(path))

    def parameters(self):
        return self.model.parameters()

    def train(self):
        self.model.train()

    def eval(self):
        self.model.eval()


def load_embedder(model_id: str, device: str = "cpu"):
    if model_id.startswith("toy:") or model_id == "toy":
        kv = _parse_kv(model_id.partition(":")[2])
        return ToyEmbedder(
            dim=int(kv.get("dim", 32)), vocab=int(kv.get("vocab", 2048)), seed=int(kv.get("seed", 0))
        )
    if model_id.startswith("st:"):
        return StEmbedder(model_id[3:], device=device)
    raise ValueError(f"unknown embedding model id {model_id!r}")


class ToyGenerator:
    """Deterministic rule-based generator mirroring the engine's mock.

    Topic-label prompts get their first keyword back; anything else gets
    the first few content words of the last line. Output never depends on
    sampling, so temperature 0 determinism is trivial.
    """

    def generate(self, prompt: str, temperature: float, max_new_tokens: int, repetition_penalty: float) -> str:
        matches = re.findall(r"keywords:\s*(.+)", prompt, flags=re.IGNORECASE)
        if matches:
            return matches[-1].split(",")[0].strip().rstrip(".")
        lines = [l for l in prompt.splitlines() if l.strip()]
        tokens = tokenize(lines[-1])[:4] if lines else []
        text = " ".join(tokens) if tokens else "ok"
        return " ".join(text.split()[:max_new_tokens])


class HfGenerator:
    """transformers causal-LM adapter; needs downloadable weights."""

    def __init__(self, name: str, device: str = "cpu"):
        from transformers import AutoModelForCausalLM, AutoTokenizer

        self.tokenizer = AutoTokenizer.from_pretrained(name)
        self.model = AutoModelForCausalLM.from_pretrained(name).to(device)
        self.device = device

    def generate(self, prompt: str, temperature: float, max_new_tokens: int, repetition_penalty: float) -> str:
        inputs = self.tokenizer(prompt, return_tensors="pt").to(self.device)
        output = self.model.generate(
            **inputs,
            do_sample=temperature > 0,
            temperature=temperature if temperature > 0 else None,
            max_new_tokens=max_new_tokens,
            repetition_penalty=repetition_penalty,
        )
        return self.tokenizer.decode(output[0][inputs["input_ids"].shape[1] :], skip_special_tokens=True)


def load_generator(model_id: str, device: str = "cpu"):
    if model_id == "toy-gen":
        return ToyGenerator()
    if model_id.startswith("hf:"):
        return HfGenerator(model_id[3:], device=device)
    raise ValueError(f"unknown generation model id {model_id!r}")


class ToyCrossEncoder:
    """Scores a pair as its shared distinct-token count."""

    def score_pairs(self, pairs: list[tuple[str, str]]) -> list[float]:
        return [float(len(set(tokenize(a)) & set(tokenize(b)))) for a, b in pairs]


class StCrossEncoder:
    def __init__(self, name: str, device: str = "cpu"):
        from sentence_transformers import CrossEncoder

        self.model = CrossEncoder(name, device=device)

    def score_pairs(self, pairs: list[tuple[str, str]]) -> list[float]:
        return [float(s) for s in self.model.predict([list(p) for p in pairs])]


def load_cross_encoder(model_id: str, device: str = "cpu"):
    if model_id == "toy-ce":
        return ToyCrossEncoder()
    if model_id.startswith("st-ce:"):
        return StCrossEncoder(model_id[6:], device=device)
    raise ValueError(f"unknown cross-encoder model id {model_id!r}")
