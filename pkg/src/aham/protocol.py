"""Wire protocol for model backends, plus a reusable conformance check.

All model capabilities sit behind four JSON endpoints:

    POST /embed         {"texts": [str], "checkpoint": str}
                        -> {"dim": int, "vectors": [[float]]}
    POST /generate      {"prompt": str, "temperature": float,
                         "max_new_tokens": int, "repetition_penalty": float}
                        -> {"text": str}
    POST /cross_encode  {"pairs": [[str, str]]}
                        -> {"scores": [float]}
    GET  /checkpoints   -> {"checkpoints": [{"id": str, "step": int, "dim": int}]}

`run_conformance` drives any requests-compatible client (a live server
session or an in-process test client) through the protocol and checks
shapes, unit norms, ordering, and temperature-0 determinism.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Protocol

from .errors import ProtocolError

UNIT_NORM_TOL = 1e-6


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ProtocolError(message)


def validate_embed_response(payload: Any, n_texts: int) -> tuple[int, list[list[float]]]:
    _require(isinstance(payload, dict), "embed response must be an object")
    _require(isinstance(payload.get("dim"), int) and payload["dim"] > 0, "embed response needs positive int 'dim'")
    vectors = payload.get("vectors")
    _require(isinstance(vectors, list), "embed response needs 'vectors' list")
    _require(len(vectors) == n_texts, f"expected {n_texts} vectors, got {len(vectors)}")
    dim = payload["dim"]
    for i, vec in enumerate(vectors):
        _require(isinstance(vec, list) and len(vec) == dim, f"vector {i} is not length {dim}")
        _require(all(isinstance(x, (int, float)) and math.isfinite(x) for x in vec), f"vector {i} has non-finite entries")
    return dim, vectors


def validate_generate_response(payload: Any) -> str:
    _require(isinstance(payload, dict), "generate response must be an object")
    _require(isinstance(payload.get("text"), str), "generate response needs string 'text'")
    return payload["text"]


def validate_cross_encode_response(payload: Any, n_pairs: int) -> list[float]:
    _require(isinstance(payload, dict), "cross_encode response must be an object")
    scores = payload.get("scores")
    _require(isinstance(scores, list), "cross_encode response needs 'scores' list")
    _require(len(scores) == n_pairs, f"expected {n_pairs} scores, got {len(scores)}")
    _require(all(isinstance(s, (int, float)) and math.isfinite(s) for s in scores), "scores must be finite numbers")
    return [float(s) for s in scores]


def validate_checkpoints_response(payload: Any) -> list[dict]:
    _require(isinstance(payload, dict), "checkpoints response must be an object")
    entries = payload.get("checkpoints")
    _require(isinstance(entries, list), "checkpoints response needs 'checkpoints' list")
    for e in entries:
        _require(isinstance(e, dict), "checkpoint entry must be an object")
        _require(isinstance(e.get("id"), str) and e["id"], "checkpoint entry needs string 'id'")
        _require(isinstance(e.get("step"), int) and e["step"] >= 0, "checkpoint entry needs int 'step' >= 0")
        _require(isinstance(e.get("dim"), int) and e["dim"] > 0, "checkpoint entry needs positive int 'dim'")
    return entries


class WireClient(Protocol):
    """Anything with requests-style .get/.post returning .status_code/.json()."""

    def get(self, url: str) -> Any: ...

    def post(self, url: str, json: Any) -> Any: ...


@dataclass
class ConformanceReport:
    checks: list[str] = field(default_factory=list)

    def note(self, label: str) -> None:
        self.checks.append(label)


def run_conformance(client: WireClient, base_url: str = "") -> ConformanceReport:
    """Exercise a backend through the wire protocol; raise ProtocolError on violation."""
    report = ConformanceReport()

    resp = client.get(base_url + "/checkpoints")
    _require(resp.status_code == 200, f"GET /checkpoints -> {resp.status_code}")
    entries = validate_checkpoints_response(resp.json())
    _require(len(entries) >= 1, "checkpoint registry is empty")
    steps = [e["step"] for e in entries]
    _require(len(set(steps)) == len(steps), "duplicate checkpoint steps")
    _require(steps == sorted(steps), "checkpoints not sorted by step")
    _require(0 in steps, "base checkpoint (step 0) missing")
    dims = {e["dim"] for e in entries}
    _require(len(dims) == 1, f"checkpoint dims not constant: {sorted(dims)}")
    report.note("checkpoints: present, sorted, unique steps, constant dim, base included")

    base_id = next(e["id"] for e in entries if e["step"] == 0)
    texts = ["density based clustering of embedded abstracts", "margin distillation for retrieval"]
    req = {"texts": texts, "checkpoint": base_id}
    resp = client.post(base_url + "/embed", json=req)
    _require(resp.status_code == 200, f"POST /embed -> {resp.status_code}")
    dim, vectors = validate_embed_response(resp.json(), len(texts))
    _require(dim == entries[0]["dim"], "embed dim disagrees with registry dim")
    for i, vec in enumerate(vectors):
        norm = math.sqrt(sum(x * x for x in vec))
        _require(abs(norm - 1.0) <= UNIT_NORM_TOL, f"vector {i} norm {norm} not unit within {UNIT_NORM_TOL}")
    report.note("embed: shape, registry dim, unit norms")

    resp2 = client.post(base_url + "/embed", json=req)
    _require(resp2.status_code == 200, f"POST /embed (repeat) -> {resp2.status_code}")
    _, vectors2 = validate_embed_response(resp2.json(), len(texts))
    _require(vectors == vectors2, "embed is not deterministic for repeated input")
    report.note("embed: deterministic on repeat")

    gen_req = {
        "prompt": "Based on the information about the topic above, please answer: ok?",
        "temperature": 0.0,
        "max_new_tokens": 64,
        "repetition_penalty": 1.1,
    }
    resp = client.post(base_url + "/generate", json=gen_req)
    _require(resp.status_code == 200, f"POST /generate -> {resp.status_code}")
    text_a = validate_generate_response(resp.json())
    resp = client.post(base_url + "/generate", json=gen_req)
    _require(resp.status_code == 200, f"POST /generate (repeat) -> {resp.status_code}")
    text_b = validate_generate_response(resp.json())
    _require(text_a == text_b, "generate at temperature 0 is not deterministic")
    report.note("generate: deterministic at temperature 0")

    pairs = [["outlier mining", "outlier detection"], ["graph embeddings", "graph embeddings"], ["a", "b"]]
    resp = client.post(base_url + "/cross_encode", json={"pairs": pairs})
    _require(resp.status_code == 200, f"POST /cross_encode -> {resp.status_code}")
    scores_a = validate_cross_encode_response(resp.json(), len(pairs))
    resp = client.post(base_url + "/cross_encode", json={"pairs": pairs})
    scores_b = validate_cross_encode_response(resp.json(), len(pairs))
    _require(scores_a == scores_b, "cross_encode is not deterministic for repeated input")
    report.note("cross_encode: one score per pair, order preserved, deterministic")

    return report
