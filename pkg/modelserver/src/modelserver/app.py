"""FastAPI application implementing the engine's wire protocol.

    POST /embed         {"texts": [str], "checkpoint": str}
    POST /generate      {"prompt": str, "temperature": float,
                         "max_new_tokens": int, "repetition_penalty": float}
    POST /cross_encode  {"pairs": [[str, str]]}
    GET  /checkpoints

Embeddings come back unit-normalized; generation at temperature 0 is
deterministic; inference stays available while a training job runs.
"""
from __future__ import annotations

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .config import ServerConfig
from .models import load_cross_encoder, load_embedder, load_generator
from .registry import CheckpointStore


class EmbedRequest(BaseModel):
    texts: list[str] = Field(min_length=1)
    checkpoint: str


class GenerateRequest(BaseModel):
    prompt: str = Field(min_length=1)
    temperature: float = 0.0
    max_new_tokens: int = 500
    repetition_penalty: float = 1.1


class CrossEncodeRequest(BaseModel):
    pairs: list[list[str]] = Field(min_length=1)


def create_app(config: ServerConfig | None = None) -> FastAPI:
    config = config or ServerConfig()
    embedder = load_embedder(config.embedding_model, device=config.device)
    generator = load_generator(config.generation_model, device=config.device)
    cross_encoder = load_cross_encoder(config.cross_encoder_model, device=config.device)
    store = CheckpointStore(config.checkpoint_dir, embedder, embedder.dim)

    app = FastAPI(title="aham model server")
    app.state.config = config
    app.state.checkpoints = store

    @app.get("/checkpoints")
    def checkpoints():
        return {"checkpoints": store.listing()}

    @app.post("/embed")
    def embed(request: EmbedRequest):
        for i, text in enumerate(request.texts):
            if not text.strip():
                raise HTTPException(status_code=400, detail=f"text {i} is empty")
        try:
            model = store.resolve(request.checkpoint)
        except KeyError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        vectors = model.encode(request.texts).astype(np.float64)
        norms = np.linalg.norm(vectors, axis=1, keepdims=True)
        if (norms == 0).any():
            raise HTTPException(status_code=400, detail="zero-norm embedding")
        vectors = vectors / norms
        return {"dim": int(vectors.shape[1]), "vectors": vectors.tolist()}

    @app.post("/generate")
    def generate(request: GenerateRequest):
        if request.temperature < 0:
            raise HTTPException(status_code=400, detail="temperature must be >= 0")
        if request.max_new_tokens <= 0:
            raise HTTPException(status_code=400, detail="max_new_tokens must be positive")
        text = generator.generate(
            request.prompt,
            temperature=request.temperature,
            max_new_tokens=request.max_new_tokens,
            repetition_penalty=request.repetition_penalty,
        )
        return {"text": text}

    @app.post("/cross_encode")
    def cross_encode(request: CrossEncodeRequest):
        for i, pair in enumerate(request.pairs):
            if len(pair) != 2:
                raise HTTPException(status_code=400, detail=f"pair {i} must have exactly two texts")
        scores = cross_encoder.score_pairs([(a, b) for a, b in request.pairs])
        return {"scores": [float(s) for s in scores]}

    return app
