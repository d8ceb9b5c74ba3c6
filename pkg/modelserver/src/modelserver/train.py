"""Margin-distillation fine-tuning over GPL triplet data.

The student embedding model is trained so that its score margin

    margin_hat = E(q) . E(p+) - E(q) . E(p-)        (unit-norm embeddings)

matches the teacher margin stored in each triplet, by minimizing the
mean squared error between the two. A checkpoint is saved and registered
every `checkpoint_interval` optimizer steps.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import torch

from .registry import CheckpointStore

logger = logging.getLogger(__name__)

LOG_EVERY = 100


@dataclass
class Triplet:
    query: str
    positive: str
    negative: str
    margin: float


@dataclass
class TrainReport:
    steps: int
    initial_loss: float
    final_loss: float
    checkpoint_steps: list[int] = field(default_factory=list)


def load_corpus_texts(corpus_path: str | Path) -> dict[str, str]:
    """id -> title+abstract text from the engine's corpus JSONL."""
    texts: dict[str, str] = {}
    with open(corpus_path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            title = (rec.get("title") or "").strip()
            abstract = (rec.get("abstract") or "").strip()
            texts[rec["id"]] = f"{title} {abstract}" if abstract else title
    return texts


def load_triplets(dataset_path: str | Path, corpus_path: str | Path) -> list[Triplet]:
    """Resolve a GPL dataset file (header line + triplet lines) to texts."""
    texts = load_corpus_texts(corpus_path)
    triplets: list[Triplet] = []
    with open(dataset_path, "r", encoding="utf-8") as fh:
        lines = [l for l in fh.read().splitlines() if l.strip()]
    if not lines:
        raise ValueError(f"empty GPL dataset file: {dataset_path}")
    header = json.loads(lines[0])
    if "seed" not in header:
        raise ValueError("GPL dataset file is missing its header line")
    for line in lines[1:]:
        rec = json.loads(line)
        triplets.append(
            Triplet(
                query=rec["query"],
                positive=texts[rec["pos"]],
                negative=texts[rec["neg"]],
                margin=float(rec["margin"]),
            )
        )
    return triplets


def _batch_loss(model, batch: list[Triplet]) -> torch.Tensor:
    queries = model.forward([t.query for t in batch])
    positives = model.forward([t.positive for t in batch])
    negatives = model.forward([t.negative for t in batch])
    student = (queries * positives).sum(dim=1) - (queries * negatives).sum(dim=1)
    teacher = torch.tensor([t.margin for t in batch], dtype=student.dtype)
    return torch.nn.functional.mse_loss(student, teacher)


@torch.no_grad()
def dataset_loss(model, triplets: list[Triplet], batch_size: int = 64) -> float:
    total = 0.0
    count = 0
    for start in range(0, len(triplets), batch_size):
        batch = triplets[start : start + batch_size]
        total += float(_batch_loss(model, batch)) * len(batch)
        count += len(batch)
    return total / count


def train_gpl(
    model,
    store: CheckpointStore,
    dataset_path: str | Path,
    corpus_path: str | Path,
    total_steps: int = 50000,
    checkpoint_interval: int = 10000,
    batch_size: int = 32,
    learning_rate: float = 2e-3,
    seed: int = 42,
) -> TrainReport:
    """Run margin-distillation for total_steps, checkpointing on schedule.

    A non-finite loss aborts immediately; the last saved checkpoint
    remains the latest registered state.
    """
    triplets = load_triplets(dataset_path, corpus_path)
    if not triplets:
        raise ValueError("no triplets to train on")
    if checkpoint_interval <= 0:
        raise ValueError("checkpoint_interval must be positive")

    initial_loss = dataset_loss(model, triplets)
    optimizer = torch.optim.Adam(model.parameters(), lr=learning_rate)
    generator = torch.Generator().manual_seed(seed)

    report = TrainReport(steps=0, initial_loss=initial_loss, final_loss=initial_loss)
    order: list[int] = []
    for step in range(1, total_steps + 1):
        if len(order) < batch_size:
            order = torch.randperm(len(triplets), generator=generator).tolist() + order
        batch = [triplets[i] for i in [order.pop() for _ in range(min(batch_size, len(triplets)))]]

        optimizer.zero_grad()
        loss = _batch_loss(model, batch)
        if not torch.isfinite(loss):
            logger.error("non-finite loss at step %d; aborting with last good checkpoint", step)
            break
        loss.backward()
        optimizer.step()
        report.steps = step

        if step % LOG_EVERY == 0:
            logger.info("step %d: margin mse %.6f", step, loss.item())
        if step % checkpoint_interval == 0:
            store.save(model, step)
            report.checkpoint_steps.append(step)

    report.final_loss = dataset_loss(model, triplets)
    return report
