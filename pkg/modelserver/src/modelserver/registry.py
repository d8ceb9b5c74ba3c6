"""Checkpoint directory management.

Layout: <checkpoint_dir>/step_<n>/ holding meta.json {"step", "dim"} and
the model weights. Step 0 is the in-memory base model and is always
listed first.
"""
from __future__ import annotations

import json
from pathlib import Path

from .models import ToyEmbedder


class CheckpointStore:
    def __init__(self, root: str | Path, base_model, dim: int):
        self.root = Path(root)
        self.base_model = base_model
        self.dim = dim
        self._cache = {"step_0": base_model}

    def save(self, model, step: int) -> Path:
        out = self.root / f"step_{step}"
        out.mkdir(parents=True, exist_ok=True)
        model.save(out / "weights.pt")
        (out / "meta.json").write_text(
            json.dumps({"step": step, "dim": self.dim}, sort_keys=True) + "\n", encoding="utf-8"
        )
        self._cache[f"step_{step}"] = model
        return out

    def saved_steps(self) -> list[int]:
        steps = []
        if self.root.is_dir():
            for child in self.root.glob("step_*"):
                meta = child / "meta.json"
                if meta.is_file():
                    steps.append(int(json.loads(meta.read_text())["step"]))
        return sorted(s for s in steps if s != 0)

    def listing(self) -> list[dict]:
        entries = [{"id": "step_0", "step": 0, "dim": self.dim}]
        for step in self.saved_steps():
            entries.append({"id": f"step_{step}", "step": step, "dim": self.dim})
        return entries

    def resolve(self, checkpoint_id: str):
        if checkpoint_id in self._cache:
            return self._cache[checkpoint_id]
        path = self.root / checkpoint_id / "weights.pt"
        if not path.is_file():
            raise KeyError(f"unknown checkpoint {checkpoint_id!r}")
        model = ToyEmbedder.load(path)
        self._cache[checkpoint_id] = model
        return model
