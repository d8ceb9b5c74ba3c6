"""Server configuration."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path


@dataclass
class ServerConfig:
    embedding_model: str = "toy:dim=32,vocab=2048,seed=0"
    generation_model: str = "toy-gen"
    cross_encoder_model: str = "toy-ce"
    device: str = "cpu"
    checkpoint_dir: str | Path = "checkpoints"
    checkpoint_interval: int = 10000

    def __post_init__(self):
        if self.checkpoint_interval <= 0:
            raise ValueError("checkpoint_interval must be positive")
        self.checkpoint_dir = Path(self.checkpoint_dir)
