"""Model server for the topic-modeling engine's wire protocol."""

from .app import create_app
from .config import ServerConfig
from .models import ToyEmbedder, load_cross_encoder, load_embedder, load_generator
from .registry import CheckpointStore
from .train import TrainReport, dataset_loss, load_triplets, train_gpl

__version__ = "0.1.0"
