"""Adaptation-aware topic modeling engine.

Pipeline: ingest a document corpus, build domain-adaptation training
data, run embed -> reduce -> cluster -> represent -> name at each
embedding checkpoint, score each checkpoint by outlier ratio times mean
pairwise topic-name similarity, and select the best checkpoint.
"""

from .backends import BackendClient, BackendConfig, EmbeddingCheckpoint, GenerationParams
from .cluster import Assignment, ClustererConfig, cluster_hdbscan
from .corpus import Corpus, Document, ingest_corpus, yearly_counts
from .errors import AhamError
from .gpl import GplDataset, GplTriplet, build_gpl_dataset
from .metrics import (
    AhamScore,
    aham_objective,
    greedy_semantic_score,
    label_cosine_similarity,
    levenshtein_similarity,
    mean_pairwise_similarity,
    outlier_ratio,
    select_best_checkpoint,
)
from .naming import PromptBundle, TopicLabel, classify_document, label_topic, sanitize_label
from .reduce import ReducerConfig, fit_reduce
from .runner import RunManifest, RunStore, TopicModel, cmd_evaluate, cmd_model, topic_evolution_map
from .topics import TopicRepresentation, central_documents, ctfidf_weights, extract_topic_keywords

__version__ = "0.1.0"
