"""Run orchestration: persistent run store, pipeline stages, reports.

A run directory is append-only and fully determines its outputs:

    runs/<run_id>/
      manifest.json            reproducibility record
      corpus.jsonl             ingested documents
      gpl.jsonl                adaptation training data
      cache/                   embedding cache
      ckpt_<step>/             one directory per modeled checkpoint
        embeddings.bin reduced.bin assignment.json topics.json
        labels.json ctfidf.json
      scores.json report.tsv trajectory.csv evolution.json
      classifications.json class_trend.csv

Every emitted table re-derives from the persisted JSON artifacts alone.
"""
from __future__ import annotations

import dataclasses
import json
import os
import struct
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from .backends import BackendClient, BackendConfig, EmbeddingCheckpoint, HttpTransport
from .cluster import Assignment, ClustererConfig, cluster_hdbscan
from .corpus import Corpus, ingest_corpus, write_corpus_jsonl, yearly_counts
from .errors import AhamError, PipelineError
from .gpl import GplDataset, build_gpl_dataset
from .metrics import AhamScore, aham_objective, make_similarity_fn, select_best_checkpoint
from .mocks import mock_transport_from_url
from .naming import OUTLIER_LABEL, OUTLIER_TOPIC_ID, PromptBundle, classify_document, label_all_topics, load_labels, save_labels
from .reduce import ReducerConfig, fit_reduce
from .topics import TopicRepresentation, build_topic_representations, ctfidf_weights, save_representations, top_ctfidf_terms

ENV_BACKEND_URL = "AHAM_BACKEND_URL"

METRIC_SHORT = {"levenshtein": "lev", "greedy_semantic": "bert_like", "label_cosine": "cos"}
SHORT_TO_METRIC = {"lev": "levenshtein", "bert": "greedy_semantic", "bert_like": "greedy_semantic", "cos": "label_cosine"}


@dataclass
class RunManifest:
    run_id: str
    corpus_path: str
    endpoint: str
    seed: int = 42
    reducer: ReducerConfig = dataclasses.field(default_factory=ReducerConfig)
    clusterer: ClustererConfig = dataclasses.field(default_factory=ClustererConfig)
    prompt_bundle_path: str | None = None
    created_at: str = ""

    def to_json(self) -> dict:
        return {
            "run_id": self.run_id,
            "corpus_path": self.corpus_path,
            "endpoint": self.endpoint,
            "seed": self.seed,
            "reducer": dataclasses.asdict(self.reducer),
            "clusterer": dataclasses.asdict(self.clusterer),
            "prompt_bundle_path": self.prompt_bundle_path,
            "created_at": self.created_at,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "RunManifest":
        return cls(
            run_id=payload["run_id"],
            corpus_path=payload["corpus_path"],
            endpoint=payload["endpoint"],
            seed=payload["seed"],
            reducer=ReducerConfig(**payload["reducer"]),
            clusterer=ClustererConfig(**payload["clusterer"]),
            prompt_bundle_path=payload.get("prompt_bundle_path"),
            created_at=payload.get("created_at", ""),
        )


def write_matrix(path: str | Path, matrix: np.ndarray) -> None:
    """Binary matrix file: uint32 rows, uint32 cols, row-major float32 LE."""
    arr = np.ascontiguousarray(matrix, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<II", arr.shape[0], arr.shape[1]))
        fh.write(arr.tobytes())


def read_matrix(path: str | Path) -> np.ndarray:
    blob = Path(path).read_bytes()
    rows, cols = struct.unpack("<II", blob[:8])
    return np.frombuffer(blob[8:], dtype="<f4").reshape(rows, cols).copy()


def _dump_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n", encoding="utf-8")


@dataclass
class TopicModel:
    """Everything the pipeline derives for one checkpoint."""

    checkpoint: EmbeddingCheckpoint
    assignment: Assignment
    representations: list[TopicRepresentation]
    labels: dict[int, str]
    corpus_fingerprint: str


@dataclass(frozen=True)
class EvolutionEdge:
    from_id: int
    from_label: str
    to_id: int
    to_label: str
    doc_count: int


class RunStore:
    """Paths and persisted artifacts of one run."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    @property
    def manifest_path(self) -> Path:
        return self.root / "manifest.json"

    @property
    def corpus_path(self) -> Path:
        return self.root / "corpus.jsonl"

    @property
    def gpl_path(self) -> Path:
        return self.root / "gpl.jsonl"

    @property
    def scores_path(self) -> Path:
        return self.root / "scores.json"

    def ckpt_dir(self, step: int) -> Path:
        return self.root / f"ckpt_{step}"

    def modeled_steps(self) -> list[int]:
        steps = []
        for child in self.root.glob("ckpt_*"):
            if (child / "labels.json").is_file():
                steps.append(int(child.name.split("_", 1)[1]))
        return sorted(steps)

    def load_manifest(self) -> RunManifest:
        return RunManifest.from_json(json.loads(self.manifest_path.read_text(encoding="utf-8")))

    def load_corpus(self) -> Corpus:
        return ingest_corpus(self.corpus_path, format="jsonl")

    def load_scores(self) -> list[AhamScore]:
        payload = json.loads(self.scores_path.read_text(encoding="utf-8"))
        return [AhamScore.from_json(item) for item in payload["scores"]]


def init_run(
    store_root: str | Path,
    run_id: str,
    corpus_file: str | Path,
    endpoint: str,
    corpus_format: str | None = None,
    seed: int = 42,
    reducer: ReducerConfig | None = None,
    clusterer: ClustererConfig | None = None,
    prompt_bundle_path: str | None = None,
) -> RunStore:
    """Ingest a corpus and create the run directory with its manifest."""
    store = RunStore(Path(store_root) / run_id)
    store.root.mkdir(parents=True, exist_ok=True)
    corpus = ingest_corpus(corpus_file, format=corpus_format)
    write_corpus_jsonl(corpus, store.corpus_path)
    reducer = reducer or ReducerConfig(seed=seed)
    clusterer = clusterer or ClustererConfig()
    manifest = RunManifest(
        run_id=run_id,
        corpus_path=str(corpus_file),
        endpoint=endpoint,
        seed=seed,
        reducer=reducer,
        clusterer=clusterer,
        prompt_bundle_path=prompt_bundle_path,
        created_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )
    _dump_json(store.manifest_path, manifest.to_json())
    return store


def connect_backends(manifest: RunManifest, store: RunStore | None = None) -> BackendClient:
    """Backend client from the manifest endpoint; AHAM_BACKEND_URL overrides."""
    endpoint = os.environ.get(ENV_BACKEND_URL, manifest.endpoint)
    cache_dir = (store.root / "cache") if store is not None else None
    config = BackendConfig(endpoint=endpoint, cache_dir=cache_dir)
    if endpoint.startswith("mock:"):
        transport = mock_transport_from_url(endpoint)
    else:
        transport = HttpTransport(endpoint, timeout=config.timeout)
    return BackendClient(transport, config)


def cmd_gpl_build(
    store: RunStore,
    client: BackendClient,
    q: int = 3,
    nucleus_p: float = 0.9,
    pool_size: int = 50,
    seed: int | None = None,
) -> GplDataset:
    manifest = store.load_manifest()
    corpus = store.load_corpus()
    return build_gpl_dataset(
        corpus,
        client,
        q=q,
        nucleus_p=nucleus_p,
        pool_size=pool_size,
        seed=manifest.seed if seed is None else seed,
        out_path=store.gpl_path,
    )


def cmd_model(
    store: RunStore,
    client: BackendClient,
    checkpoint: EmbeddingCheckpoint | str | int,
) -> TopicModel:
    """Run embed -> reduce -> cluster -> represent -> name for one checkpoint.

    Every intermediate artifact is persisted under ckpt_<step>/; with a
    warm cache a re-run rewrites identical bytes.
    """
    manifest = store.load_manifest()
    corpus = store.load_corpus()
    ckpt = client.registry.resolve(checkpoint)
    out = store.ckpt_dir(ckpt.step)
    out.mkdir(parents=True, exist_ok=True)

    try:
        embeddings = client.embed_batch(corpus.texts(), ckpt)
        write_matrix(out / "embeddings.bin", embeddings)
    except AhamError as exc:
        raise PipelineError("embed", str(exc)) from exc

    try:
        if len(corpus) <= manifest.reducer.n_neighbors:
            # too few rows for a neighborhood graph: keep the leading
            # coordinates so the degenerate model still persists artifacts
            reduced = np.ascontiguousarray(
                embeddings[:, : manifest.reducer.n_components], dtype=np.float32
            )
        else:
            reduced = fit_reduce(embeddings, manifest.reducer)
        write_matrix(out / "reduced.bin", reduced)
    except (AhamError, ValueError) as exc:
        raise PipelineError("reduce", str(exc)) from exc

    try:
        assignment = cluster_hdbscan(reduced, manifest.clusterer)
        assignment.save(out / "assignment.json")
    except (AhamError, ValueError) as exc:
        raise PipelineError("cluster", str(exc)) from exc

    try:
        representations = build_topic_representations(corpus, assignment, embeddings, client, ckpt)
        save_representations(representations, out / "topics.json")
        if assignment.topic_count >= 1:
            weights, vocab = ctfidf_weights(corpus, assignment)
            _dump_json(out / "ctfidf.json", {"topics": top_ctfidf_terms(weights, vocab)})
        else:
            _dump_json(out / "ctfidf.json", {"topics": []})
    except (AhamError, ValueError) as exc:
        raise PipelineError("represent", str(exc)) from exc

    try:
        bundle = PromptBundle.load(manifest.prompt_bundle_path) if manifest.prompt_bundle_path else PromptBundle()
        labels = label_all_topics(representations, corpus, client, bundle)
        save_labels(labels, out / "labels.json")
    except (AhamError, ValueError) as exc:
        raise PipelineError("name", str(exc)) from exc

    return TopicModel(
        checkpoint=ckpt,
        assignment=assignment,
        representations=representations,
        labels={l.topic_id: l.label for l in labels},
        corpus_fingerprint=corpus.fingerprint(),
    )


def load_topic_model(store: RunStore, client: BackendClient, step: int) -> TopicModel:
    """Rehydrate a modeled checkpoint from its persisted artifacts."""
    out = store.ckpt_dir(step)
    if not (out / "labels.json").is_file():
        raise AhamError(f"checkpoint step {step} has not been modeled")
    corpus = store.load_corpus()
    assignment = Assignment.load(out / "assignment.json")
    labels = load_labels(out / "labels.json")
    reps_payload = json.loads((out / "topics.json").read_text(encoding="utf-8"))
    embeddings = read_matrix(out / "embeddings.bin")
    reps = []
    for item in reps_payload:
        members = assignment.members(item["topic_id"])
        centroid = embeddings[members].mean(axis=0)
        norm = np.linalg.norm(centroid)
        reps.append(
            TopicRepresentation(
                topic_id=item["topic_id"],
                keywords=[(term, float(score)) for term, score in item["keywords"]],
                central_doc_ids=list(item["central_docs"]),
                centroid=centroid / norm if norm > 0 else centroid,
            )
        )
    return TopicModel(
        checkpoint=client.registry.resolve(step),
        assignment=assignment,
        representations=reps,
        labels=labels,
        corpus_fingerprint=corpus.fingerprint(),
    )


def cmd_evaluate(
    store: RunStore,
    client: BackendClient,
    metrics: Sequence[str] = ("levenshtein", "greedy_semantic", "label_cosine"),
    selection_metric: str = "label_cosine",
) -> tuple[list[AhamScore], EmbeddingCheckpoint]:
    """Score every modeled checkpoint and select the objective argmin.

    Embedding-based label similarities are computed with the base (step
    0) model so values are comparable across checkpoints.
    """
    steps = store.modeled_steps()
    if not steps:
        raise AhamError("no modeled checkpoints in this run")
    base = client.registry.base
    sims = {name: make_similarity_fn(name, client, base) for name in metrics}

    scores = []
    for step in steps:
        out = store.ckpt_dir(step)
        assignment = Assignment.load(out / "assignment.json")
        labels_map = load_labels(out / "labels.json")
        topic_labels = [labels_map[t] for t in range(assignment.topic_count)]
        ckpt = client.registry.resolve(step)
        scores.append(aham_objective(assignment, topic_labels, sims, ckpt))

    selected = select_best_checkpoint(scores, metric=selection_metric)
    payload = {
        "scores": [s.to_json() for s in scores],
        "selection_metric": selection_metric,
        "selected_step": selected.step,
    }
    _dump_json(store.scores_path, payload)
    return scores, selected


def cmd_select(store: RunStore, metric: str = "label_cosine") -> EmbeddingCheckpoint:
    """Checkpoint selection from persisted scores."""
    payload = json.loads(store.scores_path.read_text(encoding="utf-8"))
    scores = [AhamScore.from_json(item) for item in payload["scores"]]
    return select_best_checkpoint(scores, metric=metric)


def topic_evolution_map(model_a: TopicModel, model_b: TopicModel) -> list[EvolutionEdge]:
    """Document flow between the topics of two models of the same corpus.

    Includes the outlier cluster on both sides; zero-count pairs are
    omitted, so edge counts sum to the corpus size.
    """
    if model_a.corpus_fingerprint != model_b.corpus_fingerprint:
        raise AhamError("models were built on different corpora")
    if len(model_a.assignment.labels) != len(model_b.assignment.labels):
        raise AhamError("assignments have different lengths")
    counts: dict[tuple[int, int], int] = {}
    for la, lb in zip(model_a.assignment.labels, model_b.assignment.labels):
        counts[(la, lb)] = counts.get((la, lb), 0) + 1
    edges = []
    for (la, lb), n in sorted(counts.items()):
        edges.append(
            EvolutionEdge(
                from_id=la,
                from_label=model_a.labels.get(la, OUTLIER_LABEL if la == OUTLIER_TOPIC_ID else str(la)),
                to_id=lb,
                to_label=model_b.labels.get(lb, OUTLIER_LABEL if lb == OUTLIER_TOPIC_ID else str(lb)),
                doc_count=n,
            )
        )
    return edges


def cmd_classify(store: RunStore, client: BackendClient) -> dict[str, str]:
    """Classify every document and emit the per-year trend CSV."""
    corpus = store.load_corpus()
    classes = {doc.id: classify_document(doc, client) for doc in corpus}
    _dump_json(store.root / "classifications.json", classes)
    rows = yearly_counts(corpus, classes)
    lines = ["year,class,count"] + [f"{year},{cls},{n}" for year, cls, n in rows]
    (store.root / "class_trend.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return classes


def _fmt(value: float, places: int) -> str:
    if value != value:  # nan
        return "nan"
    if value == float("inf"):
        return "inf"
    return f"{value:.{places}f}"


def render_report_table(scores: Sequence[AhamScore], selected_step: int) -> str:
    """Table of per-checkpoint counts, ratios, similarities, objectives."""
    header = [
        "steps", "T", "O", "O/T",
        "lev", "bert_like", "cos",
        "objective_lev", "objective_bert", "objective_cos",
        "selected",
    ]
    lines = ["\t".join(header)]
    for s in scores:
        row = [
            str(s.checkpoint.step),
            str(s.topic_count),
            str(s.outlier_count),
            _fmt(s.outlier_ratio, 2),
            _fmt(s.mean_similarity.get("levenshtein", float("nan")), 2),
            _fmt(s.mean_similarity.get("greedy_semantic", float("nan")), 2),
            _fmt(s.mean_similarity.get("label_cosine", float("nan")), 2),
            _fmt(s.objective.get("levenshtein", float("nan")), 4),
            _fmt(s.objective.get("greedy_semantic", float("nan")), 4),
            _fmt(s.objective.get("label_cosine", float("nan")), 4),
            "*" if s.checkpoint.step == selected_step else "",
        ]
        lines.append("\t".join(row))
    return "\n".join(lines) + "\n"


def cmd_report(store: RunStore, client: BackendClient) -> dict[str, Path]:
    """Emit report.tsv, trajectory.csv, and the first-vs-best evolution map."""
    payload = json.loads(store.scores_path.read_text(encoding="utf-8"))
    scores = [AhamScore.from_json(item) for item in payload["scores"]]
    selected_step = int(payload["selected_step"])

    report_path = store.root / "report.tsv"
    report_path.write_text(render_report_table(scores, selected_step), encoding="utf-8")

    lines = ["step,objective_lev,objective_bert,objective_cos"]
    for s in scores:
        lines.append(
            f"{s.checkpoint.step},"
            f"{s.objective.get('levenshtein', float('nan'))!r},"
            f"{s.objective.get('greedy_semantic', float('nan'))!r},"
            f"{s.objective.get('label_cosine', float('nan'))!r}"
        )
    trajectory_path = store.root / "trajectory.csv"
    trajectory_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    outputs = {"report": report_path, "trajectory": trajectory_path}

    first_step = scores[0].checkpoint.step
    model_a = load_topic_model(store, client, first_step)
    model_b = load_topic_model(store, client, selected_step)
    edges = topic_evolution_map(model_a, model_b)
    evo_payload = {
        "from_step": first_step,
        "to_step": selected_step,
        "edges": [dataclasses.asdict(e) for e in edges],
    }
    evolution_path = store.root / "evolution.json"
    _dump_json(evolution_path, evo_payload)
    outputs["evolution"] = evolution_path
    return outputs
