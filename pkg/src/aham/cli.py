"""Command-line interface.

    aham ingest    --corpus FILE --run RUN [--backend URL] [--seed N]
    aham gpl-build --run RUN [--q 3] [--nucleus-p 0.9] [--pool 50] [--seed 42]
    aham model     --run RUN --checkpoint STEP | --all
    aham evaluate  --run RUN [--metric cos|lev|bert|all]
    aham select    --run RUN [--metric cos|lev|bert]
    aham classify  --run RUN
    aham report    --run RUN

Runs live under --store (default ./runs). The AHAM_BACKEND_URL
environment variable overrides the manifest endpoint; mock:// endpoints
run the built-in deterministic backends.
"""
from __future__ import annotations

import argparse
import logging
import sys

from . import runner
from .cluster import ClustererConfig
from .errors import AhamError
from .reduce import ReducerConfig

DEFAULT_ENDPOINT = "mock://hashed?dim=64&steps=0"

log = logging.getLogger("aham")


def _store(args) -> runner.RunStore:
    store = runner.RunStore(f"{args.store}/{args.run}")
    if not store.manifest_path.is_file():
        raise AhamError(f"run {args.run!r} not found under {args.store}; run `aham ingest` first")
    return store


def _client(store: runner.RunStore) -> tuple[runner.RunStore, object]:
    manifest = store.load_manifest()
    return manifest, runner.connect_backends(manifest, store)


def _metrics_arg(value: str) -> list[str]:
    if value == "all":
        return list(runner.METRIC_SHORT)
    if value in runner.SHORT_TO_METRIC:
        return [runner.SHORT_TO_METRIC[value]]
    raise argparse.ArgumentTypeError(f"unknown metric {value!r}")


def cmd_ingest(args) -> int:
    store = runner.init_run(
        args.store,
        args.run,
        args.corpus,
        endpoint=args.backend,
        corpus_format=args.format,
        seed=args.seed,
        reducer=ReducerConfig(
            n_neighbors=args.n_neighbors, n_components=args.n_components, seed=args.seed
        ),
        clusterer=ClustererConfig(min_cluster_size=args.min_cluster_size),
        prompt_bundle_path=args.prompts,
    )
    corpus = store.load_corpus()
    print(f"ingested {len(corpus)} documents into {store.root}")
    return 0


def cmd_gpl_build(args) -> int:
    store = _store(args)
    _manifest, client = _client(store)
    dataset = runner.cmd_gpl_build(
        store, client, q=args.q, nucleus_p=args.nucleus_p, pool_size=args.pool, seed=args.seed
    )
    print(f"wrote {len(dataset.triplets)} triplets to {store.gpl_path}")
    return 0


def cmd_model(args) -> int:
    store = _store(args)
    _manifest, client = _client(store)
    if args.all:
        checkpoints = client.list_checkpoints()
    elif args.checkpoint is not None:
        checkpoints = [client.registry.resolve(args.checkpoint)]
    else:
        raise AhamError("pass --checkpoint STEP or --all")
    for ckpt in checkpoints:
        model = runner.cmd_model(store, client, ckpt)
        named = {t: l for t, l in sorted(model.labels.items())}
        print(
            f"step {ckpt.step}: T={model.assignment.topic_count} "
            f"outliers={model.assignment.outlier_count} labels={named}"
        )
    return 0


def cmd_evaluate(args) -> int:
    store = _store(args)
    _manifest, client = _client(store)
    metrics = _metrics_arg(args.metric)
    selection = metrics[0] if len(metrics) == 1 else "label_cosine"
    scores, selected = runner.cmd_evaluate(store, client, metrics=metrics, selection_metric=selection)
    print(runner.render_report_table(scores, selected.step), end="")
    print(f"selected step {selected.step} by {selection}")
    return 0


def cmd_select(args) -> int:
    store = _store(args)
    metric = runner.SHORT_TO_METRIC.get(args.metric, args.metric)
    selected = runner.cmd_select(store, metric=metric)
    print(f"{selected.step}")
    return 0


def cmd_classify(args) -> int:
    store = _store(args)
    _manifest, client = _client(store)
    classes = runner.cmd_classify(store, client)
    n_meth = sum(1 for v in classes.values() if v == "methodology")
    print(f"classified {len(classes)} documents: {n_meth} methodology, {len(classes) - n_meth} application")
    print(f"trend table: {store.root / 'class_trend.csv'}")
    return 0


def cmd_report(args) -> int:
    store = _store(args)
    _manifest, client = _client(store)
    outputs = runner.cmd_report(store, client)
    for name, path in outputs.items():
        print(f"{name}: {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aham", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--store", default="runs", help="run store root (default: ./runs)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="ingest a corpus and create a run")
    p.add_argument("--corpus", required=True)
    p.add_argument("--run", required=True)
    p.add_argument("--format", choices=["jsonl", "csv"], default=None)
    p.add_argument("--backend", default=DEFAULT_ENDPOINT)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--n-neighbors", type=int, default=5)
    p.add_argument("--n-components", type=int, default=5)
    p.add_argument("--min-cluster-size", type=int, default=5)
    p.add_argument("--prompts", default=None, help="prompt bundle JSON path")
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("gpl-build", help="build the GPL adaptation dataset")
    p.add_argument("--run", required=True)
    p.add_argument("--q", type=int, default=3)
    p.add_argument("--nucleus-p", type=float, default=0.9)
    p.add_argument("--pool", type=int, default=50)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=cmd_gpl_build)

    p = sub.add_parser("model", help="run the topic pipeline at a checkpoint")
    p.add_argument("--run", required=True)
    p.add_argument("--checkpoint", type=int, default=None, help="checkpoint step")
    p.add_argument("--all", action="store_true", help="model every registered checkpoint")
    p.set_defaults(fn=cmd_model)

    p = sub.add_parser("evaluate", help="score checkpoints with the adaptation objective")
    p.add_argument("--run", required=True)
    p.add_argument("--metric", default="all", help="cos|lev|bert|all")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("select", help="print the selected checkpoint step")
    p.add_argument("--run", required=True)
    p.add_argument("--metric", default="label_cosine")
    p.set_defaults(fn=cmd_select)

    p = sub.add_parser("classify", help="methodology/application classification")
    p.add_argument("--run", required=True)
    p.set_defaults(fn=cmd_classify)

    p = sub.add_parser("report", help="emit report.tsv, trajectory.csv, evolution.json")
    p.add_argument("--run", required=True)
    p.set_defaults(fn=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except AhamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
