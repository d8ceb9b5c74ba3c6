#!/usr/bin/env python3
"""End-to-end demo on a planted corpus with the tightening mock backend.

Models two checkpoints (a loose base model and an adapted model whose
clusters tighten), evaluates the adaptation objective at each, prints the
report table, and shows which checkpoint wins selection.
"""
from __future__ import annotations

import argparse
import tempfile
from pathlib import Path

from aham.backends import BackendClient, BackendConfig
from aham.corpus import write_corpus_jsonl
from aham.runner import cmd_evaluate, cmd_gpl_build, cmd_model, cmd_report, init_run, render_report_table
from aham.synthetic import planted_corpus, tightening_transport


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--store", default=None, help="run store root (default: temp dir)")
    parser.add_argument("--docs-per-topic", type=int, default=30)
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    store_root = Path(args.store) if args.store else Path(tempfile.mkdtemp(prefix="aham_demo_"))
    corpus, markers = planted_corpus(docs_per_topic=args.docs_per_topic)
    corpus_file = store_root / "planted.jsonl"
    store_root.mkdir(parents=True, exist_ok=True)
    write_corpus_jsonl(corpus, corpus_file)

    store = init_run(store_root / "runs", "demo", corpus_file, endpoint="mock://demo", seed=args.seed)
    client = BackendClient(
        tightening_transport(markers, dim=96),
        BackendConfig(endpoint="mock://demo", cache_dir=store.root / "cache"),
    )

    dataset = cmd_gpl_build(store, client, q=2)
    print(f"adaptation data: {len(dataset.triplets)} triplets -> {store.gpl_path}")

    for ckpt in client.list_checkpoints():
        model = cmd_model(store, client, ckpt)
        print(
            f"modeled step {ckpt.step}: T={model.assignment.topic_count} "
            f"outliers={model.assignment.outlier_count}"
        )
        for topic_id in range(model.assignment.topic_count):
            print(f"  topic {topic_id}: {model.labels[topic_id]}")

    scores, selected = cmd_evaluate(store, client)
    print()
    print(render_report_table(scores, selected.step), end="")
    print(f"\nselected checkpoint: step {selected.step}")

    outputs = cmd_report(store, client)
    for name, path in outputs.items():
        print(f"{name}: {path}")


if __name__ == "__main__":
    main()
