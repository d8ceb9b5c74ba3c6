#!/usr/bin/env python3
"""Write a planted-topic synthetic corpus as JSONL for CLI experiments."""
from __future__ import annotations

import argparse

from aham.corpus import write_corpus_jsonl
from aham.synthetic import planted_corpus


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="planted.jsonl")
    parser.add_argument("--topics", type=int, default=3)
    parser.add_argument("--docs-per-topic", type=int, default=30)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    corpus, markers = planted_corpus(
        n_topics=args.topics, docs_per_topic=args.docs_per_topic, seed=args.seed
    )
    write_corpus_jsonl(corpus, args.out)
    print(f"wrote {len(corpus)} documents to {args.out}")
    print(f"planted markers: {', '.join(sorted(markers))}")


if __name__ == "__main__":
    main()
