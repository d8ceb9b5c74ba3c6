"""Model-server command line.

    aham-modelserver serve --port 8400 --checkpoint-dir ckpts
    aham-modelserver train --dataset runs/R/gpl.jsonl --corpus runs/R/corpus.jsonl \
        --total-steps 50000 --interval 10000 --checkpoint-dir ckpts
"""
from __future__ import annotations

import argparse
import logging
import sys

from .config import ServerConfig
from .models import load_embedder
from .registry import CheckpointStore
from .train import train_gpl


def _config_from(args) -> ServerConfig:
    return ServerConfig(
        embedding_model=args.embedding_model,
        generation_model=args.generation_model,
        cross_encoder_model=args.cross_encoder_model,
        device=args.device,
        checkpoint_dir=args.checkpoint_dir,
        checkpoint_interval=args.interval,
    )


def cmd_serve(args) -> int:
    import uvicorn

    from .app import create_app

    app = create_app(_config_from(args))
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_train(args) -> int:
    config = _config_from(args)
    model = load_embedder(config.embedding_model, device=config.device)
    store = CheckpointStore(config.checkpoint_dir, model, model.dim)
    report = train_gpl(
        model,
        store,
        dataset_path=args.dataset,
        corpus_path=args.corpus,
        total_steps=args.total_steps,
        checkpoint_interval=args.interval,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        seed=args.seed,
    )
    print(
        f"trained {report.steps} steps: margin mse {report.initial_loss:.6f} -> {report.final_loss:.6f}; "
        f"checkpoints at {report.checkpoint_steps}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aham-modelserver", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--embedding-model", default="toy:dim=32,vocab=2048,seed=0")
        p.add_argument("--generation-model", default="toy-gen")
        p.add_argument("--cross-encoder-model", default="toy-ce")
        p.add_argument("--device", default="cpu")
        p.add_argument("--checkpoint-dir", default="checkpoints")
        p.add_argument("--interval", type=int, default=10000)

    p = sub.add_parser("serve", help="serve the wire protocol")
    common(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8400)
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("train", help="margin-distillation fine-tuning")
    common(p)
    p.add_argument("--dataset", required=True, help="GPL triplet JSONL")
    p.add_argument("--corpus", required=True, help="corpus JSONL resolving document ids")
    p.add_argument("--total-steps", type=int, default=50000)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=2e-3)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(fn=cmd_train)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
