"""Command-line entry point: featurize, train, eval, predict, export-embeddings.

Exit codes: 0 success, 1 runtime/data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from . import dataio
from .corpus import remap_labels
from .errors import FcgError
from .features import build_feature_matrix
from .gnn import ModelConfig
from .graph import read_edge_list
from .train import DEFAULT_LEARNING_RATES, TrainConfig, evaluate, fit, predict

MODEL_KINDS = {"gcn-jk": "gcn", "sage-jk": "sage", "gin-jk": "gin"}

log = logging.getLogger("fcggnn")


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fcggnn", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("featurize", help="print the raw 4-column node feature matrix")
    p.add_argument("--graph", required=True, type=Path)

    p = sub.add_parser("train", help="train a model and write the model container")
    p.add_argument("--data", required=True, type=Path, help="corpus directory or manifest.csv")
    p.add_argument("--model", required=True, choices=sorted(MODEL_KINDS))
    p.add_argument("--layers", type=_positive_int, default=6)
    p.add_argument("--hidden", type=_positive_int, default=128)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--allow-any-lr", action="store_true",
                   help=f"accept learning rates outside {DEFAULT_LEARNING_RATES}")
    p.add_argument("--epochs", type=_positive_int, default=200)
    p.add_argument("--batch-size", type=_positive_int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--selection-metric", choices=("accuracy", "weighted_f1"), default="weighted_f1")
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("eval", help="score a trained model on one split")
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("--data", required=True, type=Path)
    p.add_argument("--split", choices=("train", "val", "test"), default="test")

    p = sub.add_parser("predict", help="classify one edge-list file")
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("--graph", required=True, type=Path)

    p = sub.add_parser("export-embeddings", help="write whole-graph embeddings as TSV")
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("--data", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    return parser


def cmd_featurize(args) -> None:
    feats = build_feature_matrix(read_edge_list(args.graph))
    for row in feats:
        print(" ".join(_fmt(v) for v in row))


def cmd_train(args) -> None:
    corpus = dataio.load_corpus(args.data)
    model_cfg = ModelConfig(
        layer_kind=MODEL_KINDS[args.model],
        num_layers=args.layers,
        hidden=args.hidden,
        num_classes=max(2, corpus.num_classes),
        seed=args.seed,
    )
    train_cfg = TrainConfig(
        lr=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
        selection_metric=args.selection_metric,
    )

    def report(epoch: int, loss: float, metric: float) -> None:
        print(f"epoch {epoch + 1:4d}  loss {loss:.6f}  val_{train_cfg.selection_metric} {metric:.4f}",
              flush=True)

    started = time.time()
    params, history = fit(corpus, model_cfg, train_cfg, on_epoch=report)
    dataio.save_model(params, args.out)
    print(f"best epoch {history.best_epoch + 1}  val_{train_cfg.selection_metric} "
          f"{history.val_metric[history.best_epoch]:.4f}")
    print(f"wrote {args.out}")
    log.info("training took %.1fs", time.time() - started)


def _corpus_for(params, data: Path):
    corpus = dataio.load_corpus(data)
    return remap_labels(corpus, params.class_names) if params.class_names else corpus


def cmd_eval(args) -> None:
    params = dataio.load_model(args.model)
    corpus = _corpus_for(params, args.data)
    report = evaluate(params, corpus.split(args.split))
    print(report.format_table(params.class_names or None))
    print(report.format_block())


def cmd_predict(args) -> None:
    params = dataio.load_model(args.model)
    cls, probs, _ = predict(params, read_edge_list(args.graph))
    names = params.class_names or [str(i) for i in range(len(probs))]
    print(names[cls])
    print(" ".join(f"{name}={p:.6f}" for name, p in zip(names, probs)))


def cmd_export(args) -> None:
    params = dataio.load_model(args.model)
    rows = dataio.export_embeddings(params, _corpus_for(params, args.data), args.out)
    print(f"wrote {rows} embeddings to {args.out}")


COMMANDS = {
    "featurize": cmd_featurize,
    "train": cmd_train,
    "eval": cmd_eval,
    "predict": cmd_predict,
    "export-embeddings": cmd_export,
}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "train" and args.lr not in DEFAULT_LEARNING_RATES and not args.allow_any_lr:
        parser.print_usage(sys.stderr)
        print(f"fcggnn train: error: --lr must be one of {DEFAULT_LEARNING_RATES} "
              "(pass --allow-any-lr to override)", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s")
    try:
        COMMANDS[args.command](args)
    except (FcgError, OSError, ValueError, FloatingPointError) as exc:
        print(f"fcggnn {args.command}: error: {exc}".replace("\n", " "), file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
