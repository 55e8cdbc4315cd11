"""Command line front end: train a model file, or serve one over stdio."""
from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

import numpy as np

from .gcn import (DIM_DEFAULT, HIDDEN_DEFAULT, GnnModel, TrainingError,
                  accuracy, train_model)
from .protocol import serve


class DatasetError(ValueError):
    pass


def read_samples(path: str) -> list[tuple[object, int]]:
    """Parse dataset JSONL: one {"pdg", "label", ...} object per line."""
    samples: list[tuple[object, int]] = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise DatasetError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
                if not isinstance(record, dict):
                    raise DatasetError(f"{path}:{lineno}: record is not an object")
                label = record.get("label")
                if isinstance(label, bool) or label not in (0, 1):
                    raise DatasetError(f"{path}:{lineno}: label must be 0 or 1")
                graph = record.get("pdg")
                if not isinstance(graph, dict):
                    raise DatasetError(f"{path}:{lineno}: pdg must be an object")
                samples.append((graph, label))
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc
    return samples


def cmd_train(args: argparse.Namespace) -> int:
    samples = read_samples(args.dataset)
    if not samples:
        raise TrainingError("dataset is empty")
    order = np.random.default_rng(args.seed).permutation(len(samples))
    held_out = int(len(samples) * args.val_frac)
    val = [samples[i] for i in order[:held_out]]
    train = [samples[i] for i in order[held_out:]]
    model, loss = train_model(train, epochs=args.epochs, lr=args.lr,
                              seed=args.seed, dim=args.dim, hidden=args.hidden)
    model.save(args.output)
    train_acc = accuracy(model, train)
    if val:
        print(f"trained on {len(train)} samples: train acc {train_acc:.3f}, "
              f"val acc {accuracy(model, val):.3f} ({len(val)} samples), "
              f"final loss {loss:.6f}")
    else:
        print(f"trained on {len(train)} samples: train acc {train_acc:.3f}, "
              f"final loss {loss:.6f}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    model = GnnModel.load(args.model)
    return serve(model)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="refscorer",
        description="Graph convolution detector speaking the scorer stdio protocol.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a model on a labeled JSONL dataset")
    p.add_argument("dataset", help="JSONL file of {'label', 'graph'} records")
    p.add_argument("-o", "--output", required=True, help="model JSON path")
    p.add_argument("--epochs", type=int, default=150)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dim", type=int, default=DIM_DEFAULT,
                   help="token hashing buckets")
    p.add_argument("--hidden", type=int, default=HIDDEN_DEFAULT,
                   help="message-passing layer width")
    p.add_argument("--val-frac", type=float, default=0.2,
                   help="held-out fraction for the printed validation accuracy")
    p.add_argument("--embedder", choices=["hash"], default="hash",
                   help="node embedding scheme")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("serve", help="answer score requests on stdin until EOF")
    p.add_argument("model", help="model JSON written by train")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DatasetError, TrainingError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
