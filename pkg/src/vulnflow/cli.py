"""Command-line front end.

Subcommands: build-pdg (source -> graph JSON), explain (rank slice
paths with a detector), train (fit the builtin detector), eval (batch
metrics), corpus (synthetic dataset). Exit codes: 0 success, 1 bad
usage or input, 2 no sink points matched, 3 scorer failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional, Sequence

from . import __version__
from .builder import BuilderError, build_pdg
from .corpus import generate_corpus
from .evaluate import evaluate, render_report
from .external import ExternalScorer, ScorerProtocolError
from .graph import GraphError, path_lines
from .graphio import (
    SchemaError,
    export_dot,
    read_dataset,
    read_pdg_json,
    write_dataset,
    write_pdg_json,
)
from .lexer import LexError
from .minic import ParseError
from .scorer import BaselineModel, select_path, train_baseline
from .sinks import SinkConfigError, extract_sink_nodes, load_sink_config
from .slicer import SliceParams, generate_slices

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NO_SINKS = 2
EXIT_SCORER = 3

_INPUT_ERRORS = (BuilderError, GraphError, LexError, ParseError, SchemaError,
                 SinkConfigError, OSError, ValueError)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit 2; keep 2 for "no sinks"
        raise _UsageError(message)


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _make_detector(spec: str, timeout: float):
    """builtin:<model.json> or exec:<command>; caller closes external scorers."""
    if spec.startswith("builtin:"):
        return BaselineModel.load(spec[len("builtin:"):])
    if spec.startswith("exec:"):
        command = spec[len("exec:"):].strip()
        if not command:
            raise _UsageError("exec scorer needs a command")
        return ExternalScorer(command, timeout=timeout)
    raise _UsageError(f"scorer spec must start with builtin: or exec: (got {spec!r})")


def _close_detector(detector) -> None:
    close = getattr(detector, "close", None)
    if close:
        close()


def cmd_build_pdg(args) -> int:
    if os.path.isdir(args.input):
        sources = sorted(
            os.path.join(args.input, name)
            for name in os.listdir(args.input) if name.endswith(".minic"))
        if not sources:
            return _fail(f"no .minic files under {args.input}", EXIT_USAGE)
        out_dir = args.output or args.input
        os.makedirs(out_dir, exist_ok=True)
    else:
        sources = [args.input]
        out_dir = None
    for src in sources:
        with open(src, "r", encoding="utf-8") as fh:
            text = fh.read()
        stem = os.path.splitext(os.path.basename(src))[0]
        graph_id = args.id or stem
        pdg = build_pdg(text, graph_id=graph_id)
        if out_dir is not None:
            out_path = os.path.join(out_dir, stem + ".pdg.json")
        else:
            out_path = args.output or os.path.splitext(src)[0] + ".pdg.json"
        write_pdg_json(pdg, out_path)
        print(f"wrote {out_path} ({len(pdg.nodes)} nodes, {len(pdg.edges)} edges)")
        if args.dot:
            dot_path = os.path.splitext(out_path)[0].removesuffix(".pdg") + ".dot"
            with open(dot_path, "w", encoding="utf-8") as fh:
                fh.write(export_dot(pdg))
            print(f"wrote {dot_path}")
    return EXIT_OK


def cmd_explain(args) -> int:
    pdg = read_pdg_json(args.pdg)
    config = load_sink_config(args.sink_config)
    params = SliceParams(k=args.k, sparsity=args.sparsity)
    sinks = extract_sink_nodes(pdg, config)
    if not sinks:
        return _fail(f"no sink points matched in {pdg.id!r}", EXIT_NO_SINKS)
    detector = _make_detector(args.scorer, args.timeout)
    try:
        paths = generate_slices(pdg, params, sinks)
        explanation = select_path(pdg, paths, detector)
    finally:
        _close_detector(detector)

    def describe(record) -> dict:
        ordered = sorted(record.path.nodes, key=lambda nid: (pdg.line_of(nid), nid))
        return {
            "nodes": ordered,
            "lines": path_lines(record.path, pdg),
            "sink": record.path.psp.node,
            "sink_kind": record.path.psp.kind,
            "p_path": record.p_path,
            "importance": record.importance,
        }

    result = {
        "id": pdg.id,
        "k": args.k,
        "sparsity": args.sparsity,
        "p_graph": explanation.p_graph,
        "selected": describe(explanation.selected),
        "candidates": [describe(r) for r in explanation.records],
    }
    print(json.dumps(result, indent=2, sort_keys=True))
    if args.dot:
        with open(args.dot, "w", encoding="utf-8") as fh:
            fh.write(export_dot(pdg, highlight=explanation.selected.path))
        print(f"wrote {args.dot}", file=sys.stderr)
    return EXIT_OK


def cmd_train(args) -> int:
    dataset = read_dataset(args.dataset)
    model = train_baseline(dataset.samples, lr=args.lr, epochs=args.epochs,
                           seed=args.seed, dim=args.dim)
    model.save(args.output)
    meta = model.metadata or {}
    print(f"trained on {meta.get('n_samples')} samples "
          f"({dataset.duplicates_removed} duplicates removed), "
          f"final loss {meta.get('final_loss'):.6f}")
    print(f"wrote {args.output}")
    return EXIT_OK


def cmd_eval(args) -> int:
    try:
        k_values = tuple(int(part) for part in args.k.split(",") if part)
    except ValueError:
        raise _UsageError(f"--k expects comma-separated integers, got {args.k!r}")
    if not k_values:
        raise _UsageError("--k needs at least one value")
    dataset = read_dataset(args.dataset)
    if not dataset.samples:
        return _fail(f"dataset {args.dataset} is empty", EXIT_USAGE)
    config = load_sink_config(args.sink_config)
    params = SliceParams(k=k_values[0], sparsity=args.sparsity)
    detector = _make_detector(args.scorer, args.timeout)
    factory = None
    if args.jobs > 1 and args.scorer.startswith("exec:"):
        command = args.scorer[len("exec:"):].strip()
        factory = lambda: ExternalScorer(command, timeout=args.timeout)
    try:
        report = evaluate(dataset.samples, detector, params, config,
                          k_values=k_values, threshold=args.threshold,
                          jobs=args.jobs, detector_factory=factory)
    finally:
        _close_detector(detector)
    if args.out:
        md_path, csv_path = args.out + ".md", args.out + ".csv"
        with open(md_path, "w", encoding="utf-8") as fh:
            fh.write(render_report(report, "markdown"))
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write(render_report(report, "csv"))
        print(f"wrote {md_path}")
        print(f"wrote {csv_path}")
    else:
        print(render_report(report, args.format), end="")
    return EXIT_OK


def cmd_corpus(args) -> int:
    cwe_mix = None
    if args.cwe_mix:
        cwe_mix = {}
        for part in args.cwe_mix.split(","):
            name, _, weight = part.partition("=")
            if not weight:
                raise _UsageError(f"--cwe-mix entries look like NAME=WEIGHT, got {part!r}")
            try:
                cwe_mix[name.strip()] = float(weight)
            except ValueError:
                raise _UsageError(f"bad weight in --cwe-mix entry {part!r}")
    pairs = generate_corpus(args.seed, args.count, cwe_mix)
    os.makedirs(args.out, exist_ok=True)
    src_dir = os.path.join(args.out, "src")
    os.makedirs(src_dir, exist_ok=True)
    for sample, source in pairs:
        with open(os.path.join(src_dir, sample.sample_id + ".minic"), "w",
                  encoding="utf-8") as fh:
            fh.write(source)
    dataset_path = os.path.join(args.out, "dataset.jsonl")
    write_dataset([sample for sample, _ in pairs], dataset_path)
    vulnerable = sum(1 for sample, _ in pairs if sample.label == 1)
    print(f"wrote {dataset_path} ({len(pairs)} samples, {vulnerable} vulnerable)")
    return EXIT_OK


def _build_parser() -> _Parser:
    parser = _Parser(prog="vulnflow",
                     description="Locate vulnerability-triggering statements "
                                 "via dependence slicing and detector-ranked paths.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-pdg", help="build dependence graphs from source")
    p.add_argument("input", help=".minic file or a directory of them")
    p.add_argument("-o", "--output", help="output file (or directory for directory input)")
    p.add_argument("--id", help="graph id (defaults to the file stem)")
    p.add_argument("--dot", action="store_true", help="also write Graphviz output")
    p.set_defaults(func=cmd_build_pdg)

    p = sub.add_parser("explain", help="rank slice paths for one graph")
    p.add_argument("pdg", help="graph JSON file")
    p.add_argument("--scorer", required=True, help="builtin:<model.json> or exec:<command>")
    p.add_argument("--k", type=int, default=5, help="path node budget (default 5)")
    p.add_argument("--sparsity", type=float, default=0.5,
                   help="fraction of nodes the budget may not exceed (default 0.5)")
    p.add_argument("--sink-config", help="sink settings JSON")
    p.add_argument("--timeout", type=float, default=10.0, help="external scorer timeout")
    p.add_argument("--dot", help="write highlighted Graphviz output here")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("train", help="train the builtin detector")
    p.add_argument("dataset", help="JSONL dataset")
    p.add_argument("-o", "--output", required=True, help="model JSON path")
    p.add_argument("--lr", type=float, default=5.0)
    p.add_argument("--epochs", type=int, default=800)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dim", type=int, default=1024)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="detection metrics and line coverage")
    p.add_argument("dataset", help="JSONL dataset")
    p.add_argument("--scorer", required=True, help="builtin:<model.json> or exec:<command>")
    p.add_argument("--k", default="5", help="comma-separated budgets, e.g. 3,5,7")
    p.add_argument("--sparsity", type=float, default=0.5)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--sink-config", help="sink settings JSON")
    p.add_argument("--timeout", type=float, default=10.0)
    p.add_argument("--jobs", type=int, default=1, help="parallel sample workers")
    p.add_argument("--format", choices=["markdown", "csv"], default="markdown")
    p.add_argument("--out", help="write <out>.md and <out>.csv instead of stdout")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("corpus", help="generate a synthetic labeled corpus")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--cwe-mix", help="weights like CWE787=2,CWE119=1")
    p.set_defaults(func=cmd_corpus)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        return _fail(str(exc), EXIT_USAGE)
    except ScorerProtocolError as exc:
        return _fail(str(exc), EXIT_SCORER)
    except _INPUT_ERRORS as exc:
        return _fail(str(exc), EXIT_USAGE)


if __name__ == "__main__":
    sys.exit(main())
