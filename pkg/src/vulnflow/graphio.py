"""Read/write dependence graphs and labeled datasets.

One canonical byte form per graph: nodes sorted by id, edges sorted by
(src, dst, kind, var), keys sorted, no floats anywhere. Dataset files are
JSONL, one record per line; exact-duplicate graphs are dropped on read.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

from .graph import (
    CONTROL,
    DATA,
    DependenceEdge,
    FlowPath,
    LabeledSample,
    ProgramDependenceGraph,
    StatementNode,
    validate,
)

_NODE_FIELDS = {"id", "line", "code"}
_EDGE_FIELDS = {"src", "dst", "kind", "var"}
_RECORD_FIELDS = {"pdg", "label", "vuln_lines", "cwe"}


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetFile:
    path: str
    samples: tuple[LabeledSample, ...]
    duplicates_removed: int


def pdg_to_obj(pdg: ProgramDependenceGraph) -> dict:
    """Plain-dict form of a graph in canonical member order."""
    nodes = sorted(pdg.nodes, key=lambda n: n.id)
    edges = sorted(pdg.edges, key=DependenceEdge.sort_key)
    out_edges = []
    for e in edges:
        item: dict = {"src": e.src, "dst": e.dst, "kind": e.kind}
        if e.kind == DATA:
            item["var"] = e.var
        out_edges.append(item)
    return {
        "id": pdg.id,
        "nodes": [{"id": n.id, "line": n.line, "code": n.code} for n in nodes],
        "edges": out_edges,
    }


def canonical_pdg_bytes(pdg: ProgramDependenceGraph) -> bytes:
    return json.dumps(pdg_to_obj(pdg), sort_keys=True, separators=(",", ":")).encode("utf-8")


def _expect(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise SchemaError(f"{path}: {message}")


def _warn_unknown(obj: dict, known: set[str], path: str) -> None:
    extras = sorted(set(obj) - known)
    if extras:
        warnings.warn(f"{path}: ignoring unknown fields {extras}", stacklevel=3)


def pdg_from_obj(obj, path: str = "$") -> ProgramDependenceGraph:
    """Parse and fully validate one graph object; raises SchemaError."""
    _expect(isinstance(obj, dict), path, "expected object")
    for key in ("id", "nodes", "edges"):
        _expect(key in obj, f"{path}.{key}", "missing")
    _warn_unknown(obj, {"id", "nodes", "edges"}, path)
    _expect(isinstance(obj["id"], str), f"{path}.id", "expected string")
    _expect(isinstance(obj["nodes"], list), f"{path}.nodes", "expected array")
    _expect(isinstance(obj["edges"], list), f"{path}.edges", "expected array")

    nodes = []
    for i, raw in enumerate(obj["nodes"]):
        npath = f"{path}.nodes[{i}]"
        _expect(isinstance(raw, dict), npath, "expected object")
        for key in ("id", "line", "code"):
            _expect(key in raw, f"{npath}.{key}", "missing")
        _warn_unknown(raw, _NODE_FIELDS, npath)
        _expect(isinstance(raw["id"], int) and not isinstance(raw["id"], bool),
                f"{npath}.id", "expected integer")
        _expect(isinstance(raw["line"], int) and not isinstance(raw["line"], bool),
                f"{npath}.line", "expected integer")
        _expect(isinstance(raw["code"], str), f"{npath}.code", "expected string")
        nodes.append(StatementNode(id=raw["id"], line=raw["line"], code=raw["code"]))

    edges = []
    for i, raw in enumerate(obj["edges"]):
        epath = f"{path}.edges[{i}]"
        _expect(isinstance(raw, dict), epath, "expected object")
        for key in ("src", "dst", "kind"):
            _expect(key in raw, f"{epath}.{key}", "missing")
        _warn_unknown(raw, _EDGE_FIELDS, epath)
        _expect(isinstance(raw["src"], int) and not isinstance(raw["src"], bool),
                f"{epath}.src", "expected integer")
        _expect(isinstance(raw["dst"], int) and not isinstance(raw["dst"], bool),
                f"{epath}.dst", "expected integer")
        _expect(raw["kind"] in (CONTROL, DATA), f"{epath}.kind",
                f"expected {CONTROL!r} or {DATA!r}, got {raw.get('kind')!r}")
        var = raw.get("var")
        if var is not None:
            _expect(isinstance(var, str), f"{epath}.var", "expected string")
        edges.append(DependenceEdge(src=raw["src"], dst=raw["dst"], kind=raw["kind"], var=var))

    pdg = ProgramDependenceGraph(id=obj["id"], nodes=tuple(nodes), edges=tuple(edges))
    violations = validate(pdg)
    if violations:
        raise SchemaError(f"{path}: invalid graph: " + "; ".join(violations))
    return pdg


def read_pdg_json(path: str) -> ProgramDependenceGraph:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"$: not valid JSON: {exc}") from exc
    return pdg_from_obj(obj)


def write_pdg_json(pdg: ProgramDependenceGraph, path: str) -> None:
    violations = validate(pdg)
    if violations:
        raise SchemaError("$: invalid graph: " + "; ".join(violations))
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(pdg_to_obj(pdg), fh, indent=2, sort_keys=True)
        fh.write("\n")


def sample_to_obj(sample: LabeledSample) -> dict:
    return {
        "pdg": pdg_to_obj(sample.pdg),
        "label": sample.label,
        "vuln_lines": sorted(sample.vuln_lines),
        "cwe": sample.cwe,
    }


def _sample_from_obj(obj, lineno: int) -> LabeledSample:
    path = f"line {lineno}"
    _expect(isinstance(obj, dict), path, "expected object")
    for key in _RECORD_FIELDS:
        _expect(key in obj, f"{path}.{key}", "missing")
    _warn_unknown(obj, _RECORD_FIELDS, path)
    pdg = pdg_from_obj(obj["pdg"], path=f"{path}.pdg")
    _expect(obj["label"] in (0, 1), f"{path}.label", "expected 0 or 1")
    _expect(isinstance(obj["vuln_lines"], list), f"{path}.vuln_lines", "expected array")
    vuln_lines = []
    for i, item in enumerate(obj["vuln_lines"]):
        _expect(isinstance(item, int) and not isinstance(item, bool),
                f"{path}.vuln_lines[{i}]", "expected integer")
        vuln_lines.append(item)
    _expect(isinstance(obj["cwe"], str), f"{path}.cwe", "expected string")
    label = obj["label"]
    _expect((label == 1) == bool(vuln_lines), path,
            "label and vuln_lines disagree (vulnerable iff lines non-empty)")
    node_lines = {n.line for n in pdg.nodes}
    for line in vuln_lines:
        _expect(line in node_lines, f"{path}.vuln_lines",
                f"line {line} matches no node of the graph")
    return LabeledSample(sample_id=pdg.id, pdg=pdg, label=label,
                         vuln_lines=tuple(sorted(vuln_lines)), cwe=obj["cwe"])


def read_dataset(path: str) -> DatasetFile:
    """Read a JSONL dataset; dedup identical graphs, enforce unique ids."""
    samples: list[LabeledSample] = []
    seen_bytes: set[bytes] = set()
    seen_ids: set[str] = set()
    duplicates = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"line {lineno}: not valid JSON: {exc}") from exc
            sample = _sample_from_obj(obj, lineno)
            key = canonical_pdg_bytes(sample.pdg)
            if key in seen_bytes:
                duplicates += 1
                continue
            seen_bytes.add(key)
            _expect(sample.sample_id not in seen_ids, f"line {lineno}.pdg.id",
                    f"duplicate sample id {sample.sample_id!r}")
            seen_ids.add(sample.sample_id)
            samples.append(sample)
    return DatasetFile(path=path, samples=tuple(samples), duplicates_removed=duplicates)


def write_dataset(samples, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sample in samples:
            fh.write(json.dumps(sample_to_obj(sample), sort_keys=True,
                                separators=(",", ":")))
            fh.write("\n")


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def export_dot(pdg: ProgramDependenceGraph, highlight: FlowPath | None = None) -> str:
    """Graphviz text; data edges dashed with var labels, path in red."""
    hot_nodes: set[int] = set()
    hot_edges: set[tuple[int, int]] = set()
    if highlight is not None:
        hot_nodes = set(highlight.nodes)
        # Traversal is sink-first, so the drawn dependence edge runs n[i+1] -> n[i].
        for a, b in zip(highlight.nodes[1:], highlight.nodes):
            hot_edges.add((a, b))
    lines = ["digraph pdg {", '  node [shape=box, fontname="monospace"];']
    for n in sorted(pdg.nodes, key=lambda n: n.id):
        attrs = [f'label="{n.line}: {_dot_escape(n.code)}"']
        if n.id in hot_nodes:
            attrs.append('color=red')
            attrs.append('penwidth=2')
        lines.append(f"  n{n.id} [{', '.join(attrs)}];")
    for e in sorted(pdg.edges, key=DependenceEdge.sort_key):
        attrs = []
        if e.kind == DATA:
            attrs.append("style=dashed")
            attrs.append(f'label="{_dot_escape(e.var or "")}"')
        if (e.src, e.dst) in hot_edges:
            attrs.append("color=red")
            attrs.append("penwidth=2")
        suffix = f" [{', '.join(attrs)}]" if attrs else ""
        lines.append(f"  n{e.src} -> n{e.dst}{suffix};")
    lines.append("}")
    return "\n".join(lines) + "\n"
