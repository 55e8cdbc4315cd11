"""Batch evaluation: detection metrics plus localization line coverage.

Line coverage for one sample is |selected path lines ∩ vulnerable
lines| / |vulnerable lines|. It is measured only on true positives:
a detector that misses a sample gets no credit and no penalty for
where it would have pointed.
"""
from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .graph import FlowPath, LabeledSample, ProgramDependenceGraph, path_lines
from .scorer import Detector, score, select_path
from .sinks import SinkConfig, extract_sink_nodes
from .slicer import SliceParams, generate_slices


def line_coverage(path: FlowPath, pdg: ProgramDependenceGraph,
                  vuln_lines: Sequence[int]) -> float:
    if not vuln_lines:
        raise ValueError("line coverage is undefined without vulnerable lines")
    hit = set(path_lines(path, pdg)) & set(vuln_lines)
    return len(hit) / len(set(vuln_lines))


def detection_metrics(predictions: Sequence[int], labels: Sequence[int]) -> dict:
    """Accuracy, error rates, recall, precision, F1 over parallel 0/1 lists."""
    if len(predictions) != len(labels):
        raise ValueError("predictions and labels differ in length")
    if not predictions:
        raise ValueError("no predictions to score")
    tp = sum(1 for p, y in zip(predictions, labels) if p == 1 and y == 1)
    fp = sum(1 for p, y in zip(predictions, labels) if p == 1 and y == 0)
    tn = sum(1 for p, y in zip(predictions, labels) if p == 0 and y == 0)
    fn = sum(1 for p, y in zip(predictions, labels) if p == 0 and y == 1)
    total = len(predictions)
    precision_undefined = (tp + fp) == 0
    precision = 0.0 if precision_undefined else tp / (tp + fp)
    recall = 0.0 if (tp + fn) == 0 else tp / (tp + fn)
    f1 = 0.0 if (precision + recall) == 0 else 2 * precision * recall / (precision + recall)
    return {
        "tp": tp, "fp": fp, "tn": tn, "fn": fn,
        "acc": (tp + tn) / total,
        "fpr": 0.0 if (fp + tn) == 0 else fp / (fp + tn),
        "fnr": 0.0 if (fn + tp) == 0 else fn / (fn + tp),
        "recall": recall,
        "precision": precision,
        "f1": f1,
        "precision_undefined": precision_undefined,
    }


@dataclass(frozen=True)
class SampleRow:
    sample_id: str
    cwe: str
    k: int
    label: int
    predicted: int
    p_graph: Optional[float]
    lc: Optional[float]                     # set on true positives only
    selected_lines: Optional[tuple[int, ...]]
    note: str = ""


@dataclass(frozen=True)
class EvalReport:
    rows: tuple[SampleRow, ...]
    metrics: dict

    def aggregates(self) -> list[tuple[str, int, float, int]]:
        """(cwe, k, mean LC, n true positives), sorted by cwe then k."""
        buckets: dict[tuple[str, int], list[float]] = {}
        for row in self.rows:
            if row.lc is not None:
                buckets.setdefault((row.cwe, row.k), []).append(row.lc)
        return [(cwe, k, sum(vals) / len(vals), len(vals))
                for (cwe, k), vals in sorted(buckets.items())]

    @property
    def true_positive_count(self) -> int:
        return sum(1 for row in self.rows if row.lc is not None)

    @property
    def error_count(self) -> int:
        return sum(1 for row in self.rows if row.note.startswith("error:"))


def _evaluate_sample(sample: LabeledSample, detector: Detector, k: int,
                     params: SliceParams, sink_config: SinkConfig,
                     threshold: float) -> SampleRow:
    try:
        p_graph = score(detector, sample.pdg)
    except Exception as exc:  # scorer failure poisons the sample, not the batch
        return SampleRow(sample.sample_id, sample.cwe, k, sample.label,
                         predicted=0, p_graph=None, lc=None,
                         selected_lines=None, note=f"error: {exc}")
    predicted = 1 if p_graph >= threshold else 0
    if not (predicted == 1 and sample.label == 1):
        return SampleRow(sample.sample_id, sample.cwe, k, sample.label,
                         predicted, p_graph, lc=None, selected_lines=None)
    sinks = extract_sink_nodes(sample.pdg, sink_config)
    if not sinks:
        # A true positive the slicer cannot explain scores zero coverage.
        return SampleRow(sample.sample_id, sample.cwe, k, sample.label,
                         predicted, p_graph, lc=0.0, selected_lines=(),
                         note="no sink points")
    try:
        paths = generate_slices(sample.pdg, params, sinks)
        explanation = select_path(sample.pdg, paths, detector)
    except Exception as exc:
        return SampleRow(sample.sample_id, sample.cwe, k, sample.label,
                         predicted, p_graph, lc=None, selected_lines=None,
                         note=f"error: {exc}")
    lines = tuple(path_lines(explanation.selected.path, sample.pdg))
    lc = line_coverage(explanation.selected.path, sample.pdg, sample.vuln_lines)
    return SampleRow(sample.sample_id, sample.cwe, k, sample.label,
                     predicted, p_graph, lc=lc, selected_lines=lines)


def evaluate(samples: Sequence[LabeledSample], detector: Detector,
             params: SliceParams, sink_config: SinkConfig, *,
             k_values: Optional[Sequence[int]] = None,
             threshold: float = 0.5, jobs: int = 1,
             detector_factory: Optional[Callable[[], Detector]] = None) -> EvalReport:
    """Score every sample at every k; pure in its inputs, so reruns agree.

    With jobs > 1, samples are evaluated in a thread pool; pass
    detector_factory when the detector cannot be shared across threads
    (one instance is created per worker). Row order is always dataset
    order, grouped by k.
    """
    if not samples:
        raise ValueError("cannot evaluate an empty dataset")
    ks = tuple(k_values) if k_values else (params.k,)
    tasks = [(sample, SliceParams(k=k, sparsity=params.sparsity), k)
             for k in ks for sample in samples]
    if jobs <= 1:
        rows = [_evaluate_sample(sample, detector, k, p, sink_config, threshold)
                for sample, p, k in tasks]
    else:
        import threading

        local = threading.local()
        instances: list = []

        def held_detector() -> Detector:
            if detector_factory is None:
                return detector
            if not hasattr(local, "detector"):
                local.detector = detector_factory()
                instances.append(local.detector)
            return local.detector

        def run(task) -> SampleRow:
            sample, p, k = task
            return _evaluate_sample(sample, held_detector(), k, p, sink_config, threshold)

        try:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                rows = list(pool.map(run, tasks))
        finally:
            for inst in instances:
                close = getattr(inst, "close", None)
                if close:
                    close()
    # Detection metrics are per sample, not per k: use the first k block.
    block = [row for row in rows if row.k == ks[0]]
    metrics = detection_metrics([r.predicted for r in block], [r.label for r in block])
    return EvalReport(rows=tuple(rows), metrics=metrics)


def _format_mean(value: float) -> str:
    return f"{value:.6f}"


def render_report(report: EvalReport, fmt: str = "markdown") -> str:
    """Aggregate table plus detector metrics; markdown or csv."""
    aggregates = report.aggregates()
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["cwe", "k", "mean_LC", "n_samples"])
        for cwe, k, mean_lc, n in aggregates:
            writer.writerow([cwe, k, _format_mean(mean_lc), n])
        return buf.getvalue()
    if fmt != "markdown":
        raise ValueError(f"unknown report format {fmt!r}")
    lines = ["| cwe | k | mean_LC | n_samples |", "| --- | --- | --- | --- |"]
    for cwe, k, mean_lc, n in aggregates:
        lines.append(f"| {cwe} | {k} | {_format_mean(mean_lc)} | {n} |")
    if not aggregates:
        lines.append("| (no true positives: line coverage undefined) | - | - | - |")
    m = report.metrics
    lines.append("")
    lines.append(f"detector: acc={m['acc']:.4f} fpr={m['fpr']:.4f} fnr={m['fnr']:.4f} "
                 f"recall={m['recall']:.4f} precision={m['precision']:.4f} f1={m['f1']:.4f}")
    if m["precision_undefined"]:
        lines.append("note: no positive predictions; precision and F1 reported as 0.")
    if report.error_count:
        lines.append(f"note: {report.error_count} sample evaluations failed.")
    return "\n".join(lines) + "\n"
