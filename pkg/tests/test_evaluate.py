import pytest

from vulnflow.corpus import PlantedOracleDetector, generate_corpus
from vulnflow.evaluate import (
    EvalReport,
    SampleRow,
    detection_metrics,
    evaluate,
    line_coverage,
    render_report,
)
from vulnflow.graph import (
    FlowPath,
    LabeledSample,
    ProgramDependenceGraph,
    StatementNode,
)
from vulnflow.sinks import FC, SinkPoint, load_sink_config
from vulnflow.slicer import SliceParams


def flow(nodes):
    return FlowPath(nodes=tuple(nodes),
                    psp=SinkPoint(node=nodes[0], kind=FC, key_vars=frozenset(), detail="x"))


def pdg_of(count):
    nodes = tuple(StatementNode(i + 1, i + 1, f"s{i};") for i in range(count))
    return ProgramDependenceGraph(id="g", nodes=nodes, edges=())


def test_line_coverage_exact_values():
    pdg = pdg_of(4)
    assert line_coverage(flow((1, 2)), pdg, [1, 2]) == 1.0
    assert line_coverage(flow((3,)), pdg, [1, 2]) == 0.0
    assert line_coverage(flow((1, 3)), pdg, [1, 2]) == 0.5
    with pytest.raises(ValueError, match="undefined"):
        line_coverage(flow((1,)), pdg, [])


def test_line_coverage_counts_lines_not_nodes():
    nodes = (StatementNode(1, 5, "a;"), StatementNode(2, 5, "b;"), StatementNode(3, 6, "c;"))
    pdg = ProgramDependenceGraph(id="g", nodes=nodes, edges=())
    # Two path nodes share line 5: one vulnerable line hit, one of two covered.
    assert line_coverage(flow((1, 2)), pdg, [5, 6]) == 0.5


def test_detection_metrics_by_hand():
    m = detection_metrics([1, 1, 0, 0, 1], [1, 0, 0, 1, 1])
    assert (m["tp"], m["fp"], m["tn"], m["fn"]) == (2, 1, 1, 1)
    assert m["acc"] == pytest.approx(3 / 5)
    assert m["fpr"] == pytest.approx(1 / 2)
    assert m["fnr"] == pytest.approx(1 / 3)
    assert m["recall"] == pytest.approx(2 / 3)
    assert m["precision"] == pytest.approx(2 / 3)
    assert not m["precision_undefined"]


def test_detection_metrics_degenerate_cases():
    m = detection_metrics([0, 0], [0, 1])
    assert m["precision_undefined"] and m["precision"] == 0.0 and m["f1"] == 0.0
    with pytest.raises(ValueError, match="differ in length"):
        detection_metrics([1], [1, 0])
    with pytest.raises(ValueError, match="no predictions"):
        detection_metrics([], [])


@pytest.fixture(scope="module")
def small_eval():
    samples = [s for s, _ in generate_corpus(seed=11, count=24)]
    report = evaluate(samples, PlantedOracleDetector(), SliceParams(k=5, sparsity=0.5),
                      load_sink_config(), k_values=(3, 5))
    return samples, report


def test_evaluate_rows_grouped_by_k(small_eval):
    samples, report = small_eval
    assert len(report.rows) == 2 * len(samples)
    assert [r.k for r in report.rows[:len(samples)]] == [3] * len(samples)
    assert [r.sample_id for r in report.rows[:len(samples)]] == [s.sample_id for s in samples]


def test_evaluate_oracle_detector_is_perfect(small_eval):
    samples, report = small_eval
    assert report.metrics["acc"] == 1.0
    assert report.metrics["fpr"] == 0.0 and report.metrics["fnr"] == 0.0
    for row in report.rows:
        if row.label == 1:
            assert row.lc == 1.0 and row.selected_lines
        else:
            assert row.lc is None and row.selected_lines is None
    assert report.true_positive_count == len(samples)  # per k block: half of 2x
    assert report.error_count == 0


def test_evaluate_aggregates_cover_every_cwe_and_k(small_eval):
    samples, report = small_eval
    aggregates = report.aggregates()
    cwes = sorted({s.cwe for s in samples if s.label == 1})
    assert [(cwe, k) for cwe, k, _, _ in aggregates] == [
        (cwe, k) for cwe in cwes for k in (3, 5)]
    assert all(mean == 1.0 for _, _, mean, _ in aggregates)


def test_evaluate_parallel_matches_serial(small_eval):
    samples, report = small_eval
    threaded = evaluate(samples, PlantedOracleDetector(), SliceParams(k=5, sparsity=0.5),
                        load_sink_config(), k_values=(3, 5), jobs=4)
    assert threaded.rows == report.rows
    assert threaded.metrics == report.metrics


class ExplodingDetector:
    def score(self, pdg):
        raise RuntimeError("socket wandered off")


def test_evaluate_isolates_detector_failures():
    samples = [s for s, _ in generate_corpus(seed=2, count=4)]
    report = evaluate(samples, ExplodingDetector(), SliceParams(k=3, sparsity=0.5),
                      load_sink_config())
    assert report.error_count == len(samples)
    for row in report.rows:
        assert row.note.startswith("error:") and row.p_graph is None
        assert row.predicted == 0


class AlwaysVulnerable:
    def score(self, pdg):
        return 0.9


def test_true_positive_without_sinks_scores_zero_coverage():
    pdg = ProgramDependenceGraph(
        id="plain", nodes=(StatementNode(1, 1, "int a = 1;"),
                           StatementNode(2, 2, "b = a;")), edges=())
    sample = LabeledSample(sample_id="plain", pdg=pdg, label=1,
                           vuln_lines=(2,), cwe="CWE-000")
    report = evaluate([sample], AlwaysVulnerable(), SliceParams(k=3, sparsity=0.5),
                      load_sink_config())
    (row,) = report.rows
    assert row.lc == 0.0 and row.selected_lines == () and row.note == "no sink points"
    assert report.aggregates() == [("CWE-000", 3, 0.0, 1)]


def test_render_markdown_and_csv(small_eval):
    _, report = small_eval
    md = render_report(report, "markdown")
    lines = md.splitlines()
    assert lines[0] == "| cwe | k | mean_LC | n_samples |"
    assert lines[1] == "| --- | --- | --- | --- |"
    assert any("| 3 | 1.000000 |" in line for line in lines)
    assert any(line.startswith("detector: acc=1.0000") for line in lines)
    csv_text = render_report(report, "csv")
    rows = csv_text.splitlines()
    assert rows[0] == "cwe,k,mean_LC,n_samples"
    assert len(rows) == 1 + len(report.aggregates())
    with pytest.raises(ValueError, match="unknown report format"):
        render_report(report, "html")


def test_render_notes_degenerate_runs():
    row = SampleRow("x", "CWE-000", 3, 1, 0, 0.2, None, None)
    report = EvalReport(rows=(row,), metrics=detection_metrics([0], [1]))
    md = render_report(report)
    assert "(no true positives: line coverage undefined)" in md
    assert "no positive predictions" in md
