"""Vulnerability localization over program dependence graphs.

Build a dependence graph from C-like source, find potential sink
statements, slice backward flow paths from each sink, and rank the
paths by how much of a detector's graph-level verdict each one keeps.
"""

__version__ = "0.1.0"

from .builder import BuilderError, build_cfg, build_pdg, build_pdg_from_program
from .evaluate import EvalReport, detection_metrics, evaluate, line_coverage, render_report
from .external import ExternalScorer, ScorerProtocolError
from .graph import (
    CONTROL,
    DATA,
    DependenceEdge,
    FlowPath,
    GraphError,
    LabeledSample,
    ProgramDependenceGraph,
    StatementNode,
    induced_subgraph,
    path_lines,
    predecessors,
    program_order,
    validate,
)
from .graphio import (
    DatasetFile,
    SchemaError,
    export_dot,
    read_dataset,
    read_pdg_json,
    write_dataset,
    write_pdg_json,
)
from .minic import MiniCStatement, ParseError, Program, parse_minic
from .scorer import (
    BaselineModel,
    Explanation,
    PathScore,
    importance,
    select_path,
    train_baseline,
    vectorize,
)
from .sinks import SinkConfig, SinkPoint, classify_statement, extract_sink_nodes, load_sink_config
from .slicer import SliceParams, dedup_paths, extract_prec_nodes, generate_slices, max_nodes

__all__ = [name for name in dir() if not name.startswith("_")]
