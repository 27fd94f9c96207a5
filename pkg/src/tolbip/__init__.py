"""Tolerant bipartiteness testing in the dense graph model."""

from .errors import CapacityError, ConfigurationError, DomainError, TolBipError, VerificationFailure
from .graph import (
    Bipartition,
    ClassificationParams,
    DenseGraph,
    Side,
    VertexClass,
    VertexLabel,
    bip_distance_wrt,
    classify_vertex,
    edge_count,
    exact_bip_distance,
    exact_maxcut,
    read_graph,
    write_graph,
)
from .oracle import AdjacencyOracle, MemoizingOracle, QueryLedger, QueryOracle, RecordingOracle
from .tester import Decision, TesterParams, TieBreak, Verdict, run_tester

__version__ = "0.1.0"

__all__ = [
    "AdjacencyOracle",
    "Bipartition",
    "CapacityError",
    "ClassificationParams",
    "ConfigurationError",
    "Decision",
    "DenseGraph",
    "DomainError",
    "MemoizingOracle",
    "QueryLedger",
    "QueryOracle",
    "RecordingOracle",
    "Side",
    "TesterParams",
    "TieBreak",
    "TolBipError",
    "VerificationFailure",
    "Verdict",
    "VertexClass",
    "VertexLabel",
    "bip_distance_wrt",
    "classify_vertex",
    "edge_count",
    "exact_bip_distance",
    "exact_maxcut",
    "read_graph",
    "run_tester",
    "write_graph",
]
