"""Find reusable business components in a dependency graph.

Pipeline: ingest a weighted directed graph, compute dependency strength,
cluster under a minimum-strength threshold, name the clusters as components,
measure their coupling (CBOM), split the worst offenders, and keep reuse
counts in a small repository file.
"""

__version__ = "0.1.0"

from component_miner.clusterer import Clustering, Component, ComponentSet, cluster, map_to_components, sweep
from component_miner.ds import DSMatrix, DSStrategy, compute_ds, distinct_thresholds
from component_miner.errors import ComponentMinerError, InputError, InvariantError, UsageError
from component_miner.graph import (
    DependencyEdge,
    DependencyGraph,
    Element,
    enumerate_execution_orders,
    graph_to_dot,
    graph_to_json,
    ingest_invocation_log,
    load_graph,
    parse_dot_graph,
    parse_json_graph,
)
from component_miner.metrics import (
    CbomMode,
    Rule,
    SplitResult,
    apply_split,
    cbom,
    cbom_report,
    cohesion,
    select_reconfigurable_max,
    select_reconfigurable_threshold,
    split_component,
)
from component_miner.repository import ComponentRecord, RepositoryStore, record_reuse, register, reuse_report

__all__ = [
    "CbomMode",
    "Clustering",
    "Component",
    "ComponentMinerError",
    "ComponentRecord",
    "ComponentSet",
    "DSMatrix",
    "DSStrategy",
    "DependencyEdge",
    "DependencyGraph",
    "Element",
    "InputError",
    "InvariantError",
    "RepositoryStore",
    "Rule",
    "SplitResult",
    "UsageError",
    "apply_split",
    "cbom",
    "cbom_report",
    "cluster",
    "cohesion",
    "compute_ds",
    "distinct_thresholds",
    "enumerate_execution_orders",
    "graph_to_dot",
    "graph_to_json",
    "ingest_invocation_log",
    "load_graph",
    "map_to_components",
    "parse_dot_graph",
    "parse_json_graph",
    "record_reuse",
    "register",
    "reuse_report",
    "select_reconfigurable_max",
    "select_reconfigurable_threshold",
    "split_component",
    "sweep",
]
