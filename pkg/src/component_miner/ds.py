"""Dependency Strength (DS) matrices.

There is no single agreed definition of the strength between two elements,
so the matrix is computed under one of several strategies:

``raw_out``
    F[i, j] = weight(i -> j). Directional.
``symmetric_sum``
    F[i, j] = weight(i -> j) + weight(j -> i).
``normalized_symmetric`` (default)
    ``symmetric_sum`` divided by its largest entry, so thresholds live in
    [0, 1] whatever the project size. An edgeless graph gives all zeros.
``jaccard``
    Overlap of undirected neighbour sets, 0 when both sets are empty.

The diagonal is always 0.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from component_miner.errors import InputError
from component_miner.graph import DependencyGraph


class DSStrategy(str, enum.Enum):
    RAW_OUT = "raw_out"
    SYMMETRIC_SUM = "symmetric_sum"
    NORMALIZED_SYMMETRIC = "normalized_symmetric"
    JACCARD = "jaccard"

    @property
    def symmetric(self) -> bool:
        return self is not DSStrategy.RAW_OUT

    def __str__(self) -> str:
        return self.value


DEFAULT_STRATEGY = DSStrategy.NORMALIZED_SYMMETRIC


@dataclass(frozen=True, eq=False)
class DSMatrix:
    order: tuple[str, ...]
    values: np.ndarray
    strategy: DSStrategy

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "order", tuple(self.order))
        object.__setattr__(self, "strategy", DSStrategy(self.strategy))

    def __eq__(self, other):
        if not isinstance(other, DSMatrix):
            return NotImplemented
        return (
            self.order == other.order
            and self.strategy == other.strategy
            and np.array_equal(self.values, other.values)
        )

    def __len__(self) -> int:
        return len(self.order)

    def index(self, element_id: str) -> int:
        return self.order.index(element_id)

    def value(self, a: str, b: str) -> float:
        return float(self.values[self.index(a), self.index(b)])

    def clustering_values(self) -> np.ndarray:
        """Symmetric view used for clustering; ``raw_out`` is folded with max."""
        if self.strategy.symmetric:
            return self.values
        return np.maximum(self.values, self.values.T)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.order)
        for row in self.values:
            writer.writerow(f"{v:.9g}" for v in row)
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")


def _adjacency(graph: DependencyGraph) -> np.ndarray:
    index = {eid: i for i, eid in enumerate(graph.ids)}
    adj = np.zeros((len(graph), len(graph)), dtype=np.int64)
    for e in graph.edges:
        adj[index[e.source], index[e.target]] = e.weight
    return adj


def compute_ds(graph: DependencyGraph, strategy: DSStrategy | str = DEFAULT_STRATEGY) -> DSMatrix:
    strategy = DSStrategy(strategy)
    if len(graph) == 0:
        raise InputError("empty graph")
    adj = _adjacency(graph)

    if strategy is DSStrategy.RAW_OUT:
        values = adj.astype(np.float64)
    elif strategy is DSStrategy.SYMMETRIC_SUM:
        values = (adj + adj.T).astype(np.float64)
    elif strategy is DSStrategy.NORMALIZED_SYMMETRIC:
        sym = adj + adj.T
        top = sym.max()
        # Integer numerators and denominators keep the result exact under scaling.
        values = sym / top if top > 0 else np.zeros(sym.shape)
    else:
        linked = (adj + adj.T) > 0
        inter = linked.astype(np.int64) @ linked.astype(np.int64)
        degree = linked.sum(axis=1)
        union = degree[:, None] + degree[None, :] - inter
        values = np.divide(inter, union, out=np.zeros(inter.shape), where=union > 0)

    values = np.array(values, dtype=np.float64)
    np.fill_diagonal(values, 0.0)
    return DSMatrix(graph.ids, values, strategy)


def distinct_thresholds(matrix: DSMatrix) -> list[float]:
    """Strictly increasing list of the distinct positive off-diagonal values."""
    n = len(matrix)
    off = ~np.eye(n, dtype=bool)
    vals = matrix.values[off]
    return [float(v) for v in np.unique(vals[vals > 0])]
