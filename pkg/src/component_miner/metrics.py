"""Component coupling (CBOM), reconfiguration selection and component splitting."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import networkx as nx
import numpy as np

from component_miner.clusterer import Component, ComponentSet
from component_miner.errors import UsageError
from component_miner.graph import DependencyGraph

EXHAUSTIVE_LIMIT = 15
STOER_WAGNER_LIMIT = 200


class CbomMode(str, enum.Enum):
    WEIGHTED = "weighted"
    DISTINCT = "distinct"

    def __str__(self) -> str:
        return self.value


class Rule(str, enum.Enum):
    MAX = "max"
    THRESHOLD = "threshold"

    def __str__(self) -> str:
        return self.value


def _resolve(component: Component | str, components: ComponentSet) -> Component:
    if isinstance(component, str):
        return components.get(component)
    if component not in components.components:
        raise UsageError(f"component {component.name!r} is not part of the component set")
    return component


def cbom(
    component: Component | str,
    components: ComponentSet,
    graph: DependencyGraph,
    mode: CbomMode | str = CbomMode.WEIGHTED,
) -> int:
    """Outgoing invocations from ``component`` to elements outside it.

    ``weighted`` sums edge weights; ``distinct`` counts the external
    elements reached.
    """
    mode = CbomMode(mode)
    comp = _resolve(component, components)
    components.check_covers(graph)
    inside = set(comp.members)
    total = 0
    reached: set[str] = set()
    for src in comp.members:
        for dst, w in graph.successors(src).items():
            if dst not in inside:
                total += w
                reached.add(dst)
    return total if mode is CbomMode.WEIGHTED else len(reached)


def select_reconfigurable_max(items: Iterable[tuple[str, int]]) -> str:
    """Name with the largest CBOM; ties go to the smallest name."""
    items = list(items)
    if not items:
        raise UsageError("cannot select from an empty component list")
    return min(items, key=lambda it: (-it[1], it[0]))[0]


def select_reconfigurable_threshold(items: Iterable[tuple[str, int]], p: int) -> list[str]:
    """Names whose CBOM is strictly greater than ``p``, sorted."""
    if p < 0:
        raise UsageError(f"P must be non-negative, got {p}")
    return sorted(name for name, value in items if value > p)


class CbomEntry(NamedTuple):
    name: str
    cbom: int


@dataclass(frozen=True)
class CbomReport:
    entries: tuple[CbomEntry, ...]
    mode: CbomMode
    rule: Rule
    p: int | None
    reconfigurable: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "rule": self.rule.value,
            "p": self.p,
            "cbom": [{"name": e.name, "cbom": e.cbom} for e in self.entries],
            "reconfigurable": list(self.reconfigurable),
        }


def select(items: Iterable[tuple[str, int]], rule: Rule | str, p: int | None = None) -> tuple[str, ...]:
    rule = Rule(rule)
    items = list(items)
    if rule is Rule.MAX:
        if p is not None:
            raise UsageError("P is only meaningful with the threshold rule")
        return (select_reconfigurable_max(items),) if items else ()
    if p is None:
        raise UsageError("the threshold rule needs P")
    return tuple(select_reconfigurable_threshold(items, p))


def cbom_report(
    components: ComponentSet,
    graph: DependencyGraph,
    mode: CbomMode | str = CbomMode.WEIGHTED,
    rule: Rule | str = Rule.MAX,
    p: int | None = None,
) -> CbomReport:
    mode = CbomMode(mode)
    entries = tuple(CbomEntry(c.name, cbom(c, components, graph, mode)) for c in components)
    return CbomReport(entries, mode, Rule(rule), p, select(entries, rule, p))


# ---------------------------------------------------------------- cohesion


def cohesion(component: Component, graph: DependencyGraph) -> float:
    """Internal weight over internal plus outgoing weight; 0 when both are 0."""
    inside = set(component.members)
    internal = external = 0
    for src in component.members:
        for dst, w in graph.successors(src).items():
            if dst in inside:
                internal += w
            else:
                external += w
    total = internal + external
    return internal / total if total else 0.0


# ---------------------------------------------------------------- split


@dataclass(frozen=True)
class SplitResult:
    original: Component
    parts: tuple[Component, Component]
    cut_weight: int
    method: str  # "exhaustive" or "heuristic"

    def to_dict(self) -> dict:
        return {
            "original": self.original.to_dict(),
            "parts": [p.to_dict() for p in self.parts],
            "cut_weight": self.cut_weight,
            "method": self.method,
        }


def _internal_weights(members: tuple[str, ...], graph: DependencyGraph) -> np.ndarray:
    index = {m: i for i, m in enumerate(members)}
    w = np.zeros((len(members), len(members)), dtype=np.int64)
    for src in members:
        for dst, weight in graph.successors(src).items():
            if dst in index:
                w[index[src], index[dst]] += weight
    return w + w.T


def _exhaustive(w: np.ndarray) -> tuple[int, np.ndarray]:
    # members[0] always stays on side 0; every other member takes a bit of the mask.
    n = w.shape[0]
    masks = np.arange(1, 1 << (n - 1), dtype=np.int64)
    sides = np.zeros((masks.size, n), dtype=np.int64)
    sides[:, 1:] = (masks[:, None] >> np.arange(n - 1)) & 1
    cuts = ((sides @ w) * (1 - sides)).sum(axis=1)
    best = int(cuts.min())
    tied = sides[cuts == best]
    return best, tied


def _cut(w: np.ndarray, side: np.ndarray) -> int:
    return int(w[np.ix_(side == 0, side == 1)].sum())


def _seed_partition(w: np.ndarray) -> np.ndarray:
    """Deterministic starting bipartition for the local search.

    Disconnected members split for free along a connected component.
    Otherwise a Stoer-Wagner minimum cut is used up to ``STOER_WAGNER_LIMIT``
    members, and the cheapest single-member cut beyond that.
    """
    n = w.shape[0]
    g = nx.Graph()
    g.add_nodes_from(range(n))
    for i, j in zip(*np.nonzero(np.triu(w, k=1))):
        g.add_edge(int(i), int(j), weight=int(w[i, j]))
    side = np.ones(n, dtype=np.int64)
    if not nx.is_connected(g):
        side[list(nx.node_connected_component(g, 0))] = 0
    elif n <= STOER_WAGNER_LIMIT:
        _, (part, _) = nx.stoer_wagner(g)
        side[list(part)] = 0
    else:
        side[int(np.argmin(w.sum(axis=1)))] = 0
    return side


def _local_search(w: np.ndarray, side: np.ndarray) -> np.ndarray:
    """Best single move, else best swap, while the cut strictly shrinks."""
    side = side.copy()
    while True:
        across = side[None, :] != side[:, None]
        # Moving i lowers the cut by gain[i]; swapping i and j by gain[i] + gain[j] - 2 w[i, j].
        gain = (w * across).sum(axis=1) - (w * ~across).sum(axis=1)
        sizes = np.bincount(side, minlength=2)
        movable = sizes[side] > 1
        if movable.any() and gain[movable].max() > 0:
            i = int(np.flatnonzero(movable)[np.argmax(gain[movable])])
            side[i] ^= 1
            continue
        swap = np.where(across, gain[:, None] + gain[None, :] - 2 * w, 0)
        if swap.max() <= 0:
            return side
        i, j = np.unravel_index(int(np.argmax(swap)), swap.shape)
        side[i] ^= 1
        side[j] ^= 1


def split_component(
    component: Component, graph: DependencyGraph, exhaustive_limit: int = EXHAUSTIVE_LIMIT
) -> SplitResult:
    """Bisect ``component`` along the lightest cut of its internal invocations.

    Up to ``exhaustive_limit`` members every bipartition is scored and ties go
    to the partition whose first part (the one holding the smallest member)
    has the lexicographically smallest member list.  Larger components use
    move/swap local search from a deterministic seed (see ``_seed_partition``).
    """
    members = component.members
    if len(members) < 2:
        raise UsageError(f"component {component.name!r} needs at least 2 members to split")
    w = _internal_weights(members, graph)

    if len(members) <= exhaustive_limit:
        method = "exhaustive"
        best, tied = _exhaustive(w)
        candidates = [tuple(m for m, s in zip(members, row) if s == 0) for row in tied]
        first = min(candidates)
    else:
        method = "heuristic"
        side = _local_search(w, _seed_partition(w))
        if side[0] != 0:
            side ^= 1
        best = _cut(w, side)
        first = tuple(m for m, s in zip(members, side) if s == 0)

    second = tuple(m for m in members if m not in set(first))
    parts = (Component(f"{component.name}_1", first), Component(f"{component.name}_2", second))
    return SplitResult(component, parts, best, method)


def apply_split(components: ComponentSet, split: SplitResult) -> ComponentSet:
    return components.replace(split.original.name, split.parts)
