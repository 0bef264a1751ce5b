"""Threshold clustering with transitive merging, and mapping clusters to components.

Two elements join a cluster when their dependency strength reaches
``f_min``; membership is then closed transitively.  That closure is
exactly the connected components of the "passes the threshold" graph,
which is what :func:`cluster` computes with a union-find.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from component_miner.ds import DSMatrix, DSStrategy, distinct_thresholds
from component_miner.errors import InputError, InvariantError, UsageError
from component_miner.graph import DependencyGraph


class DisjointSet:
    def __init__(self, size: int):
        self.parent = list(range(size))
        self.rank = [0] * size

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True

    def groups(self) -> list[list[int]]:
        out: dict[int, list[int]] = {}
        for i in range(len(self.parent)):
            out.setdefault(self.find(i), []).append(i)
        return list(out.values())


def canonical_partition(blocks: Iterable[Iterable[str]]) -> tuple[tuple[str, ...], ...]:
    """Members sorted inside each block, blocks ordered by their smallest member."""
    return tuple(sorted(tuple(sorted(b)) for b in blocks))


@dataclass(frozen=True)
class Clustering:
    f_min: float
    clusters: tuple[tuple[str, ...], ...]
    strategy: DSStrategy

    def __post_init__(self):
        object.__setattr__(self, "clusters", canonical_partition(self.clusters))

    def __len__(self) -> int:
        return len(self.clusters)

    @property
    def elements(self) -> list[str]:
        return sorted(e for c in self.clusters for e in c)

    def cluster_of(self, element_id: str) -> int:
        for k, members in enumerate(self.clusters):
            if element_id in members:
                return k
        raise KeyError(element_id)

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy.value,
            "f_min": self.f_min,
            "clusters": [list(c) for c in self.clusters],
        }


def check_partition(blocks: Sequence[Sequence[str]], universe: Iterable[str]) -> None:
    seen: set[str] = set()
    for block in blocks:
        if not block:
            raise InvariantError("empty cluster")
        for e in block:
            if e in seen:
                raise InvariantError(f"element {e!r} appears in two clusters")
            seen.add(e)
    if seen != set(universe):
        raise InvariantError("clusters do not cover exactly the element set")


def _check_f_min(f_min: float) -> float:
    f_min = float(f_min)
    if math.isnan(f_min) or f_min < 0:
        raise UsageError(f"f_min must be a non-negative number, got {f_min}")
    return f_min


def cluster(matrix: DSMatrix, f_min: float) -> Clustering:
    """Merge every pair with DS >= ``f_min`` and close transitively."""
    f_min = _check_f_min(f_min)
    values = matrix.clustering_values()
    n = len(matrix)
    dsu = DisjointSet(n)
    rows, cols = np.nonzero(np.triu(values >= f_min, k=1))
    for i, j in zip(rows.tolist(), cols.tolist()):
        dsu.union(i, j)
    blocks = [[matrix.order[i] for i in g] for g in dsu.groups()]
    check_partition(blocks, matrix.order)
    return Clustering(f_min, blocks, matrix.strategy)


def sweep(matrix: DSMatrix) -> list[tuple[float, Clustering]]:
    """Clusterings at every distinct threshold, from all-singletons downward.

    The first entry sits just above the largest value (nothing merges); each
    following entry lowers ``f_min`` to the next distinct positive value.
    Pairs are fed to one union-find in descending strength order, so the
    whole chain costs a single sort.
    """
    values = matrix.clustering_values()
    n = len(matrix)
    iu, ju = np.triu_indices(n, k=1)
    strengths = values[iu, ju]
    above = float(np.nextafter(values.max() if n else 0.0, np.inf))
    entries = [(above, Clustering(above, [[e] for e in matrix.order], matrix.strategy))]

    # Raw matrices may carry directional values that the symmetric view drops;
    # they still get an entry so the chain matches distinct_thresholds().
    thresholds = sorted(distinct_thresholds(matrix), reverse=True)
    order = np.argsort(-strengths, kind="stable")
    dsu = DisjointSet(n)
    cursor = 0
    for t in thresholds:
        while cursor < len(order) and strengths[order[cursor]] >= t:
            k = order[cursor]
            dsu.union(int(iu[k]), int(ju[k]))
            cursor += 1
        blocks = [[matrix.order[i] for i in g] for g in dsu.groups()]
        entries.append((t, Clustering(t, blocks, matrix.strategy)))
    return entries


# ---------------------------------------------------------------- components


@dataclass(frozen=True)
class Component:
    name: str
    members: tuple[str, ...]

    def __post_init__(self):
        if not self.name:
            raise InputError("component name must be non-empty")
        members = tuple(sorted(self.members))
        if not members:
            raise InputError(f"component {self.name!r} has no members")
        if len(set(members)) != len(members):
            raise InputError(f"component {self.name!r} lists a member twice")
        object.__setattr__(self, "members", members)

    def __contains__(self, element_id: str) -> bool:
        return element_id in self.members

    def __len__(self) -> int:
        return len(self.members)

    def to_dict(self) -> dict:
        return {"name": self.name, "members": list(self.members)}


COMPONENTS_SCHEMA = "components/1"


@dataclass(frozen=True)
class ComponentSet:
    components: tuple[Component, ...]
    source_f_min: float | None = None
    strategy: DSStrategy | None = None

    def __post_init__(self):
        comps = tuple(self.components)
        names = [c.name for c in comps]
        if len(set(names)) != len(names):
            raise InputError("component names must be unique")
        try:
            check_partition([c.members for c in comps], [m for c in comps for m in c.members])
        except InvariantError as exc:
            raise InputError(str(exc)) from None
        object.__setattr__(self, "components", comps)

    def __len__(self) -> int:
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.components]

    def get(self, name: str) -> Component:
        for c in self.components:
            if c.name == name:
                return c
        raise UsageError(f"no component named {name!r}")

    def owner(self) -> dict[str, str]:
        return {m: c.name for c in self.components for m in c.members}

    def check_covers(self, graph: DependencyGraph) -> None:
        covered = set(self.owner())
        if covered != set(graph.ids):
            missing = sorted(set(graph.ids) - covered)
            extra = sorted(covered - set(graph.ids))
            raise InputError(
                f"component set does not partition the graph (missing {missing[:5]}, unknown {extra[:5]})"
            )

    def replace(self, name: str, parts: Sequence[Component]) -> ComponentSet:
        """Swap one component for ``parts``, keeping its position."""
        idx = self.names.index(name)
        comps = self.components[:idx] + tuple(parts) + self.components[idx + 1:]
        return ComponentSet(comps, self.source_f_min, self.strategy)

    def to_dict(self) -> dict:
        return {
            "schema": COMPONENTS_SCHEMA,
            "strategy": self.strategy.value if self.strategy else None,
            "source_f_min": self.source_f_min,
            "components": [c.to_dict() for c in self.components],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> ComponentSet:
        if not isinstance(doc, dict) or doc.get("schema", COMPONENTS_SCHEMA) != COMPONENTS_SCHEMA:
            raise InputError(f"expected a {COMPONENTS_SCHEMA} document")
        raw = doc.get("components")
        if not isinstance(raw, list):
            raise InputError("'components' must be a list", "$.components")
        comps = []
        for i, item in enumerate(raw):
            where = f"$.components[{i}]"
            if not isinstance(item, dict) or not isinstance(item.get("name"), str):
                raise InputError("component needs a string 'name'", where)
            members = item.get("members")
            if not isinstance(members, list) or not all(isinstance(m, str) for m in members):
                raise InputError("'members' must be a list of strings", where)
            comps.append(Component(item["name"], tuple(members)))
        strategy = doc.get("strategy")
        try:
            strategy = DSStrategy(strategy) if strategy else None
        except ValueError:
            raise InputError(f"unknown strategy {strategy!r}", "$.strategy") from None
        return cls(tuple(comps), doc.get("source_f_min"), strategy)


def _unique(name: str, taken: set[str]) -> str:
    if name not in taken:
        return name
    k = 2
    while f"{name}#{k}" in taken:
        k += 1
    return f"{name}#{k}"


def map_to_components(clustering: Clustering, graph: DependencyGraph) -> ComponentSet:
    """One component per cluster, named after the members' majority container.

    Clusters without labels, or with a tied vote, fall back to ``C<k>``
    (1-based, canonical cluster order). Repeated names get ``#2``, ``#3``...
    """
    if sorted(graph.ids) != clustering.elements:
        raise UsageError("clustering does not partition the graph's element set")
    containers = {el.id: el.container for el in graph.elements}
    taken: set[str] = set()
    comps = []
    for k, members in enumerate(clustering.clusters, start=1):
        votes = Counter(containers[m] for m in members if containers[m] is not None).most_common()
        if votes and (len(votes) == 1 or votes[0][1] > votes[1][1]):
            base = votes[0][0]
        else:
            base = f"C{k}"
        name = _unique(base, taken)
        taken.add(name)
        comps.append(Component(name, members))
    return ComponentSet(tuple(comps), clustering.f_min, clustering.strategy)
