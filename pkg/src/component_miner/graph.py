"""Weighted directed dependency graphs and their external formats.

Three ingest paths produce the same canonical :class:`DependencyGraph`:

* JSON documents (``depgraph/1`` schema),
* a small DOT subset (``digraph``, node/edge statements, ``weight``),
* CSV invocation logs with a ``caller,callee[,count]`` header.

All of them merge duplicate edges by summing weights and drop self-edges.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import re
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from component_miner.errors import InputError

log = logging.getLogger(__name__)

JSON_SCHEMA = "depgraph/1"
_CONTROL_CHARS = re.compile(r"[\x00-\x1f\x7f]")


def check_id(value: object, where: str | None = None) -> str:
    if not isinstance(value, str):
        raise InputError(f"element id must be a string, got {type(value).__name__}", where)
    if not value:
        raise InputError("element id must be non-empty", where)
    if value != value.strip():
        raise InputError(f"element id {value!r} has leading/trailing whitespace", where)
    if _CONTROL_CHARS.search(value):
        raise InputError(f"element id {value!r} contains control characters", where)
    return value


@dataclass(frozen=True)
class Element:
    id: str
    container: str | None = None
    methods: tuple[str, ...] = ()

    def __post_init__(self):
        check_id(self.id)
        if self.container is not None:
            if not isinstance(self.container, str) or not self.container.strip():
                raise InputError(f"container of {self.id!r} must be a non-empty string")
        methods = tuple(self.methods)
        for m in methods:
            if not isinstance(m, str) or not m or m != m.strip() or "," in m:
                raise InputError(f"invalid method name {m!r} on {self.id!r}")
        if len(set(methods)) != len(methods):
            raise InputError(f"duplicate method names on {self.id!r}")
        object.__setattr__(self, "methods", methods)


@dataclass(frozen=True, order=True)
class DependencyEdge:
    source: str
    target: str
    weight: int

    def __post_init__(self):
        if isinstance(self.weight, bool) or not isinstance(self.weight, int) or self.weight < 1:
            raise InputError(
                f"edge {self.source}->{self.target}: weight must be a positive integer, got {self.weight!r}"
            )


@dataclass(frozen=True, init=False)
class DependencyGraph:
    """Immutable element set plus merged, self-loop-free weighted edges.

    Elements are kept sorted by id and edges by ``(source, target)``, so two
    graphs built from the same data compare equal regardless of input order.
    """

    elements: tuple[Element, ...]
    edges: tuple[DependencyEdge, ...]
    _out: dict = field(compare=False, repr=False, hash=False)

    def __init__(self, elements: Iterable[Element] = (), edges: Iterable = ()):
        by_id: dict[str, Element] = {}
        for el in elements:
            if el.id in by_id:
                raise InputError(f"duplicate element id {el.id!r}")
            by_id[el.id] = el

        merged: dict[tuple[str, str], int] = defaultdict(int)
        for edge in edges:
            if not isinstance(edge, DependencyEdge):
                edge = DependencyEdge(*edge)
            for end in (edge.source, edge.target):
                if end not in by_id:
                    raise InputError(f"edge {edge.source}->{edge.target} references unknown element {end!r}")
            if edge.source == edge.target:
                log.warning("dropping self-edge on %s (weight %d)", edge.source, edge.weight)
                continue
            merged[edge.source, edge.target] += edge.weight

        out: dict[str, dict[str, int]] = {i: {} for i in sorted(by_id)}
        for (s, t), w in merged.items():
            out[s][t] = w
        object.__setattr__(self, "elements", tuple(by_id[i] for i in sorted(by_id)))
        object.__setattr__(
            self, "edges", tuple(DependencyEdge(s, t, w) for (s, t), w in sorted(merged.items()))
        )
        object.__setattr__(self, "_out", out)

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(el.id for el in self.elements)

    def element(self, element_id: str) -> Element:
        for el in self.elements:
            if el.id == element_id:
                return el
        raise KeyError(element_id)

    def weight(self, source: str, target: str) -> int:
        """Invocation weight of ``source -> target``, 0 when there is no edge."""
        return self._out.get(source, {}).get(target, 0)

    def successors(self, element_id: str) -> dict[str, int]:
        return dict(self._out[element_id])

    def total_weight(self) -> int:
        return sum(e.weight for e in self.edges)


# ---------------------------------------------------------------- JSON


def _require(cond: bool, message: str, where: str):
    if not cond:
        raise InputError(message, where)


def parse_json_graph(text: str) -> DependencyGraph:
    """Parse a ``depgraph/1`` JSON document.

    The ``schema`` field is optional; when present it must be ``depgraph/1``.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON: {exc.msg}", f"line {exc.lineno}, column {exc.colno}") from None

    _require(isinstance(doc, dict), "top level must be an object", "$")
    schema = doc.get("schema", JSON_SCHEMA)
    _require(schema == JSON_SCHEMA, f"unsupported schema {schema!r}, expected {JSON_SCHEMA!r}", "$.schema")
    for key in ("elements", "edges"):
        _require(isinstance(doc.get(key), list), f"'{key}' must be a list", f"$.{key}")

    elements = []
    seen: set[str] = set()
    for i, raw in enumerate(doc["elements"]):
        where = f"$.elements[{i}]"
        _require(isinstance(raw, dict), "element must be an object", where)
        eid = check_id(raw.get("id"), f"{where}.id")
        _require(eid not in seen, f"duplicate element id {eid!r}", f"{where}.id")
        seen.add(eid)
        container = raw.get("container")
        _require(
            container is None or (isinstance(container, str) and container.strip() != ""),
            "container must be a non-empty string or null",
            f"{where}.container",
        )
        methods = raw.get("methods", [])
        _require(
            isinstance(methods, list) and all(isinstance(m, str) for m in methods),
            "methods must be a list of strings",
            f"{where}.methods",
        )
        try:
            elements.append(Element(eid, container, tuple(methods)))
        except InputError as exc:
            raise InputError(str(exc), where) from None

    edges = []
    for i, raw in enumerate(doc["edges"]):
        where = f"$.edges[{i}]"
        _require(isinstance(raw, dict), "edge must be an object", where)
        ends = []
        for key in ("source", "target"):
            end = check_id(raw.get(key), f"{where}.{key}")
            _require(end in seen, f"unknown element {end!r}", f"{where}.{key}")
            ends.append(end)
        weight = raw.get("weight")
        _require(
            isinstance(weight, int) and not isinstance(weight, bool) and weight >= 1,
            f"weight must be a positive integer, got {weight!r}",
            f"{where}.weight",
        )
        edges.append(DependencyEdge(ends[0], ends[1], weight))

    return DependencyGraph(elements, edges)


def graph_to_dict(graph: DependencyGraph) -> dict:
    elements = []
    for el in graph.elements:
        item: dict = {"id": el.id}
        if el.container is not None:
            item["container"] = el.container
        if el.methods:
            item["methods"] = list(el.methods)
        elements.append(item)
    return {
        "schema": JSON_SCHEMA,
        "elements": elements,
        "edges": [{"source": e.source, "target": e.target, "weight": e.weight} for e in graph.edges],
    }


def graph_to_json(graph: DependencyGraph) -> str:
    return json.dumps(graph_to_dict(graph), indent=2, ensure_ascii=False) + "\n"


# ---------------------------------------------------------------- DOT

_DOT_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*|/\*.*?\*/)
  | (?P<hash>\#[^\n]*)
  | (?P<arrow>->)
  | (?P<undirected>--)
  | (?P<punct>[{}\[\];,=])
  | (?P<quoted>"(?:[^"\\]|\\.)*")
  | (?P<bare>[A-Za-z0-9_.\u0080-\U0010ffff]+)
    """,
    re.VERBOSE | re.DOTALL,
)
_DOT_KEYWORDS = {"strict", "graph", "digraph", "node", "edge", "subgraph"}
_DOT_PLAIN_ID = re.compile(r"[A-Za-z_][A-Za-z0-9_]*|(?:\.[0-9]+|[0-9]+(?:\.[0-9]*)?)")


@dataclass
class _Tok:
    kind: str  # "id", "kw", or the punctuation itself
    value: str
    line: int
    col: int

    @property
    def where(self) -> str:
        return f"line {self.line}, column {self.col}"


def _dot_tokens(text: str) -> list[_Tok]:
    tokens: list[_Tok] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _DOT_TOKEN.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise InputError(f"unexpected character {text[pos]!r}", f"line {line}, column {col}")
        kind = m.lastgroup
        chunk = m.group()
        if kind == "hash" and text[line_start:pos].strip():
            raise InputError("'#' is only allowed at the start of a line", f"line {line}, column {col}")
        if kind == "quoted":
            body = re.sub(r'\\(["\\])', r"\1", chunk[1:-1])
            tokens.append(_Tok("id", body, line, col))
        elif kind == "bare":
            if chunk.lower() in _DOT_KEYWORDS:
                tokens.append(_Tok("kw", chunk.lower(), line, col))
            else:
                tokens.append(_Tok("id", chunk, line, col))
        elif kind in ("arrow", "undirected", "punct"):
            tokens.append(_Tok(chunk, chunk, line, col))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rfind("\n") + 1
        pos = m.end()
    return tokens


class _DotParser:
    def __init__(self, text: str):
        self.toks = _dot_tokens(text)
        self.pos = 0
        self.elements: dict[str, dict] = {}
        self.edges: list[DependencyEdge] = []

    def peek(self) -> _Tok | None:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def next(self, *kinds: str) -> _Tok:
        tok = self.peek()
        if tok is None:
            raise InputError(f"unexpected end of input, expected {' or '.join(kinds)}", "end of input")
        if kinds and tok.kind not in kinds:
            raise InputError(f"expected {' or '.join(kinds)}, found {tok.value!r}", tok.where)
        self.pos += 1
        return tok

    def accept(self, kind: str, value: str | None = None) -> _Tok | None:
        tok = self.peek()
        if tok is not None and tok.kind == kind and (value is None or tok.value == value):
            self.pos += 1
            return tok
        return None

    def parse(self) -> DependencyGraph:
        self.accept("kw", "strict")
        head = self.next("kw")
        if head.value == "graph":
            raise InputError("undirected 'graph' is not supported, use 'digraph'", head.where)
        if head.value != "digraph":
            raise InputError(f"expected 'digraph', found {head.value!r}", head.where)
        self.accept("id")
        self.next("{")
        while not self.accept("}"):
            self.statement()
            self.accept(";")
        trailing = self.peek()
        if trailing is not None:
            raise InputError(f"unexpected {trailing.value!r} after closing brace", trailing.where)
        elements = [
            Element(eid, attrs.get("container"), attrs.get("methods", ()))
            for eid, attrs in self.elements.items()
        ]
        return DependencyGraph(elements, self.edges)

    def node(self, tok: _Tok) -> str:
        eid = check_id(tok.value, tok.where)
        self.elements.setdefault(eid, {})
        return eid

    def statement(self):
        tok = self.next("id", "kw")
        if tok.kind == "kw":
            if tok.value in ("graph", "node", "edge"):
                attrs = self.attr_lists()
                if attrs:
                    log.warning("%s: ignoring '%s' attribute statement", tok.where, tok.value)
                return
            raise InputError(f"'{tok.value}' statements are not supported", tok.where)
        if self.accept("="):
            self.next("id")
            log.warning("%s: ignoring graph attribute %r", tok.where, tok.value)
            return
        if self.accept("--"):
            raise InputError("undirected edge '--' in a digraph", tok.where)
        chain = [(tok, self.node(tok))]
        while self.accept("->"):
            t = self.next("id")
            chain.append((t, self.node(t)))
        attrs = self.attr_lists()
        if len(chain) == 1:
            self.node_attrs(chain[0][1], attrs)
        else:
            self.edge_attrs(chain, attrs)

    def attr_lists(self) -> list[tuple[_Tok, _Tok]]:
        attrs = []
        while self.accept("["):
            while not self.accept("]"):
                key = self.next("id")
                self.next("=")
                value = self.next("id")
                attrs.append((key, value))
                self.accept(",") or self.accept(";")
        return attrs

    def node_attrs(self, eid: str, attrs):
        slot = self.elements[eid]
        for key, value in attrs:
            if key.value == "container":
                slot["container"] = value.value
            elif key.value == "methods":
                slot["methods"] = tuple(m.strip() for m in value.value.split(",") if m.strip())
            else:
                log.warning("%s: ignoring unsupported node attribute %r", key.where, key.value)

    def edge_attrs(self, chain, attrs):
        weight = 1
        for key, value in attrs:
            if key.value != "weight":
                log.warning("%s: ignoring unsupported edge attribute %r", key.where, key.value)
                continue
            if not re.fullmatch(r"[0-9]+", value.value) or int(value.value) < 1:
                raise InputError(f"weight must be a positive integer, got {value.value!r}", value.where)
            weight = int(value.value)
        for (_, src), (_, dst) in itertools.pairwise(chain):
            self.edges.append(DependencyEdge(src, dst, weight))


def parse_dot_graph(text: str) -> DependencyGraph:
    """Parse the supported DOT subset.

    Accepted: ``[strict] digraph [name] { ... }`` with node statements
    (``container`` and comma-separated ``methods`` attributes), edge
    statements including chains, and ``weight`` on edges (default 1).
    Other attributes and ``graph``/``node``/``edge`` defaults are ignored
    with a warning. Bare identifiers may contain dots.
    """
    return _DotParser(text).parse()


def _dot_quote(value: str) -> str:
    if _DOT_PLAIN_ID.fullmatch(value) and value.lower() not in _DOT_KEYWORDS:
        return value
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def graph_to_dot(graph: DependencyGraph, name: str = "dependencies") -> str:
    lines = [f"digraph {_dot_quote(name)} {{"]
    for el in graph.elements:
        attrs = []
        if el.container is not None:
            attrs.append(f"container={_dot_quote(el.container)}")
        if el.methods:
            attrs.append(f"methods={_dot_quote(','.join(el.methods))}")
        suffix = f" [{', '.join(attrs)}]" if attrs else ""
        lines.append(f"  {_dot_quote(el.id)}{suffix};")
    for e in graph.edges:
        lines.append(f"  {_dot_quote(e.source)} -> {_dot_quote(e.target)} [weight={e.weight}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- CSV


def ingest_invocation_log(csv_text: str) -> DependencyGraph:
    """Build a graph from a ``caller,callee[,count]`` invocation log.

    Elements are inferred from the names that appear; blank lines are skipped.
    """
    reader = csv.reader(io.StringIO(csv_text.lstrip("\ufeff")))
    rows = ((n, row) for n, row in enumerate(reader, start=1) if any(c.strip() for c in row))
    try:
        header_line, header = next(rows)
    except StopIteration:
        raise InputError("missing header 'caller,callee[,count]'", "line 1") from None
    header = [h.strip().lower() for h in header]
    if header not in (["caller", "callee"], ["caller", "callee", "count"]):
        raise InputError(
            f"missing header 'caller,callee[,count]', found {','.join(header)!r}", f"line {header_line}"
        )

    names: dict[str, None] = {}
    edges = []
    for line, row in rows:
        where = f"line {line}"
        if len(row) > len(header):
            raise InputError(f"expected at most {len(header)} fields, found {len(row)}", where)
        row = [c.strip() for c in row] + [""] * (3 - len(row))
        caller, callee, count = row[:3]
        if not caller or not callee:
            raise InputError("empty caller or callee", where)
        check_id(caller, where)
        check_id(callee, where)
        if count == "":
            weight = 1
        elif re.fullmatch(r"[+]?[0-9]+", count):
            weight = int(count)
            if weight < 1:
                raise InputError(f"count must be positive, got {count!r}", where)
        else:
            raise InputError(f"count must be an integer, got {count!r}", where)
        names.setdefault(caller)
        names.setdefault(callee)
        edges.append(DependencyEdge(caller, callee, weight))
    return DependencyGraph((Element(n) for n in names), edges)


# ---------------------------------------------------------------- files

FORMATS = ("json", "dot", "csv")
_SUFFIXES = {".json": "json", ".dot": "dot", ".gv": "dot", ".csv": "csv"}
_PARSERS = {"json": parse_json_graph, "dot": parse_dot_graph, "csv": ingest_invocation_log}


def guess_format(path: str | Path) -> str:
    fmt = _SUFFIXES.get(Path(path).suffix.lower())
    if fmt is None:
        raise InputError(f"cannot infer input format from {str(path)!r}; pass --input-format")
    return fmt


def parse_graph(text: str, fmt: str) -> DependencyGraph:
    try:
        parser = _PARSERS[fmt]
    except KeyError:
        raise InputError(f"unknown input format {fmt!r}") from None
    return parser(text)


def load_graph(path: str | Path, fmt: str | None = None) -> DependencyGraph:
    fmt = fmt or guess_format(path)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {str(path)!r}: {exc.strerror}") from None
    try:
        return parse_graph(text, fmt)
    except InputError as exc:
        raise InputError(str(exc), str(path)) from None


# ---------------------------------------------------------------- execution orders


def _nested_call(names: tuple[str, ...]) -> str:
    return "".join(f"{n}(" for n in names) + ")" * len(names)


def iter_execution_orders(methods: list[str]) -> Iterator[str]:
    if not methods:
        raise InputError("method list is empty")
    if len(set(methods)) != len(methods):
        raise InputError("duplicate method names")
    n = len(methods)
    sequences = sorted(
        seq for k in range(1, n + 1) for seq in itertools.permutations(range(n), k)
    )
    for seq in sequences:
        yield _nested_call(tuple(methods[i] for i in seq))


def enumerate_execution_orders(methods: list[str]) -> list[str]:
    """All call sequences of distinct methods, rendered as nested calls.

    >>> enumerate_execution_orders(["m1", "m2"])
    ['m1()', 'm1(m2())', 'm2()', 'm2(m1())']
    """
    return list(iter_execution_orders(methods))
