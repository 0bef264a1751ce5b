"""``component-miner`` command line interface.

Exit codes: 0 success, 1 usage error, 2 input/parse error, 3 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from component_miner import __version__
from component_miner import repository as repo_ops
from component_miner.clusterer import ComponentSet, cluster, map_to_components, sweep
from component_miner.ds import DEFAULT_STRATEGY, DSMatrix, DSStrategy, compute_ds
from component_miner.errors import InputError, InvariantError, UsageError
from component_miner.graph import FORMATS, DependencyGraph, graph_to_dict, graph_to_json, load_graph
from component_miner.metrics import (
    CbomMode,
    Rule,
    apply_split,
    cbom,
    cbom_report,
    cohesion,
    select,
    split_component,
)

log = logging.getLogger("component_miner")

REPO_ENV = "COMPONENT_MINER_REPO"
EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3

STRATEGY_HELP = (
    "how dependency strength between two elements is computed. There is no single "
    "canonical definition: raw_out uses the directed invocation weight, symmetric_sum adds "
    "both directions, normalized_symmetric (default) scales symmetric_sum into [0,1], "
    "jaccard compares neighbour sets"
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    input: Path | None = None
    input_format: str | None = None
    strategy: DSStrategy = DEFAULT_STRATEGY
    f_min: float | None = None
    sweep: bool = False
    cbom_mode: CbomMode = CbomMode.WEIGHTED
    rule: Rule = Rule.MAX
    p: int | None = None
    repo: Path | None = None
    output_format: str = "text"
    emit_matrix: Path | None = None
    split: bool = False
    no_header: bool = False

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> RunConfig:
        get = lambda name, default=None: getattr(args, name, default)  # noqa: E731
        return cls(
            input=Path(args.input) if get("input") else None,
            input_format=get("input_format"),
            strategy=DSStrategy(get("strategy", DEFAULT_STRATEGY)),
            f_min=get("f_min"),
            sweep=bool(get("sweep", False)),
            cbom_mode=CbomMode(get("cbom_mode", CbomMode.WEIGHTED)),
            rule=Rule(get("rule", Rule.MAX)),
            p=get("p"),
            repo=Path(args.repo) if get("repo") else None,
            output_format=get("format", "text"),
            emit_matrix=Path(args.emit_matrix) if get("emit_matrix") else None,
            split=bool(get("split", False)),
            no_header=bool(get("no_header", False)),
        )

    def check_threshold_choice(self, allow_sweep: bool = True) -> None:
        if self.sweep and not allow_sweep:
            raise UsageError("--sweep is not available for this command")
        if (self.f_min is None) == (not self.sweep):
            raise UsageError("give exactly one of --f-min or --sweep")
        if self.f_min is not None and not self.f_min >= 0:
            raise UsageError(f"--f-min must be non-negative, got {self.f_min}")

    def check_rule(self) -> None:
        if self.rule is Rule.THRESHOLD and self.p is None:
            raise UsageError("--rule threshold requires --p")
        if self.rule is Rule.MAX and self.p is not None:
            raise UsageError("--p is only allowed with --rule threshold")
        if self.p is not None and self.p < 0:
            raise UsageError("--p must be non-negative")


# ---------------------------------------------------------------- rendering


def _table(headers: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    cells = [[str(h) for h in headers]] + [[_fmt(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths).rstrip())
    return "\n".join(lines)


def _fmt(value: object) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, (list, tuple)):
        return ", ".join(str(v) for v in value)
    return str(value)


def _emit(doc: dict, text: str, cfg: RunConfig, command: str) -> None:
    if cfg.output_format == "json":
        sys.stdout.write(json.dumps(doc, indent=2, ensure_ascii=False) + "\n")
        return
    if not cfg.no_header:
        source = f" | input: {cfg.input}" if cfg.input else ""
        sys.stdout.write(f"# component-miner {__version__} | {command}{source}\n")
    sys.stdout.write(text.rstrip("\n") + "\n")


def _clusters_text(f_min: float, clusters) -> str:
    rows = [(k, len(c), list(c)) for k, c in enumerate(clusters, start=1)]
    return f"f_min = {_fmt(f_min)}  ({len(clusters)} clusters)\n" + _table(["#", "size", "members"], rows)


def _cbom_text(report: dict) -> str:
    rows = [(e["name"], e["cbom"]) for e in report["cbom"]]
    rule = report["rule"] + (f" (P = {report['p']})" if report["p"] is not None else "")
    chosen = ", ".join(report["reconfigurable"]) or "(none)"
    head = f"CBOM ({report['mode']})"
    return f"{head}\n{_table(['Component', 'CBOM'], rows)}\nrule: {rule}\nreconfigurable: {chosen}"


def _split_text(split: dict) -> str:
    rows = [
        (p["name"], len(p["members"]), p["cohesion"], p["cbom"], list(p["members"])) for p in split["parts"]
    ]
    orig = split["original"]
    return (
        f"split {orig['name']} ({split['method']}, cut weight {split['cut_weight']}, "
        f"cohesion before {_fmt(orig['cohesion'])})\n"
        + _table(["Part", "size", "cohesion", "CBOM", "members"], rows)
    )


# ---------------------------------------------------------------- pipeline pieces


def _graph(cfg: RunConfig, allow_empty: bool = False) -> DependencyGraph:
    if cfg.input is None:
        raise UsageError("--input is required")
    graph = load_graph(cfg.input, cfg.input_format)
    if not allow_empty and len(graph) == 0:
        raise InputError("empty graph")
    return graph


def _matrix(graph: DependencyGraph, cfg: RunConfig) -> DSMatrix:
    matrix = compute_ds(graph, cfg.strategy)
    if cfg.emit_matrix is not None:
        try:
            matrix.write_csv(cfg.emit_matrix)
        except OSError as exc:
            raise InputError(f"cannot write matrix: {exc.strerror}", str(cfg.emit_matrix)) from None
    return matrix


def _read_json(path: Path, what: str):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read {what}: {exc.strerror}", str(path)) from None
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON: {exc.msg}", f"{path}: line {exc.lineno}, column {exc.colno}") from None


def _write_json(path: Path, doc: dict) -> None:
    try:
        Path(path).write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot write output: {exc.strerror}", str(path)) from None


def _component_set(graph: DependencyGraph, cfg: RunConfig, components_path: str | None) -> ComponentSet:
    if components_path:
        if cfg.f_min is not None:
            raise UsageError("give either --components or --f-min, not both")
        comps = ComponentSet.from_dict(_read_json(Path(components_path), "components"))
        comps.check_covers(graph)
        return comps
    if cfg.f_min is None:
        raise UsageError("give --components FILE or --f-min to derive components")
    return map_to_components(cluster(_matrix(graph, cfg), cfg.f_min), graph)


def _describe_components(comps: ComponentSet, graph: DependencyGraph, cbom_doc: dict | None = None) -> list:
    values = {e["name"]: e["cbom"] for e in cbom_doc["cbom"]} if cbom_doc else {}
    out = []
    for c in comps:
        item = {"name": c.name, "members": list(c.members), "cohesion": cohesion(c, graph)}
        if c.name in values:
            item["cbom"] = values[c.name]
        out.append(item)
    return out


def _split_doc(name: str, comps: ComponentSet, graph: DependencyGraph, cfg: RunConfig):
    result = split_component(comps.get(name), graph)
    after = apply_split(comps, result)
    doc = {
        "original": {
            "name": name,
            "members": list(result.original.members),
            "cohesion": cohesion(result.original, graph),
            "cbom": cbom(name, comps, graph, cfg.cbom_mode),
        },
        "parts": [
            {"name": p.name, "members": list(p.members), "cohesion": cohesion(p, graph),
             "cbom": cbom(p, after, graph, cfg.cbom_mode)}
            for p in result.parts
        ],
        "cut_weight": result.cut_weight,
        "method": result.method,
    }
    return doc, result


def _analysis_section(graph, f_min, clustering, cfg):
    comps = map_to_components(clustering, graph)
    report = cbom_report(comps, graph, cfg.cbom_mode, cfg.rule, cfg.p).to_dict()
    return comps, {
        "f_min": f_min,
        "clusters": [list(c) for c in clustering.clusters],
        "components": _describe_components(comps, graph, report),
        "cbom": report,
    }


def _section_text(section: dict) -> str:
    parts = [_clusters_text(section["f_min"], section["clusters"])]
    comp_rows = [
        (c["name"], len(c["members"]), c.get("cbom", ""), c["cohesion"]) for c in section["components"]
    ]
    parts.append(_table(["Component", "size", "CBOM", "cohesion"], comp_rows))
    parts.append(_cbom_text(section["cbom"]))
    for split in section.get("splits", []):
        parts.append(_split_text(split))
    return "\n\n".join(parts)


def _sync_repo(path: Path, comps: ComponentSet) -> dict:
    store = repo_ops.load(path) if path.exists() else repo_ops.RepositoryStore()
    registered, updated = [], []
    for k, comp in enumerate(comps, start=1):
        if comp.name in store:
            new = repo_ops.update_members(store, comp.name, comp.members)
            if new is not store:
                updated.append(comp.name)
            store = new
        else:
            store = repo_ops.register(store, comp.name, f"N{k}", comp.members)
            registered.append(comp.name)
    repo_ops.save(store, path)
    return {"path": str(path), "registered": registered, "updated": updated}


# ---------------------------------------------------------------- commands


def cmd_ingest(args, cfg: RunConfig) -> int:
    graph = _graph(cfg, allow_empty=True)
    if args.output:
        try:
            Path(args.output).write_text(graph_to_json(graph), encoding="utf-8")
        except OSError as exc:
            raise InputError(f"cannot write output: {exc.strerror}", args.output) from None
    doc = graph_to_dict(graph)
    rows = [(e.source, e.target, e.weight) for e in graph.edges]
    text = (
        f"{len(graph)} elements, {len(graph.edges)} edges, total weight {graph.total_weight()}\n"
        + _table(["source", "target", "weight"], rows)
    )
    _emit(doc, text, cfg, "ingest")
    return EXIT_OK


def cmd_cluster(args, cfg: RunConfig) -> int:
    cfg.check_threshold_choice()
    graph = _graph(cfg)
    matrix = _matrix(graph, cfg)
    if cfg.sweep:
        chain = sweep(matrix)
        doc = {
            "strategy": cfg.strategy.value,
            "sweep": [{"f_min": f, "clusters": [list(c) for c in cl.clusters]} for f, cl in chain],
        }
        text = "\n\n".join(_clusters_text(f, cl.clusters) for f, cl in chain)
    else:
        result = cluster(matrix, cfg.f_min)
        doc = result.to_dict()
        text = _clusters_text(result.f_min, result.clusters)
    _emit(doc, f"strategy: {cfg.strategy.value}\n{text}", cfg, "cluster")
    return EXIT_OK


def cmd_components(args, cfg: RunConfig) -> int:
    cfg.check_threshold_choice(allow_sweep=False)
    graph = _graph(cfg)
    comps = map_to_components(cluster(_matrix(graph, cfg), cfg.f_min), graph)
    doc = comps.to_dict()
    if args.output:
        _write_json(Path(args.output), doc)
    rows = [(c.name, len(c), list(c.members)) for c in comps]
    _emit(doc, _table(["Component", "size", "members"], rows), cfg, "components")
    return EXIT_OK


def cmd_cbom(args, cfg: RunConfig) -> int:
    cfg.check_rule()
    graph = _graph(cfg)
    comps = _component_set(graph, cfg, args.components)
    doc = cbom_report(comps, graph, cfg.cbom_mode, cfg.rule, cfg.p).to_dict()
    _emit(doc, _cbom_text(doc), cfg, "cbom")
    return EXIT_OK


def _cbom_table(path: Path) -> list[tuple[str, int]]:
    raw = _read_json(path, "CBOM table")
    if isinstance(raw, dict) and "cbom" in raw and isinstance(raw["cbom"], list):
        raw = raw["cbom"]
    if isinstance(raw, dict):
        items = list(raw.items())
    elif isinstance(raw, list) and all(isinstance(x, dict) and "name" in x and "cbom" in x for x in raw):
        items = [(x["name"], x["cbom"]) for x in raw]
    else:
        raise InputError("CBOM table must map names to integers", str(path))
    for name, value in items:
        if not isinstance(name, str) or isinstance(value, bool) or not isinstance(value, int) or value < 0:
            raise InputError(f"bad CBOM entry {name!r}: {value!r}", str(path))
    return items


def cmd_reconfigure(args, cfg: RunConfig) -> int:
    cfg.check_rule()
    if args.cbom_table:
        if cfg.input or args.apply:
            raise UsageError("--cbom-table selects only; it cannot be combined with --input or --apply")
        items = _cbom_table(Path(args.cbom_table))
        chosen = select(items, cfg.rule, cfg.p)
        doc = {
            "mode": "table",
            "rule": cfg.rule.value,
            "p": cfg.p,
            "cbom": [{"name": n, "cbom": v} for n, v in items],
            "reconfigurable": list(chosen),
        }
        _emit(doc, _cbom_text(doc), cfg, "reconfigure")
        return EXIT_OK

    graph = _graph(cfg)
    comps = _component_set(graph, cfg, args.components)
    report = cbom_report(comps, graph, cfg.cbom_mode, cfg.rule, cfg.p)
    doc = report.to_dict()
    splits = []
    rewritten = comps
    for name in report.reconfigurable:
        if len(comps.get(name)) < 2:
            log.warning("component %s has a single member and cannot be split", name)
            continue
        split_doc, result = _split_doc(name, comps, graph, cfg)
        splits.append(split_doc)
        rewritten = apply_split(rewritten, result)
    doc["splits"] = splits
    if args.apply:
        doc["components"] = rewritten.to_dict()
        target = args.output or args.components
        if target:
            _write_json(Path(target), rewritten.to_dict())
    text = "\n\n".join([_cbom_text(doc)] + [_split_text(s) for s in splits])
    _emit(doc, text, cfg, "reconfigure")
    return EXIT_OK


def cmd_analyze(args, cfg: RunConfig) -> int:
    cfg.check_threshold_choice()
    cfg.check_rule()
    graph = _graph(cfg)
    matrix = _matrix(graph, cfg)
    doc: dict = {
        "strategy": cfg.strategy.value,
        "cbom_mode": cfg.cbom_mode.value,
        "graph": {"elements": len(graph), "edges": len(graph.edges), "total_weight": graph.total_weight()},
    }
    if cfg.sweep:
        if cfg.split or cfg.repo:
            raise UsageError("--split and --repo need a single --f-min")
        sections = []
        for f_min, clustering in sweep(matrix):
            _, section = _analysis_section(graph, f_min, clustering, cfg)
            sections.append(section)
        doc["sweep"] = sections
        text = "\n\n".join(_section_text(s) for s in sections)
    else:
        comps, section = _analysis_section(graph, cfg.f_min, cluster(matrix, cfg.f_min), cfg)
        if cfg.split:
            section["splits"] = [
                _split_doc(name, comps, graph, cfg)[0]
                for name in section["cbom"]["reconfigurable"]
                if len(comps.get(name)) >= 2
            ]
        doc.update(section)
        if cfg.repo:
            doc["repository"] = _sync_repo(cfg.repo, comps)
        text = _section_text(section)
    _emit(doc, f"strategy: {cfg.strategy.value}\n\n{text}", cfg, "analyze")
    return EXIT_OK


def _repo_path(args) -> Path:
    path = args.repo or os.environ.get(REPO_ENV)
    if not path:
        raise UsageError(f"no repository: pass --repo or set {REPO_ENV}")
    return Path(path)


def cmd_repo(args, cfg: RunConfig) -> int:
    path = _repo_path(args)
    action = args.repo_command
    if action == "add":
        store = repo_ops.load(path) if path.exists() else repo_ops.RepositoryStore()
        members = [m.strip() for m in args.members.split(",") if m.strip()] if args.members else []
        store = repo_ops.register(store, args.name, args.node, members)
        repo_ops.save(store, path)
        rec = store.get(args.name)
        _emit(rec.to_dict(), f"registered {rec.name} (node {rec.node}, version {rec.version})", cfg, "repo add")
        return EXIT_OK

    store = repo_ops.load(path)
    if action == "touch":
        if args.times < 1:
            raise UsageError("--times must be at least 1")
        for _ in range(args.times):
            store = repo_ops.record_reuse(store, args.name)
        repo_ops.save(store, path)
        rec = store.get(args.name)
        _emit(rec.to_dict(), f"{rec.name}: count of reuse {rec.reuse_count}", cfg, "repo touch")
    elif action == "list":
        rows = repo_ops.reuse_report(store)
        doc = {
            "schema_version": store.schema_version,
            "components": [
                {"name": r.name, "reuse_count": r.reuse_count, "node": r.node, "unused": r.unused} for r in rows
            ],
        }
        table = _table(
            ["Component", "Count of Reuse", "Node", ""],
            [(r.name, r.reuse_count, r.node, "unused" if r.unused else "") for r in rows],
        )
        _emit(doc, table, cfg, "repo list")
    else:
        rec = store.get(args.name)
        text = "\n".join(f"{k}: {_fmt(v)}" for k, v in rec.to_dict().items())
        _emit(rec.to_dict(), text, cfg, "repo show")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    out = argparse.ArgumentParser(add_help=False)
    out.add_argument("--format", choices=["json", "text"], default="text", help="report format")
    out.add_argument("--no-header", action="store_true", help="omit the header line in text reports")

    src = argparse.ArgumentParser(add_help=False)
    src.add_argument("--input", help="dependency data file")
    src.add_argument("--input-format", choices=FORMATS, help="input format (default: from the file extension)")

    ds = argparse.ArgumentParser(add_help=False)
    ds.add_argument("--strategy", choices=[s.value for s in DSStrategy], default=DEFAULT_STRATEGY.value,
                    help=STRATEGY_HELP)
    ds.add_argument("--emit-matrix", metavar="PATH", help="write the DS matrix as CSV")

    threshold = argparse.ArgumentParser(add_help=False)
    threshold.add_argument("--f-min", type=float, help="minimum dependency strength for merging two elements")
    threshold.add_argument("--sweep", action="store_true", help="cluster at every distinct DS value")

    coupling = argparse.ArgumentParser(add_help=False)
    coupling.add_argument("--cbom-mode", choices=[m.value for m in CbomMode], default="weighted")
    coupling.add_argument("--rule", choices=[r.value for r in Rule], default="max",
                          help="max: the single most coupled component; threshold: every CBOM > P")
    coupling.add_argument("--p", type=int, help="CBOM threshold for --rule threshold (no default)")

    parser = _Parser(prog="component-miner", description="Identify reusable components by dependency-strength "
                     "clustering and flag over-coupled ones by CBOM.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", parents=[src, out], help="parse and normalise dependency data")
    p.add_argument("--output", help="write the canonical JSON graph here")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("cluster", parents=[src, ds, threshold, out], help="threshold clustering")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("components", parents=[src, ds, threshold, out], help="map clusters to components")
    p.add_argument("--output", help="write the component set JSON here")
    p.set_defaults(func=cmd_components)

    p = sub.add_parser("cbom", parents=[src, ds, threshold, coupling, out], help="CBOM per component")
    p.add_argument("--components", help="component set JSON (from 'components --output')")
    p.set_defaults(func=cmd_cbom)

    p = sub.add_parser("reconfigure", parents=[src, ds, threshold, coupling, out],
                       help="select over-coupled components and split them in two")
    p.add_argument("--components", help="component set JSON (from 'components --output')")
    p.add_argument("--cbom-table", help="JSON mapping component names to CBOM values; selection only")
    p.add_argument("--apply", action="store_true", help="rewrite the component set with the split parts")
    p.add_argument("--output", help="where --apply writes the new component set (default: --components)")
    p.set_defaults(func=cmd_reconfigure)

    p = sub.add_parser("analyze", parents=[src, ds, threshold, coupling, out], help="run the whole pipeline")
    p.add_argument("--split", action="store_true", help="split every reconfigurable component")
    p.add_argument("--repo", help="register/update the resulting components in this repository file")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("repo", help="component management relation")
    repo_sub = p.add_subparsers(dest="repo_command", required=True, parser_class=_Parser)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--repo", help=f"repository file (default: ${REPO_ENV})")
    q = repo_sub.add_parser("add", parents=[common, out], help="register a component")
    q.add_argument("name")
    q.add_argument("--node", required=True, help="node label the component maps to")
    q.add_argument("--members", help="comma-separated member element ids")
    q = repo_sub.add_parser("touch", parents=[common, out], help="record a reuse")
    q.add_argument("name")
    q.add_argument("--times", type=int, default=1)
    repo_sub.add_parser("list", parents=[common, out], help="reuse report, most used first")
    q = repo_sub.add_parser("show", parents=[common, out], help="show one record")
    q.add_argument("name")
    p.set_defaults(func=cmd_repo)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="warning: %(message)s", stream=sys.stderr)
    args = build_parser().parse_args(argv)
    cfg = RunConfig.from_args(args)
    try:
        return args.func(args, cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InvariantError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
