"""Component management relation: reuse counts and node mapping per component.

The store is a single JSON file (schema ``repo/1``).  Operations are pure:
each returns a new :class:`RepositoryStore` and leaves the input untouched.
``reuse_count`` counts reuse events, not distinct reusing systems.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path
from typing import NamedTuple

from component_miner.errors import InputError, UsageError

SCHEMA_VERSION = "repo/1"


class DuplicateComponentError(UsageError):
    pass


class UnknownComponentError(UsageError):
    pass


@dataclass(frozen=True)
class ComponentRecord:
    name: str
    reuse_count: int
    node: str
    members: tuple[str, ...] = ()
    version: int = 1

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if not isinstance(self.name, str) or not self.name.strip():
            raise InputError("component name must be a non-empty string")
        if not isinstance(self.node, str):
            raise InputError(f"node of {self.name!r} must be a string")
        if not all(isinstance(m, str) and m for m in self.members):
            raise InputError(f"members of {self.name!r} must be non-empty strings")
        for field_name, floor in (("reuse_count", 0), ("version", 1)):
            value = getattr(self, field_name)
            if isinstance(value, bool) or not isinstance(value, int) or value < floor:
                raise InputError(f"{field_name} of {self.name!r} must be an integer >= {floor}")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "reuse_count": self.reuse_count,
            "node": self.node,
            "members": list(self.members),
            "version": self.version,
        }


class ReuseRow(NamedTuple):
    name: str
    reuse_count: int
    node: str
    unused: bool


@dataclass(frozen=True)
class RepositoryStore:
    records: tuple[ComponentRecord, ...] = ()
    schema_version: str = SCHEMA_VERSION

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        names = [r.name for r in self.records]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise InputError(f"duplicate component names in repository: {dupes}")

    def __len__(self) -> int:
        return len(self.records)

    def __contains__(self, name: str) -> bool:
        return any(r.name == name for r in self.records)

    def get(self, name: str) -> ComponentRecord:
        for r in self.records:
            if r.name == name:
                return r
        raise UnknownComponentError(f"no component named {name!r} in the repository")

    def _swap(self, record: ComponentRecord) -> RepositoryStore:
        records = tuple(record if r.name == record.name else r for r in self.records)
        return replace(self, records=records)

    def to_dict(self) -> dict:
        return {"schema_version": self.schema_version, "records": [r.to_dict() for r in self.records]}

    @classmethod
    def from_dict(cls, doc: object) -> RepositoryStore:
        if not isinstance(doc, dict):
            raise InputError("repository document must be an object", "$")
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise InputError(
                f"unsupported schema_version {doc.get('schema_version')!r}, expected {SCHEMA_VERSION!r}",
                "$.schema_version",
            )
        raw = doc.get("records")
        if not isinstance(raw, list):
            raise InputError("'records' must be a list", "$.records")
        records = []
        for i, item in enumerate(raw):
            where = f"$.records[{i}]"
            if not isinstance(item, dict):
                raise InputError("record must be an object", where)
            missing = {"name", "reuse_count", "node"} - item.keys()
            if missing:
                raise InputError(f"record is missing {sorted(missing)}", where)
            members = item.get("members", [])
            if not isinstance(members, list):
                raise InputError("'members' must be a list", where)
            try:
                records.append(
                    ComponentRecord(
                        item["name"], item["reuse_count"], item["node"], tuple(members), item.get("version", 1)
                    )
                )
            except InputError as exc:
                raise InputError(str(exc), where) from None
        return cls(tuple(records))


def register(store: RepositoryStore, name: str, node: str, members=()) -> RepositoryStore:
    if name in store:
        raise DuplicateComponentError(f"component {name!r} is already registered")
    return replace(store, records=store.records + (ComponentRecord(name, 0, node, tuple(members), 1),))


def record_reuse(store: RepositoryStore, name: str) -> RepositoryStore:
    rec = store.get(name)
    return store._swap(replace(rec, reuse_count=rec.reuse_count + 1))


def update_members(store: RepositoryStore, name: str, members, node: str | None = None) -> RepositoryStore:
    """Replace a record's content; bumps ``version`` only if something changed."""
    rec = store.get(name)
    members = tuple(members)
    node = rec.node if node is None else node
    if members == rec.members and node == rec.node:
        return store
    return store._swap(replace(rec, members=members, node=node, version=rec.version + 1))


def reuse_report(store: RepositoryStore) -> list[ReuseRow]:
    """Most reused first, ties by name; zero-count records are flagged unused."""
    rows = sorted(store.records, key=lambda r: (-r.reuse_count, r.name))
    return [ReuseRow(r.name, r.reuse_count, r.node, r.reuse_count == 0) for r in rows]


def save(store: RepositoryStore, path: str | Path) -> None:
    path = Path(path)
    text = json.dumps(store.to_dict(), indent=2, ensure_ascii=False) + "\n"
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load(path: str | Path) -> RepositoryStore:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read repository: {exc.strerror}", str(path)) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON: {exc.msg}", f"{path}: line {exc.lineno}, column {exc.colno}") from None
    try:
        return RepositoryStore.from_dict(doc)
    except InputError as exc:
        raise InputError(str(exc), str(path)) from None
