"""Shared domain types and the tabular/document loaders."""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Union

import yaml

from .errors import (
    ConfigBindingMissing,
    DocumentSyntaxError,
    DuplicateKey,
    FileMissing,
    ParseError,
    ReferenceMissing,
    SiblingFileMissing,
)

CellValue = Union[None, int, float, bool, str]

_INT_RE = re.compile(r"[+-]?\d+")
_REAL_RE = re.compile(r"[+-]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?")
_NONFINITE_RE = re.compile(r"[+-]?(?:nan|inf|infinity)", re.IGNORECASE)
_BOOL_LITERALS = {"true": True, "false": False}

TABULAR_SUFFIXES = {".csv", ".tsv", ".txt"}
DOCUMENT_SUFFIXES = {".yml", ".yaml", ".json"}


class _Missing:
    """Sentinel for absent lookups; never equal to a real value."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "MISSING"

    def __bool__(self):
        return False


MISSING = _Missing()


# ---------------------------------------------------------------------------
# cells


def cell_type(value: CellValue) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, int):
        return "integer"
    if isinstance(value, float):
        return "real"
    return "text"


def is_numeric(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def parse_cell(token: str, coerce: bool = True) -> CellValue:
    """Type one raw field. Raises ValueError for non-finite literals."""
    stripped = token.strip()
    if stripped == "":
        return None
    if not coerce:
        return token
    if _NONFINITE_RE.fullmatch(stripped):
        raise ValueError(f"non-finite literal {stripped!r}")
    if _INT_RE.fullmatch(stripped):
        return int(stripped)
    if _REAL_RE.fullmatch(stripped):
        value = float(stripped)
        if not math.isfinite(value):
            raise ValueError(f"real literal out of range {stripped!r}")
        return value
    lowered = stripped.lower()
    if lowered in _BOOL_LITERALS:
        return _BOOL_LITERALS[lowered]
    return token


def render_cell(value: CellValue) -> str:
    if value is None:
        return ""
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def cell_key(value: Any) -> str | None:
    """Canonical comparison key: 1 and 1.0 agree, text is trimmed."""
    if value is None:
        return None
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if value.is_integer():
            return str(int(value))
        return repr(value)
    return str(value).strip()


# ---------------------------------------------------------------------------
# tabular data


@dataclass(frozen=True)
class LoadOptions:
    delimiter: str = ","
    header_row: bool = True
    type_coercion: bool = True


def normalize_header(name: str) -> str:
    name = name.strip()
    if name.startswith("#"):
        name = name[1:].strip()
    if len(name) >= 2 and name[0] == name[-1] and name[0] in "\"'":
        name = name[1:-1].strip()
    return name


@dataclass(frozen=True)
class TabularDataset:
    source_path: str
    column_names: tuple[str, ...]
    rows: tuple[tuple[CellValue, ...], ...]

    def __post_init__(self):
        width = len(self.column_names)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise ValueError(f"row {i} has {len(row)} cells, expected {width}")
        if len(set(self.column_names)) != width:
            raise ValueError("column names are not unique")

    @property
    def row_count(self) -> int:
        return len(self.rows)

    @property
    def column_count(self) -> int:
        return len(self.column_names)

    def has_column(self, name: str) -> bool:
        return name in self.column_names

    def column_index(self, name: str) -> int:
        return self.column_names.index(name)

    def column(self, name: str) -> list[CellValue]:
        idx = self.column_index(name)
        return [row[idx] for row in self.rows]

    def cell(self, row: int, column: str) -> CellValue:
        return self.rows[row][self.column_index(column)]


def parse_tabular_text(text: str, source_path: str = "<text>", options: LoadOptions | None = None) -> TabularDataset:
    options = options or LoadOptions()
    reader = csv.reader(io.StringIO(text, newline=""), delimiter=options.delimiter)
    header: list[str] | None = None
    width: int | None = None
    rows: list[tuple[CellValue, ...]] = []
    try:
        for record in reader:
            line = reader.line_num
            if not record:
                continue
            if header is None and options.header_row:
                header = [normalize_header(h) for h in record]
                width = len(header)
                if len(set(header)) != width:
                    dupes = sorted({h for h in header if header.count(h) > 1})
                    raise ParseError(line, f"duplicate column names {dupes}", source_path)
                continue
            if width is None:
                width = len(record)
                header = [f"col{i}" for i in range(width)]
            if len(record) != width:
                raise ParseError(line, f"expected {width} fields, found {len(record)}", source_path)
            try:
                rows.append(tuple(parse_cell(tok, options.type_coercion) for tok in record))
            except ValueError as exc:
                raise ParseError(line, str(exc), source_path) from None
    except csv.Error as exc:
        raise ParseError(reader.line_num, str(exc), source_path) from None
    if header is None:
        header = []
    return TabularDataset(source_path, tuple(header), tuple(rows))


def _decode(data: bytes, path: str) -> str:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        line = data[: exc.start].count(b"\n") + 1
        raise ParseError(line, "invalid UTF-8 byte sequence", path) from None
    return text.removeprefix("﻿")


def load_tabular(path, options: LoadOptions | None = None) -> TabularDataset:
    path = Path(path)
    if options is None:
        options = LoadOptions(delimiter="\t" if path.suffix.lower() == ".tsv" else ",")
    try:
        data = path.read_bytes()
    except FileNotFoundError:
        raise FileMissing(path) from None
    return parse_tabular_text(_decode(data, str(path)), str(path), options)


def dump_tabular(ds: TabularDataset, options: LoadOptions | None = None) -> str:
    options = options or LoadOptions()
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter=options.delimiter, lineterminator="\n")
    if options.header_row:
        writer.writerow(ds.column_names)
    for row in ds.rows:
        writer.writerow([render_cell(v) for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# hierarchical documents


def escape_segment(segment: str) -> str:
    return segment.replace("~", "~0").replace("/", "~1")


def unescape_segment(segment: str) -> str:
    return segment.replace("~1", "/").replace("~0", "~")


def join_path(parts) -> str:
    return "/".join(escape_segment(str(p)) for p in parts)


def split_path(path: str) -> list[str]:
    if path == "":
        return []
    return [unescape_segment(p) for p in path.split("/")]


def validate_path(path: str) -> None:
    if not isinstance(path, str) or path == "":
        raise ValueError("document path must be a non-empty string")
    if any(seg == "" for seg in path.split("/")):
        raise ValueError(f"document path {path!r} has an empty segment")


def resolve_path(root: Any, path: str):
    node = root
    for seg in split_path(path):
        if isinstance(node, dict):
            if seg not in node:
                return MISSING
            node = node[seg]
        elif isinstance(node, list):
            if not seg.isdigit() or int(seg) >= len(node):
                return MISSING
            node = node[int(seg)]
        else:
            return MISSING
    return node


class StrictLoader(yaml.SafeLoader):
    """Safe loader that rejects duplicate keys and keeps dates and yes/no/on/off as text."""


_BOOL_TAG = "tag:yaml.org,2002:bool"
StrictLoader.yaml_implicit_resolvers = {
    ch: [(tag, rx) for tag, rx in resolvers if tag not in ("tag:yaml.org,2002:timestamp", _BOOL_TAG)]
    for ch, resolvers in yaml.SafeLoader.yaml_implicit_resolvers.items()
}
# Only true/false are booleans; yes/no/on/off stay text (a key named `on` is common).
StrictLoader.add_implicit_resolver(
    _BOOL_TAG, re.compile(r"^(?:true|True|TRUE|false|False|FALSE)$"), list("tTfF")
)


def _construct_mapping(loader, node, deep=False):
    loader.flatten_mapping(node)
    trail = loader.__dict__.setdefault("_sg_trail", [])
    result: dict = {}
    for key_node, value_node in node.value:
        key = loader.construct_object(key_node, deep=True)
        if not isinstance(key, str):
            key = render_cell(key) if key is None or isinstance(key, (int, float, bool)) else str(key)
        if key in result:
            raise DuplicateKey(join_path([*trail, key]), key_node.start_mark.line + 1)
        trail.append(key)
        try:
            result[key] = loader.construct_object(value_node, deep=True)
        finally:
            trail.pop()
    return result


def _construct_sequence(loader, node, deep=False):
    trail = loader.__dict__.setdefault("_sg_trail", [])
    items = []
    for i, child in enumerate(node.value):
        trail.append(str(i))
        try:
            items.append(loader.construct_object(child, deep=True))
        finally:
            trail.pop()
    return items


def _construct_float(loader, node):
    value = yaml.SafeLoader.construct_yaml_float(loader, node)
    if not math.isfinite(value):
        mark = node.start_mark
        raise DocumentSyntaxError(mark.line + 1, mark.column + 1, f"non-finite number {node.value!r}")
    return value


StrictLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)
StrictLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_SEQUENCE_TAG, _construct_sequence)
StrictLoader.add_constructor("tag:yaml.org,2002:float", _construct_float)


@dataclass(frozen=True)
class DocumentTree:
    source_path: str
    root: Any


def parse_document_text(text: str, source_path: str = "<text>") -> DocumentTree:
    try:
        root = yaml.load(text, Loader=StrictLoader)  # noqa: S506 - strict safe loader
    except DuplicateKey as exc:
        raise DuplicateKey(exc.path, exc.line, source_path) from None
    except DocumentSyntaxError as exc:
        raise DocumentSyntaxError(exc.line, exc.col, exc.reason, source_path) from None
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark else 0
        col = mark.column + 1 if mark else 0
        reason = exc.problem or exc.context or "syntax error"
        raise DocumentSyntaxError(line, col, reason, source_path) from None
    except yaml.YAMLError as exc:
        raise DocumentSyntaxError(0, 0, str(exc), source_path) from None
    return DocumentTree(source_path, root)


def load_document(path) -> DocumentTree:
    path = Path(path)
    try:
        data = path.read_bytes()
    except FileNotFoundError:
        raise FileMissing(path) from None
    try:
        text = data.decode("utf-8").removeprefix("﻿")
    except UnicodeDecodeError as exc:
        line = data[: exc.start].count(b"\n") + 1
        raise DocumentSyntaxError(line, 0, "invalid UTF-8 byte sequence", str(path)) from None
    return parse_document_text(text, str(path))


def load_artifact(path, options: LoadOptions | None = None):
    suffix = Path(path).suffix.lower()
    if suffix in DOCUMENT_SUFFIXES:
        return load_document(path)
    return load_tabular(path, options)


# ---------------------------------------------------------------------------
# evaluation context


@dataclass(frozen=True)
class ReferenceTable:
    name: str
    entries: Any  # frozenset[str] or Mapping[str, CellValue]

    def __post_init__(self):
        if self.entries is None:
            raise ValueError(f"reference table {self.name!r} has no entries")

    @property
    def is_map(self) -> bool:
        return isinstance(self.entries, Mapping)

    def values(self) -> frozenset[str]:
        if self.is_map:
            return frozenset(cell_key(k) for k in self.entries)
        return frozenset(cell_key(v) for v in self.entries)

    def get(self, key):
        if not self.is_map:
            raise ReferenceMissing(self.name, key)
        k = cell_key(key)
        for candidate, value in self.entries.items():
            if cell_key(candidate) == k:
                return value
        raise ReferenceMissing(self.name, key)


@dataclass(frozen=True)
class ConfigRef:
    """A parameter value read from the configuration via a named binding."""

    name: str


@dataclass(frozen=True)
class ReferenceRef:
    """A parameter value read from an external reference table."""

    name: str
    key: str | None = None


@dataclass(frozen=True)
class EvaluationContext:
    config: DocumentTree | None = None
    references: Mapping[str, ReferenceTable] = field(default_factory=dict)
    sibling_files: Mapping[str, Any] = field(default_factory=dict)
    bindings: Mapping[str, str] = field(default_factory=dict)

    def lookup_config(self, path: str):
        if self.config is None:
            return MISSING
        return resolve_path(self.config.root, path)

    def resolve_binding(self, name: str):
        if name not in self.bindings:
            raise ConfigBindingMissing(name)
        path = self.bindings[name]
        value = self.lookup_config(path)
        if value is MISSING:
            raise ConfigBindingMissing(name, path)
        return value

    def reference(self, name: str) -> ReferenceTable:
        if name not in self.references:
            raise ReferenceMissing(name)
        return self.references[name]

    def sibling(self, name: str):
        if name not in self.sibling_files:
            raise SiblingFileMissing(name)
        return self.sibling_files[name]

    def resolve(self, value):
        if isinstance(value, ConfigRef):
            return self.resolve_binding(value.name)
        if isinstance(value, ReferenceRef):
            table = self.reference(value.name)
            if value.key is None:
                return table.values()
            return table.get(value.key)
        return value


def is_ref(value) -> bool:
    return isinstance(value, (ConfigRef, ReferenceRef))


# ---------------------------------------------------------------------------
# constraints, violations, reports

ERROR = "error"
WARNING = "warning"
SEVERITIES = (ERROR, WARNING)


@dataclass(frozen=True)
class ConstraintDecl:
    id: str
    on: str
    kind: str
    params: Any
    raw_params: Mapping[str, Any] = field(default_factory=dict, compare=False)
    severity: str = ERROR
    pattern: Any = None  # explicit PatternCode, or None to derive
    tolerance: float | None = None


@dataclass(frozen=True)
class GuardSpec:
    name: str
    constraints: tuple[ConstraintDecl, ...]
    files: Mapping[str, str] = field(default_factory=dict)
    config: str | None = None
    config_bindings: Mapping[str, str] = field(default_factory=dict)
    references: Mapping[str, ReferenceTable] = field(default_factory=dict)
    base_dir: str = "."

    def constraint(self, cid: str) -> ConstraintDecl:
        for c in self.constraints:
            if c.id == cid:
                return c
        raise KeyError(cid)


_LOCUS_RANK = {"file": 0, "column": 1, "row": 2, "cell": 3, "path": 4}


@dataclass(frozen=True)
class Locus:
    kind: str
    row: int | None = None
    column: str | None = None
    path: str | None = None

    @classmethod
    def cell(cls, row: int, column: str) -> Locus:
        return cls("cell", row=row, column=column)

    @classmethod
    def of_row(cls, row: int) -> Locus:
        return cls("row", row=row)

    @classmethod
    def of_column(cls, column: str) -> Locus:
        return cls("column", column=column)

    @classmethod
    def at_path(cls, path: str) -> Locus:
        return cls("path", path=path)

    @classmethod
    def whole_file(cls) -> Locus:
        return cls("file")

    def sort_key(self):
        return (
            _LOCUS_RANK[self.kind],
            -1 if self.row is None else self.row,
            self.column or "",
            self.path or "",
        )

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"kind": self.kind}
        if self.row is not None:
            out["row"] = self.row
        if self.column is not None:
            out["column"] = self.column
        if self.path is not None:
            out["path"] = self.path
        return out

    def __str__(self):
        if self.kind == "cell":
            return f"{self.row}:{self.column}"
        if self.kind == "row":
            return f"{self.row}:-"
        if self.kind == "column":
            return f"-:{self.column}"
        if self.kind == "path":
            return f"/{self.path}"
        return "-:-"


@dataclass(frozen=True)
class Violation:
    locus: Locus
    message: str
    offending: str | None = None
    file: str = ""
    constraint_id: str = ""
    pattern: Any = None
    severity: str = ERROR

    def sort_key(self):
        return (self.file, self.constraint_id, self.locus.sort_key(), self.message, self.offending or "")


def locus_resolves(artifact, locus: Locus) -> bool:
    if locus.kind == "file":
        return True
    if isinstance(artifact, TabularDataset):
        if locus.kind == "cell":
            return 0 <= locus.row < artifact.row_count and artifact.has_column(locus.column)
        if locus.kind == "row":
            return 0 <= locus.row < artifact.row_count
        if locus.kind == "column":
            return artifact.has_column(locus.column)
        return False
    if isinstance(artifact, DocumentTree) and locus.kind == "path":
        return resolve_path(artifact.root, locus.path) is not MISSING
    return False
