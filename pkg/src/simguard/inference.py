"""Bootstrap guard specs from sample inputs.

Inferred constraints are deliberately tight: they describe exactly what
the sample contains (observed ranges, observed enum members), so they
tend to reject valid values the sample happens not to show. They are a
starting point for refinement, not a finished spec.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from pathlib import PurePosixPath

from . import hierarchical as hx
from .errors import SpecError
from .kinds import REGISTRY
from .model import ConstraintDecl, DocumentTree, GuardSpec, TabularDataset, cell_key, cell_type
from .reporting import ValidationReport
from .specfile import dump_guard_spec

log = logging.getLogger("simguard.inference")

INFERRED_COMMENT = "inferred"


@dataclass(frozen=True)
class InferenceOptions:
    enum_max_cardinality: int = 10
    enum_min_rows: int = 20
    range_padding: float = 0
    infer_uniqueness: bool = True

    def __post_init__(self):
        for name in ("enum_max_cardinality", "enum_min_rows", "range_padding"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


def covering_type(values) -> str | None:
    """Narrowest column type admitting every non-null value, or None if all null."""
    kinds = {cell_type(v) for v in values if v is not None}
    if not kinds:
        return None
    if kinds == {"integer"}:
        return "integer"
    if kinds <= {"integer", "real"}:
        return "real"
    if kinds == {"boolean"}:
        return "boolean"
    return "text"


def _sort_key(value):
    return (cell_type(value), value)


def _padded(value, padding, down: bool):
    if not padding:
        return value
    return value - padding if down else value + padding


def infer_column(ds: TabularDataset, column: str, opt: InferenceOptions) -> dict:
    """Raw parameters for a ``column`` constraint describing one column."""
    values = ds.column(column)
    present = [v for v in values if v is not None]
    raw: dict = {"column": column}
    expected = covering_type(present)
    if expected is not None:
        raw["type"] = expected
    if len(present) < len(values):
        raw["nullable"] = True
    if expected in ("integer", "real"):
        raw["ge"] = _padded(min(present), opt.range_padding, down=True)
        raw["le"] = _padded(max(present), opt.range_padding, down=False)
    distinct: dict[str, object] = {}
    for v in present:
        distinct.setdefault(cell_key(v), v)
    if (
        expected not in (None, "boolean")
        and len(distinct) <= opt.enum_max_cardinality
        and ds.row_count >= opt.enum_min_rows
    ):
        raw["isin"] = sorted(distinct.values(), key=_sort_key)
    if opt.infer_uniqueness and present and len(distinct) == len(present):
        raw["unique"] = True
    if len(raw) == 1:
        raw["nullable"] = False
    return raw


def _decl(cid: str, on: str, kind: str, raw: dict) -> ConstraintDecl:
    params = REGISTRY[kind].parse(raw, f"constraint '{cid}'", ".")
    return ConstraintDecl(id=cid, on=on, kind=kind, params=params, raw_params=raw)


def logical_name(rel: str) -> str:
    stem = PurePosixPath(rel).stem
    return re.sub(r"[^A-Za-z0-9_]+", "_", stem).strip("_") or "file"


def infer_tabular(ds: TabularDataset, opt: InferenceOptions | None = None, on: str | None = None) -> list[ConstraintDecl]:
    opt = opt or InferenceOptions()
    on = on or ds.source_path
    if ds.row_count == 0:
        log.warning("%s: no data rows; nothing inferred", ds.source_path)
        return []
    prefix = logical_name(on)
    return [
        _decl(f"{prefix}.{column}", on, "column", infer_column(ds, column, opt))
        for column in ds.column_names
    ]


def _scalar_schema(value) -> hx.NodeSchema:
    kind = hx.node_type(value)
    return hx.NodeSchema() if kind == "null" else hx.NodeSchema(type=kind)


def _merge(a: hx.NodeSchema, b: hx.NodeSchema) -> hx.NodeSchema:
    """Least schema admitting everything ``a`` and ``b`` admit."""
    if a == b:
        return a
    if {a.type, b.type} == {"integer", "number"}:
        return hx.NodeSchema(type="number")
    if a.type != b.type or a.type is None:
        return hx.NodeSchema()
    if a.type == "object":
        keys = sorted(set(a.properties) | set(b.properties))
        props = {}
        for k in keys:
            if k in a.properties and k in b.properties:
                props[k] = _merge(a.properties[k], b.properties[k])
            else:
                props[k] = a.properties.get(k) or b.properties[k]
        required = tuple(k for k in a.required if k in b.required)
        return hx.NodeSchema(type="object", properties=props, required=required, additional_properties=False)
    if a.type == "array":
        if a.items is None or b.items is None:
            items = a.items or b.items
        else:
            items = _merge(a.items, b.items)
        return hx.NodeSchema(type="array", items=items)
    return hx.NodeSchema(type=a.type)


def infer_node(node) -> hx.NodeSchema:
    if isinstance(node, dict):
        keys = sorted(node)
        return hx.NodeSchema(
            type="object",
            properties={k: infer_node(node[k]) for k in keys},
            required=tuple(keys),
            additional_properties=False,
        )
    if isinstance(node, list):
        items = None
        for element in node:
            schema = infer_node(element)
            items = schema if items is None else _merge(items, schema)
        return hx.NodeSchema(type="array", items=items)
    return _scalar_schema(node)


def infer_document(doc: DocumentTree) -> hx.NodeSchema:
    return infer_node(doc.root)


def infer_inputs(inputs, opt: InferenceOptions | None = None, name: str = "inferred") -> tuple[GuardSpec, str]:
    """Infer a guard spec for every file in ``inputs``.

    Returns the spec and its YAML rendering.
    """
    opt = opt or InferenceOptions()
    paths = inputs.paths()
    if not paths:
        raise SpecError("no inputs")
    files: dict[str, str] = {}
    decls: list[ConstraintDecl] = []
    for rel in paths:
        logical = logical_name(rel)
        base, n = logical, 2
        while logical in files:
            logical, n = f"{base}_{n}", n + 1
        files[logical] = rel
        artifact = inputs.load(rel)
        if isinstance(artifact, TabularDataset):
            found = infer_tabular(artifact, opt, on=rel)
            decls.extend(
                _decl(f"{logical}.{d.raw_params['column']}", logical, "column", dict(d.raw_params)) for d in found
            )
        else:
            schema = infer_document(artifact)
            decls.append(_decl(f"{logical}.schema", logical, "document_schema", {"schema": schema.to_dict()}))
    header = {"name": name, "files": files}
    text = dump_guard_spec(header, decls, INFERRED_COMMENT)
    spec = GuardSpec(name=name, constraints=tuple(decls), files=files)
    return spec, text


def round_trip_check(inputs, inferred: GuardSpec, timestamp: str = "") -> ValidationReport:
    """Validate ``inputs`` against a spec inferred from them (expects zero errors)."""
    from .runner import run_validation

    return run_validation(inferred, inputs, jobs=1, timestamp=timestamp)
