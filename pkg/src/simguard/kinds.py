"""Registry of constraint kinds.

Each kind knows how to parse its parameters, what input it needs, how it
maps onto the pattern taxonomy and how to evaluate itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Any, Callable

from . import crossfile as cf
from . import hierarchical as hx
from . import tabular as tb
from .errors import SpecError
from .model import ConfigRef, DocumentTree, EvaluationContext, ReferenceRef, TabularDataset, validate_path

TABLE = "table"
DOCUMENT = "document"
PATH = "path"
FILESET = "fileset"


class Skipped(Exception):
    """Raised when a gated constraint does not apply to this run."""


@dataclass(frozen=True)
class Shape:
    target: str
    sources: frozenset = frozenset()
    self_template: bool = False
    modified: bool = False
    conditional: bool = False


def ref_sources(obj) -> frozenset:
    """Sources (3, 4) implied by reference/config markers inside params."""
    found: set[int] = set()

    def walk(o):
        if isinstance(o, ConfigRef):
            found.add(4)
        elif isinstance(o, ReferenceRef):
            found.add(3)
        elif hasattr(o, "__dataclass_fields__"):
            for f in fields(o):
                walk(getattr(o, f.name))
        elif isinstance(o, (tuple, list)):
            for v in o:
                walk(v)

    walk(obj)
    return frozenset(found)


@dataclass(frozen=True)
class Kind:
    name: str
    input: str
    parse: Callable[..., Any]
    shape: Callable[[Any], Shape] = lambda p: Shape("i")
    evaluate: Callable[..., list] | None = None
    siblings: Callable[[Any], set] = lambda p: set()
    meta: bool = False
    summary: str = ""


@dataclass(frozen=True)
class DocumentSchemaParams:
    schema: hx.NodeSchema
    at: str | None = None
    schema_source: Any = field(default=None, compare=False)


@dataclass(frozen=True)
class FileCountParams:
    min: int | None = None
    max: int | None = None


def _parse_document_schema(raw, what, base_dir):
    tb._check_keys(raw, {"schema", "schema_file", "at"}, what)
    if ("schema" in raw) == ("schema_file" in raw):
        raise SpecError(f"{what}: give exactly one of schema / schema_file")
    source = raw.get("schema", raw.get("schema_file"))
    at = raw.get("at")
    if at is not None:
        try:
            validate_path(at)
        except ValueError as exc:
            raise SpecError(f"{what}: {exc}") from None
    return DocumentSchemaParams(hx.load_schema(source, base_dir), at, source)


def _parse_file_count(raw, what, base_dir):
    tb._check_keys(raw, {"min", "max"}, what)
    lo, hi = raw.get("min"), raw.get("max")
    if lo is None and hi is None:
        raise SpecError(f"{what}: give min and/or max")
    for v in (lo, hi):
        if v is not None and (not isinstance(v, int) or v < 0):
            raise SpecError(f"{what}: counts must be non-negative integers")
    return FileCountParams(lo, hi)


def _parse_gate(raw, what, base_dir):
    tb._check_keys(raw, {"gate", "constraint"}, what)
    gate = cf.Gate.from_dict(tb._require(raw, "gate", what), f"{what}.gate")
    inner = tb._require(raw, "constraint", what)
    if not isinstance(inner, dict) or "kind" not in inner:
        raise SpecError(f"{what}.constraint needs 'kind' and 'params'")
    kind = REGISTRY.get(inner["kind"])
    if kind is None or kind.meta or kind.name == "config_gate":
        raise SpecError(f"{what}: cannot gate kind {inner['kind']!r}")
    params = kind.parse(inner.get("params", {}), f"{what}.constraint", base_dir)
    return cf.ConfigGateParams(gate, kind.name, params, inner.get("params", {}))


def _gate_shape(p: cf.ConfigGateParams) -> Shape:
    inner = REGISTRY[p.gated_kind].shape(p.gated_params)
    return Shape(
        target=inner.target,
        sources=inner.sources | {4},
        self_template=inner.self_template,
        modified=inner.modified,
        conditional=True,
    )


def _gate_input(p: cf.ConfigGateParams) -> str:
    return REGISTRY[p.gated_kind].input


def _eval_gate(target, p: cf.ConfigGateParams, ctx: EvaluationContext):
    inner = REGISTRY[p.gated_kind]
    if not cf.gate_holds(ctx, p.gate):
        raise Skipped(f"gate false: {p.gate.describe()}")
    return cf.check_config_gate(ctx, p, lambda: inner.evaluate(target, p.gated_params, ctx))


def _from(cls):
    return lambda raw, what, base_dir: cls.from_dict(raw, what)


def _width(n: int) -> str:
    return "i" if n <= 1 else "ii"


def _column_shape(p: tb.ColumnConstraintParams) -> Shape:
    return Shape("i", ref_sources(p), self_template=p.unique)


def _conditional_shape(p: tb.ConditionalParams) -> Shape:
    return Shape(_width(len(p.on_columns)), ref_sources(p), self_template=True, modified=True)


def _fk_shape(p: cf.ForeignKeyParams) -> Shape:
    return Shape(_width(len(p.columns)), ref_sources(p) | {2})


def _eval_row_count(ds, p, ctx):
    return tb.check_row_count(ds, p, ctx)


def _eval_connectivity(ds, p, ctx):
    return cf.check_connectivity(ctx, p, nodes=ds)


def _eval_document_schema(doc, p, ctx):
    return hx.check_document(doc, p.schema, p.at)


def _eval_syntax(path, p, ctx):
    return hx.check_syntax(path)


def _parse_empty(raw, what, base_dir):
    tb._check_keys(raw or {}, set(), what)
    return None


_KINDS = [
    Kind("column", TABLE, _from(tb.ColumnConstraintParams), _column_shape, tb.check_column,
         summary="type/nullable/unique/bounds/isin/regex on one column"),
    Kind("conditional", TABLE, _from(tb.ConditionalParams), _conditional_shape, tb.check_conditional,
         summary="row-wise rule applied where a predicate holds"),
    Kind("stepwise", TABLE, _from(tb.StepwiseParams),
         lambda p: Shape("i", ref_sources(p)), tb.check_stepwise,
         summary="values on a step grid within [min, max], optionally contiguous"),
    Kind("dynamic_columns", TABLE, _from(tb.DynamicColumnsParams),
         lambda p: Shape("iii", ref_sources(p), self_template=p.template.unique, conditional=True),
         tb.check_dynamic_columns,
         summary="one column template applied to every selected column"),
    Kind("summation", TABLE, _from(tb.SummationParams),
         lambda p: Shape("viii", ref_sources(p)), tb.check_summation,
         summary="per-column or per-row sums within target +/- tolerance"),
    Kind("distinct_fields", TABLE, lambda raw, what, b: tb.FieldPairParams.from_dict(raw, what),
         lambda p: Shape("ii", self_template=True), tb.check_distinct_fields,
         summary="two columns differ on every row"),
    Kind("ordered_fields", TABLE, lambda raw, what, b: tb.FieldPairParams.from_dict(raw, what),
         lambda p: Shape("ii", self_template=True), tb.check_ordered_fields,
         summary="value(a) < value(b) on every row"),
    Kind("unique_rows", TABLE, _from(tb.UniqueRowsParams),
         lambda p: Shape(_width(len(p.columns)), self_template=True), tb.check_unique_rows,
         summary="no duplicate key tuples (optionally order-insensitive)"),
    Kind("required_columns", TABLE, _from(tb.RequiredColumnsParams),
         lambda p: Shape(_width(len(p.columns))), tb.check_required_columns,
         summary="columns present (and non-null)"),
    Kind("same_as_first", TABLE, _from(tb.SameAsFirstParams),
         lambda p: Shape("ii" if p.when else "i", self_template=True), tb.check_same_as_first,
         summary="selected rows repeat the first row's value"),
    Kind("row_count", TABLE, _from(tb.RowCountParams), lambda p: Shape("v"), _eval_row_count,
         summary="row count within bounds"),
    Kind("foreign_key", TABLE, _from(cf.ForeignKeyParams), _fk_shape, cf.check_foreign_key,
         siblings=lambda p: {p.other_file},
         summary="values must appear in columns of another file"),
    Kind("connectivity", TABLE, _from(cf.ConnectivityParams),
         lambda p: Shape("i", frozenset({2})), _eval_connectivity,
         siblings=lambda p: {p.edge_file},
         summary="every node is referenced by some edge"),
    Kind("temporal_window", TABLE, _from(cf.TemporalWindowParams),
         lambda p: Shape("i", frozenset({4})), cf.check_temporal_window,
         summary="values not earlier than a configured bound"),
    Kind("config_gate", TABLE, _parse_gate, _gate_shape, _eval_gate,
         siblings=lambda p: REGISTRY[p.gated_kind].siblings(p.gated_params),
         summary="apply a constraint only when a configuration predicate holds"),
    Kind("document_schema", DOCUMENT, _parse_document_schema,
         lambda p: Shape("viii"), _eval_document_schema,
         summary="whole document adheres to a schema"),
    Kind("document_nesting", DOCUMENT, _parse_document_schema,
         lambda p: Shape("vii"), _eval_document_schema,
         summary="nesting structure of a document section"),
    Kind("document_syntax", PATH, _parse_empty, lambda p: Shape("vi"), _eval_syntax,
         summary="file parses as YAML/JSON without duplicate keys"),
    Kind("file_count", FILESET, _parse_file_count, meta=True,
         summary="number of files matching the selector"),
]

REGISTRY: dict[str, Kind] = {k.name: k for k in _KINDS}


def input_of(kind_name: str, params) -> str:
    if kind_name == "config_gate":
        return _gate_input(params)
    return REGISTRY[kind_name].input
