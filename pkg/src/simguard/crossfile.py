"""Checks that draw on sibling input files or the simulation configuration."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

from .errors import ConfigBindingMissing, SiblingFileMissing, SpecError
from .model import (
    MISSING,
    ConfigRef,
    EvaluationContext,
    Locus,
    TabularDataset,
    Violation,
    cell_key,
    is_numeric,
    render_cell,
    validate_path,
)
from .tabular import Predicate, _check_keys, _missing_columns, _require, parse_value, resolve_refs

GATE_OPS = ("eq", "neq", "in", "exists", "absent", "truthy")


def _name_list(raw, what: str) -> tuple[str, ...]:
    if isinstance(raw, str):
        raw = [raw]
    if not isinstance(raw, list) or not raw or not all(isinstance(c, str) for c in raw):
        raise SpecError(f"{what} must be a non-empty list of column names")
    return tuple(raw)


@dataclass(frozen=True)
class ForeignKeyParams:
    columns: tuple[str, ...]
    other_file: str
    other_columns: tuple[str, ...]
    when: Predicate | None = None

    @classmethod
    def from_dict(cls, raw: dict, what: str = "foreign_key") -> ForeignKeyParams:
        _check_keys(raw, {"columns", "column", "other_file", "other_columns", "other_column", "when"}, what)
        columns = _name_list(raw.get("columns", raw.get("column")), f"{what}.columns")
        other = _name_list(raw.get("other_columns", raw.get("other_column")), f"{what}.other_columns")
        when = raw.get("when")
        return cls(
            columns,
            str(_require(raw, "other_file", what)),
            other,
            Predicate.from_dict(when, f"{what}.when") if when else None,
        )


@dataclass(frozen=True)
class ConnectivityParams:
    node_column: str
    edge_file: str
    endpoint_columns: tuple[str, ...]
    node_file: str | None = None
    direction: str = "must_be_referenced"

    @classmethod
    def from_dict(cls, raw: dict, what: str = "connectivity") -> ConnectivityParams:
        _check_keys(raw, {"node_file", "node_column", "edge_file", "endpoint_columns", "direction"}, what)
        direction = raw.get("direction", "must_be_referenced")
        if direction != "must_be_referenced":
            raise SpecError(f"{what}: unsupported direction {direction!r}")
        return cls(
            node_column=_require(raw, "node_column", what),
            edge_file=str(_require(raw, "edge_file", what)),
            endpoint_columns=_name_list(_require(raw, "endpoint_columns", what), f"{what}.endpoint_columns"),
            node_file=raw.get("node_file"),
            direction=direction,
        )


@dataclass(frozen=True)
class Gate:
    path: str
    op: str = "eq"
    value: Any = None

    @classmethod
    def from_dict(cls, raw: dict, what: str = "gate") -> Gate:
        _check_keys(raw, {"path", "op", "value", "values"}, what)
        path = _require(raw, "path", what)
        try:
            validate_path(path)
        except ValueError as exc:
            raise SpecError(f"{what}: {exc}") from None
        op = raw.get("op", "eq")
        if op not in GATE_OPS:
            raise SpecError(f"{what}: unknown op {op!r}")
        if op in ("eq", "neq") and "value" not in raw:
            raise SpecError(f"{what}: op {op} needs 'value'")
        value = raw.get("values", raw.get("value"))
        if op == "in":
            if not isinstance(value, list) or not value:
                raise SpecError(f"{what}: op in needs a non-empty 'values' list")
            value = tuple(value)
        return cls(path, op, value)

    def describe(self) -> str:
        if self.op in ("exists", "absent", "truthy"):
            return f"{self.path} {self.op}"
        return f"{self.path} {self.op} {self.value!r}"


@dataclass(frozen=True)
class ConfigGateParams:
    gate: Gate
    gated_kind: str
    gated_params: Any
    gated_raw: Any = None


@dataclass(frozen=True)
class TemporalWindowParams:
    column: str
    not_before: Any

    @classmethod
    def from_dict(cls, raw: dict, what: str = "temporal_window") -> TemporalWindowParams:
        _check_keys(raw, {"column", "not_before"}, what)
        bound = parse_value(_require(raw, "not_before", what), f"{what}.not_before")
        if not isinstance(bound, ConfigRef):
            raise SpecError(f"{what}: not_before must be a config binding ({{config: name}})")
        return cls(_require(raw, "column", what), bound)


def _domain(other: TabularDataset, columns, other_name: str) -> frozenset:
    missing = [c for c in columns if not other.has_column(c)]
    if missing:
        raise SiblingFileMissing(other_name, f"columns {missing} absent")
    out = set()
    for c in columns:
        out.update(cell_key(v) for v in other.column(c) if v is not None)
    return frozenset(out)


def _tabular_sibling(ctx: EvaluationContext, name: str) -> TabularDataset:
    other = ctx.sibling(name)
    if not isinstance(other, TabularDataset):
        raise SiblingFileMissing(name, "not a tabular file")
    return other


def check_foreign_key(ds: TabularDataset, p: ForeignKeyParams, ctx: EvaluationContext) -> list[Violation]:
    other = _tabular_sibling(ctx, p.other_file)
    domain = _domain(other, p.other_columns, p.other_file)
    p = resolve_refs(p, ctx)
    cols = list(p.columns) + ([p.when.column] if p.when else [])
    missing = _missing_columns(ds, cols)
    if missing:
        return missing
    idxs = [ds.column_index(c) for c in p.columns]
    widx = ds.column_index(p.when.column) if p.when else None
    out = []
    label = f"{p.other_file}[{','.join(p.other_columns)}]"
    for r, row in enumerate(ds.rows):
        if widx is not None and not p.when.holds(row[widx]):
            continue
        for c, i in zip(p.columns, idxs):
            value = row[i]
            if value is None:
                continue
            if cell_key(value) not in domain:
                out.append(Violation(Locus.cell(r, c), f"value not found in {label}", render_cell(value), ds.source_path))
    return out


def check_connectivity(ctx: EvaluationContext, p: ConnectivityParams, nodes: TabularDataset | None = None) -> list[Violation]:
    if nodes is None:
        if p.node_file is None:
            raise SpecError("connectivity: node_file is required when no node table is given")
        nodes = _tabular_sibling(ctx, p.node_file)
    edges = _tabular_sibling(ctx, p.edge_file)
    connected = _domain(edges, p.endpoint_columns, p.edge_file)
    if not nodes.has_column(p.node_column):
        return _missing_columns(nodes, [p.node_column])
    out = []
    for r, value in enumerate(nodes.column(p.node_column)):
        if value is None:
            continue
        if cell_key(value) not in connected:
            out.append(Violation(
                Locus.cell(r, p.node_column), "isolated: not referenced by any edge",
                render_cell(value), nodes.source_path, severity="warning",
            ))
    return out


def gate_holds(ctx: EvaluationContext, gate: Gate) -> bool:
    value = ctx.lookup_config(gate.path)
    if gate.op == "exists":
        return value is not MISSING
    if gate.op == "absent":
        return value is MISSING
    if value is MISSING:
        raise ConfigBindingMissing(gate.path, gate.path)
    if gate.op == "truthy":
        return bool(value)
    if gate.op == "eq":
        return _same(value, gate.value)
    if gate.op == "neq":
        return not _same(value, gate.value)
    return any(_same(value, v) for v in gate.value)


def _same(a, b) -> bool:
    if isinstance(a, (dict, list)) or isinstance(b, (dict, list)):
        return a == b
    if isinstance(a, bool) != isinstance(b, bool):
        return False
    return cell_key(a) == cell_key(b)


def check_config_gate(ctx: EvaluationContext, p: ConfigGateParams, evaluate: Callable[[], list[Violation]]) -> list[Violation]:
    if not gate_holds(ctx, p.gate):
        return []
    return evaluate()


def check_temporal_window(ds: TabularDataset, p: TemporalWindowParams, ctx: EvaluationContext) -> list[Violation]:
    bound = ctx.resolve(p.not_before)
    if not ds.has_column(p.column):
        return _missing_columns(ds, [p.column])
    out = []
    for r, value in enumerate(ds.column(p.column)):
        if value is None:
            continue
        if is_numeric(value) and is_numeric(bound):
            early = value < bound
        elif isinstance(value, str) and isinstance(bound, str):
            early = value.strip() < bound.strip()
        else:
            out.append(Violation(
                Locus.cell(r, p.column), f"cannot compare with bound {bound!r}", render_cell(value), ds.source_path,
            ))
            continue
        if early:
            out.append(Violation(
                Locus.cell(r, p.column), f"earlier than simulation start {render_cell(bound)}",
                render_cell(value), ds.source_path,
            ))
    return out
