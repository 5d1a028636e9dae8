"""Within-table constraint checks.

Every check is a pure function of a :class:`TabularDataset` and a parameter
record and returns violations with cell, row, column or file loci. Missing
columns are reported as file-level violations so that every locus stays
resolvable against the dataset.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, fields, replace
from decimal import Decimal, localcontext
from typing import Any, Sequence

from .errors import SelectorEmpty, SpecError
from .model import (
    ConfigRef,
    EvaluationContext,
    Locus,
    ReferenceRef,
    TabularDataset,
    Violation,
    cell_key,
    cell_type,
    is_numeric,
    is_ref,
    parse_cell,
    render_cell,
)

COLUMN_TYPES = ("integer", "real", "boolean", "text")
BOUND_KEYS = ("ge", "gt", "le", "lt")
PREDICATE_OPS = ("eq", "neq", "in", "notin", "isnull", "notnull")


# ---------------------------------------------------------------------------
# parameter parsing helpers


def parse_value(raw, what: str = "value"):
    """Literal, ``{config: name}`` or ``{reference: name, key: k}``."""
    if isinstance(raw, dict):
        if set(raw) == {"config"}:
            return ConfigRef(str(raw["config"]))
        if "reference" in raw and set(raw) <= {"reference", "key"}:
            key = raw.get("key")
            return ReferenceRef(str(raw["reference"]), None if key is None else str(key))
        raise SpecError(f"{what}: unsupported mapping {raw!r}")
    return raw


def _number(raw, what: str):
    value = parse_value(raw, what)
    if is_ref(value):
        return value
    if not is_numeric(value):
        raise SpecError(f"{what} must be a number, got {raw!r}")
    return value


def _require(raw: dict, key: str, what: str):
    if key not in raw:
        raise SpecError(f"{what}: missing required parameter '{key}'")
    return raw[key]


def _check_keys(raw: dict, allowed: set[str], what: str):
    if not isinstance(raw, dict):
        raise SpecError(f"{what}: parameters must be a mapping")
    extra = set(raw) - allowed
    if extra:
        raise SpecError(f"{what}: unknown parameter(s) {sorted(extra)}")


def resolve_refs(obj, ctx: EvaluationContext | None):
    """Replace every config/reference marker inside a params record."""
    if is_ref(obj):
        if ctx is None:
            ctx = EvaluationContext()
        return ctx.resolve(obj)
    if hasattr(obj, "__dataclass_fields__"):
        changes = {}
        for f in fields(obj):
            value = getattr(obj, f.name)
            resolved = resolve_refs(value, ctx)
            if resolved is not value:
                changes[f.name] = resolved
        return replace(obj, **changes) if changes else obj
    if isinstance(obj, tuple):
        items = tuple(resolve_refs(v, ctx) for v in obj)
        return items if any(a is not b for a, b in zip(items, obj)) else obj
    return obj


def _numeric_or_raise(value, what: str):
    if not is_numeric(value):
        raise SpecError(f"{what} resolved to non-numeric value {value!r}")
    return value


# ---------------------------------------------------------------------------
# parameter records


@dataclass(frozen=True)
class ColumnConstraintParams:
    column: str | None = None
    expected_type: str | None = None
    nullable: bool = False
    unique: bool = False
    ge: Any = None
    gt: Any = None
    le: Any = None
    lt: Any = None
    isin: Any = None  # tuple of members or a ReferenceRef
    regex: str | None = None
    coerce: bool = False

    @property
    def has_bounds(self) -> bool:
        return any(getattr(self, k) is not None for k in BOUND_KEYS)

    @classmethod
    def from_dict(cls, raw: dict, what: str = "column", require_column: bool = True) -> ColumnConstraintParams:
        allowed = {"column", "type", "expected_type", "nullable", "unique", "isin", "regex", "coerce", "in_range", *BOUND_KEYS}
        _check_keys(raw, allowed, what)
        column = raw.get("column")
        if require_column and not isinstance(column, str):
            raise SpecError(f"{what}: 'column' must name a column")
        expected = raw.get("expected_type", raw.get("type"))
        if expected is not None and expected not in COLUMN_TYPES:
            raise SpecError(f"{what}: unknown type {expected!r}")
        bounds = {k: _number(raw[k], f"{what}.{k}") for k in BOUND_KEYS if k in raw}
        if "in_range" in raw:
            rng = raw["in_range"]
            if not isinstance(rng, dict) or not set(rng) <= {"min_value", "max_value"}:
                raise SpecError(f"{what}: in_range needs min_value/max_value")
            if "min_value" in rng:
                bounds["ge"] = _number(rng["min_value"], f"{what}.in_range.min_value")
            if "max_value" in rng:
                bounds["le"] = _number(rng["max_value"], f"{what}.in_range.max_value")
        if bounds and expected in ("boolean", "text"):
            raise SpecError(f"{what}: bounds need a numeric (or unspecified) type")
        isin = raw.get("isin")
        if isin is not None:
            isin = parse_value(isin, f"{what}.isin")
            if not is_ref(isin):
                if not isinstance(isin, (list, tuple)) or not isin:
                    raise SpecError(f"{what}: isin must be a non-empty list")
                isin = tuple(isin)
        regex = raw.get("regex")
        if regex is not None:
            try:
                re.compile(regex)
            except (re.error, TypeError) as exc:
                raise SpecError(f"{what}: bad regex {regex!r}: {exc}") from None
        params = cls(
            column=column,
            expected_type=expected,
            nullable=bool(raw.get("nullable", False)),
            unique=bool(raw.get("unique", False)),
            isin=isin,
            regex=regex,
            coerce=bool(raw.get("coerce", False)),
            **bounds,
        )
        has_check = (
            expected is not None or bounds or isin is not None or regex is not None
            or params.unique or "nullable" in raw
        )
        if not has_check:
            raise SpecError(f"{what}: at least one check is required")
        return params


@dataclass(frozen=True)
class Predicate:
    column: str
    op: str
    value: Any = None

    @classmethod
    def from_dict(cls, raw: dict, what: str = "predicate") -> Predicate:
        _check_keys(raw, {"column", "op", "value", "values"}, what)
        column = _require(raw, "column", what)
        op = raw.get("op", "eq")
        if op not in PREDICATE_OPS:
            raise SpecError(f"{what}: unknown op {op!r}")
        if op in ("in", "notin"):
            values = raw.get("values", raw.get("value"))
            values = parse_value(values, what)
            if not is_ref(values):
                if not isinstance(values, (list, tuple)) or not values:
                    raise SpecError(f"{what}: op {op} needs a non-empty 'values' list")
                values = tuple(values)
            return cls(column, op, values)
        if op in ("eq", "neq"):
            if "value" not in raw:
                raise SpecError(f"{what}: op {op} needs 'value'")
            return cls(column, op, parse_value(raw["value"], what))
        return cls(column, op)

    def holds(self, value) -> bool:
        if self.op == "isnull":
            return value is None
        if self.op == "notnull":
            return value is not None
        if value is None:
            return False
        key = cell_key(value)
        if self.op == "eq":
            return key == cell_key(self.value)
        if self.op == "neq":
            return key != cell_key(self.value)
        members = _member_keys(self.value)
        if self.op == "in":
            return key in members
        return key not in members

    def describe(self) -> str:
        if self.op in ("isnull", "notnull"):
            return f"{self.column} {self.op}"
        return f"{self.column} {self.op} {self.value!r}"


def _member_keys(members) -> frozenset:
    if isinstance(members, frozenset):
        return members
    return frozenset(cell_key(m) for m in members)


@dataclass(frozen=True)
class ConditionalParams:
    when: Predicate
    then: Any  # ColumnConstraintParams or Predicate

    @property
    def on_columns(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys([self.when.column, self.then.column]))

    @classmethod
    def from_dict(cls, raw: dict, what: str = "conditional") -> ConditionalParams:
        _check_keys(raw, {"when", "then", "on_columns"}, what)
        when = Predicate.from_dict(_require(raw, "when", what), f"{what}.when")
        then_raw = _require(raw, "then", what)
        if not isinstance(then_raw, dict):
            raise SpecError(f"{what}.then must be a mapping")
        if "op" in then_raw:
            then = Predicate.from_dict(then_raw, f"{what}.then")
        else:
            then = ColumnConstraintParams.from_dict(then_raw, f"{what}.then")
            if then.unique:
                raise SpecError(f"{what}.then: unique is not a per-row check")
        return cls(when, then)


@dataclass(frozen=True)
class StepwiseParams:
    column: str
    min: Any
    max: Any
    step: Any = 1
    require_contiguous: bool = False

    @classmethod
    def from_dict(cls, raw: dict, what: str = "stepwise") -> StepwiseParams:
        _check_keys(raw, {"column", "min", "max", "step", "require_contiguous"}, what)
        step = _number(raw.get("step", 1), f"{what}.step")
        if not is_ref(step) and step <= 0:
            raise SpecError(f"{what}: step must be > 0")
        p = cls(
            column=_require(raw, "column", what),
            min=_number(_require(raw, "min", what), f"{what}.min"),
            max=_number(_require(raw, "max", what), f"{what}.max"),
            step=step,
            require_contiguous=bool(raw.get("require_contiguous", False)),
        )
        if not is_ref(p.min) and not is_ref(p.max) and p.min > p.max:
            raise SpecError(f"{what}: min {p.min} exceeds max {p.max}")
        return p


@dataclass(frozen=True)
class Selector:
    mode: str  # all_but_first | regex | columns | all
    value: Any = None

    @classmethod
    def from_raw(cls, raw, what: str = "selector") -> Selector:
        if raw is None or raw == "all_but_first":
            return cls("all_but_first")
        if raw == "all":
            return cls("all")
        if isinstance(raw, dict) and len(raw) == 1:
            (mode, value), = raw.items()
            if mode == "all_but_first" and value:
                return cls("all_but_first")
            if mode == "regex":
                try:
                    re.compile(value)
                except (re.error, TypeError) as exc:
                    raise SpecError(f"{what}: bad regex: {exc}") from None
                return cls("regex", value)
            if mode == "columns" and isinstance(value, list) and value:
                return cls("columns", tuple(value))
        if isinstance(raw, list) and raw:
            return cls("columns", tuple(raw))
        raise SpecError(f"{what}: unsupported selector {raw!r}")

    def select(self, ds: TabularDataset) -> list[str]:
        names = list(ds.column_names)
        if self.mode == "all_but_first":
            return names[1:]
        if self.mode == "all":
            return names
        if self.mode == "regex":
            rx = re.compile(self.value)
            return [n for n in names if rx.fullmatch(n)]
        return list(self.value)

    def __str__(self):
        return self.mode if self.value is None else f"{self.mode}={self.value!r}"


@dataclass(frozen=True)
class DynamicColumnsParams:
    selector: Selector
    template: ColumnConstraintParams

    @classmethod
    def from_dict(cls, raw: dict, what: str = "dynamic_columns") -> DynamicColumnsParams:
        _check_keys(raw, {"selector", "template"}, what)
        template = ColumnConstraintParams.from_dict(
            _require(raw, "template", what), f"{what}.template", require_column=False
        )
        return cls(Selector.from_raw(raw.get("selector"), f"{what}.selector"), template)


@dataclass(frozen=True)
class SummationParams:
    axis: str = "per_column"
    columns: Selector = Selector("all_but_first")
    target: Any = 1.0
    tolerance: Any = 0.01

    @classmethod
    def from_dict(cls, raw: dict, what: str = "summation") -> SummationParams:
        _check_keys(raw, {"axis", "columns", "target", "tolerance"}, what)
        axis = raw.get("axis", "per_column")
        if axis not in ("per_column", "per_row"):
            raise SpecError(f"{what}: axis must be per_column or per_row")
        tol = _number(raw.get("tolerance", 0.01), f"{what}.tolerance")
        if not is_ref(tol) and tol < 0:
            raise SpecError(f"{what}: tolerance must be >= 0")
        return cls(
            axis=axis,
            columns=Selector.from_raw(raw.get("columns"), f"{what}.columns"),
            target=_number(raw.get("target", 1), f"{what}.target"),
            tolerance=tol,
        )


@dataclass(frozen=True)
class FieldPairParams:
    a: str
    b: str

    @classmethod
    def from_dict(cls, raw: dict, what: str = "field pair") -> FieldPairParams:
        _check_keys(raw, {"a", "b"}, what)
        a, b = _require(raw, "a", what), _require(raw, "b", what)
        if a == b:
            raise SpecError(f"{what}: columns must be distinct")
        return cls(a, b)


@dataclass(frozen=True)
class UniqueRowsParams:
    columns: tuple[str, ...]
    unordered: bool = True

    @classmethod
    def from_dict(cls, raw: dict, what: str = "unique_rows") -> UniqueRowsParams:
        _check_keys(raw, {"columns", "unordered"}, what)
        cols = _require(raw, "columns", what)
        if not isinstance(cols, list) or not cols or len(set(cols)) != len(cols):
            raise SpecError(f"{what}: columns must be a non-empty list of distinct names")
        return cls(tuple(cols), bool(raw.get("unordered", True)))


@dataclass(frozen=True)
class RequiredColumnsParams:
    columns: tuple[str, ...]
    nullable: bool = False

    @classmethod
    def from_dict(cls, raw: dict, what: str = "required_columns") -> RequiredColumnsParams:
        _check_keys(raw, {"columns", "nullable"}, what)
        cols = _require(raw, "columns", what)
        if not isinstance(cols, list) or not cols:
            raise SpecError(f"{what}: columns must be a non-empty list")
        return cls(tuple(cols), bool(raw.get("nullable", False)))


@dataclass(frozen=True)
class SameAsFirstParams:
    column: str
    when: Predicate | None = None

    @classmethod
    def from_dict(cls, raw: dict, what: str = "same_as_first") -> SameAsFirstParams:
        _check_keys(raw, {"column", "when"}, what)
        when = raw.get("when")
        return cls(_require(raw, "column", what), Predicate.from_dict(when, f"{what}.when") if when else None)


@dataclass(frozen=True)
class RowCountParams:
    min_rows: int | None = None
    max_rows: int | None = None

    @classmethod
    def from_dict(cls, raw: dict, what: str = "row_count") -> RowCountParams:
        _check_keys(raw, {"min_rows", "max_rows"}, what)
        if not raw:
            raise SpecError(f"{what}: give min_rows and/or max_rows")
        return cls(raw.get("min_rows"), raw.get("max_rows"))


# ---------------------------------------------------------------------------
# checks


def _absent(ds: TabularDataset, column: str) -> Violation:
    return Violation(Locus.whole_file(), f"column '{column}' absent", file=ds.source_path)


def _missing_columns(ds: TabularDataset, columns: Sequence[str]) -> list[Violation]:
    return [_absent(ds, c) for c in dict.fromkeys(columns) if not ds.has_column(c)]


def _coerce(value, expected: str | None):
    if not isinstance(value, str) or expected in (None, "text"):
        return value
    try:
        parsed = parse_cell(value)
    except ValueError:
        return value
    return parsed


def _type_ok(value, expected: str | None, coerce: bool) -> bool:
    if expected is None or expected == "text":
        return True
    if expected == "boolean":
        return isinstance(value, bool)
    if expected == "integer":
        if isinstance(value, bool):
            return False
        if isinstance(value, int):
            return True
        return coerce and isinstance(value, float) and value.is_integer()
    return is_numeric(value)


def _cell_failure(value, p: ColumnConstraintParams, isin_keys, rx) -> str | None:
    """Reason a non-null cell fails the per-cell checks, or None."""
    if p.coerce:
        value = _coerce(value, p.expected_type)
    if not _type_ok(value, p.expected_type, p.coerce):
        return f"expected {p.expected_type}, got {cell_type(value)}"
    if p.has_bounds and not is_numeric(value):
        return f"expected number, got {cell_type(value)}"
    if p.ge is not None and not value >= p.ge:
        return f"value must be >= {p.ge}"
    if p.gt is not None and not value > p.gt:
        return f"value must be > {p.gt}"
    if p.le is not None and not value <= p.le:
        return f"value must be <= {p.le}"
    if p.lt is not None and not value < p.lt:
        return f"value must be < {p.lt}"
    if isin_keys is not None and cell_key(value) not in isin_keys:
        return "value not in allowed set"
    if rx is not None and not rx.fullmatch(value if isinstance(value, str) else render_cell(value)):
        return f"value does not match /{p.regex}/"
    return None


def _prepare(p: ColumnConstraintParams, ctx):
    p = resolve_refs(p, ctx)
    for k in BOUND_KEYS:
        if getattr(p, k) is not None:
            _numeric_or_raise(getattr(p, k), f"bound {k}")
    isin_keys = None if p.isin is None else _member_keys(p.isin)
    rx = re.compile(p.regex) if p.regex is not None else None
    return p, isin_keys, rx


def _column_violations(ds: TabularDataset, column: str, p: ColumnConstraintParams, isin_keys, rx) -> list[Violation]:
    idx = ds.column_index(column)
    flagged: dict[int, Violation] = {}
    seen: dict[str, int] = {}
    for r, row in enumerate(ds.rows):
        value = row[idx]
        if value is None:
            if not p.nullable:
                flagged[r] = Violation(Locus.cell(r, column), "null value not allowed", None, ds.source_path)
            continue
        reason = _cell_failure(value, p, isin_keys, rx)
        if reason is not None:
            flagged[r] = Violation(Locus.cell(r, column), reason, render_cell(value), ds.source_path)
        if p.unique:
            key = cell_key(_coerce(value, p.expected_type) if p.coerce else value)
            if key in seen:
                if r not in flagged:
                    flagged[r] = Violation(
                        Locus.cell(r, column), f"duplicate of row {seen[key]}", render_cell(value), ds.source_path
                    )
            else:
                seen[key] = r
    return [flagged[r] for r in sorted(flagged)]


def check_column(ds: TabularDataset, p: ColumnConstraintParams, ctx: EvaluationContext | None = None) -> list[Violation]:
    if not ds.has_column(p.column):
        return [_absent(ds, p.column)]
    p, isin_keys, rx = _prepare(p, ctx)
    return _column_violations(ds, p.column, p, isin_keys, rx)


def check_conditional(ds: TabularDataset, p: ConditionalParams, ctx: EvaluationContext | None = None) -> list[Violation]:
    p = resolve_refs(p, ctx)
    missing = _missing_columns(ds, p.on_columns)
    if missing:
        return missing
    when_idx = ds.column_index(p.when.column)
    then_col = p.then.column
    then_idx = ds.column_index(then_col)
    out = []
    if isinstance(p.then, Predicate):
        for r, row in enumerate(ds.rows):
            if p.when.holds(row[when_idx]) and not p.then.holds(row[then_idx]):
                value = row[then_idx]
                out.append(Violation(
                    Locus.cell(r, then_col),
                    f"when {p.when.describe()}: requires {p.then.describe()}",
                    None if value is None else render_cell(value),
                    ds.source_path,
                ))
        return out
    then, isin_keys, rx = _prepare(p.then, ctx)
    for r, row in enumerate(ds.rows):
        if not p.when.holds(row[when_idx]):
            continue
        value = row[then_idx]
        if value is None:
            reason = None if then.nullable else "null value not allowed"
        else:
            reason = _cell_failure(value, then, isin_keys, rx)
        if reason is not None:
            out.append(Violation(
                Locus.cell(r, then_col),
                f"when {p.when.describe()}: {reason}",
                None if value is None else render_cell(value),
                ds.source_path,
            ))
    return out


def _dec(value) -> Decimal:
    if isinstance(value, float):
        return Decimal(repr(value))
    return Decimal(value)


def _fmt(value: Decimal) -> str:
    return format(value.normalize(), "f")


def check_stepwise(ds: TabularDataset, p: StepwiseParams, ctx: EvaluationContext | None = None) -> list[Violation]:
    p = resolve_refs(p, ctx)
    lo = _dec(_numeric_or_raise(p.min, "stepwise min"))
    hi = _dec(_numeric_or_raise(p.max, "stepwise max"))
    step = _dec(_numeric_or_raise(p.step, "stepwise step"))
    if step <= 0:
        raise SpecError("stepwise step must be > 0")
    if lo > hi:
        raise SpecError(f"stepwise min {lo} exceeds max {hi}")
    if not ds.has_column(p.column):
        return [_absent(ds, p.column)]
    out = []
    counts: dict[Decimal, int] = {}
    with localcontext() as dctx:
        dctx.prec = 60
        for r, value in enumerate(ds.column(p.column)):
            if not is_numeric(value):
                out.append(Violation(
                    Locus.cell(r, p.column), "not a number",
                    None if value is None else render_cell(value), ds.source_path,
                ))
                continue
            v = _dec(value)
            if not (lo <= v <= hi):
                out.append(Violation(
                    Locus.cell(r, p.column), f"value outside [{_fmt(lo)}, {_fmt(hi)}]",
                    render_cell(value), ds.source_path,
                ))
            elif (v - lo) % step != 0:
                out.append(Violation(
                    Locus.cell(r, p.column), f"not an increment of {_fmt(step)} from {_fmt(lo)}",
                    render_cell(value), ds.source_path,
                ))
            else:
                counts[v] = counts.get(v, 0) + 1
        if p.require_contiguous:
            n_steps = int((hi - lo) // step)
            for i in range(n_steps + 1):
                expected = lo + step * i
                seen = counts.get(expected, 0)
                if seen == 0:
                    out.append(Violation(
                        Locus.of_column(p.column), f"missing value {_fmt(expected)}", _fmt(expected), ds.source_path,
                    ))
                elif seen > 1:
                    out.append(Violation(
                        Locus.of_column(p.column), f"value {_fmt(expected)} appears {seen} times",
                        _fmt(expected), ds.source_path,
                    ))
    return out


def check_dynamic_columns(ds: TabularDataset, p: DynamicColumnsParams, ctx: EvaluationContext | None = None) -> list[Violation]:
    columns = p.selector.select(ds)
    if not columns:
        raise SelectorEmpty(str(p.selector))
    template, isin_keys, rx = _prepare(p.template, ctx)
    out = []
    for column in columns:
        if not ds.has_column(column):
            out.append(_absent(ds, column))
            continue
        out.extend(_column_violations(ds, column, template, isin_keys, rx))
    return out


def _band(p: SummationParams, ctx):
    p = resolve_refs(p, ctx)
    target = _dec(_numeric_or_raise(p.target, "summation target"))
    tol = _dec(_numeric_or_raise(p.tolerance, "summation tolerance"))
    if tol < 0:
        raise SpecError("summation tolerance must be >= 0")
    return p, target - tol, target + tol


def within_band(total: Decimal, lo: Decimal, hi: Decimal) -> bool:
    return lo <= total <= hi


def check_summation(ds: TabularDataset, p: SummationParams, ctx: EvaluationContext | None = None) -> list[Violation]:
    p, lo, hi = _band(p, ctx)
    columns = p.columns.select(ds)
    missing = _missing_columns(ds, columns)
    if missing:
        return missing
    if not columns:
        raise SelectorEmpty(str(p.columns))
    out = []
    band = f"[{_fmt(lo)}, {_fmt(hi)}]"
    with localcontext() as dctx:
        dctx.prec = 60
        if p.axis == "per_column":
            for column in columns:
                values = ds.column(column)
                bad = [(r, v) for r, v in enumerate(values) if not is_numeric(v)]
                if bad:
                    r, v = bad[0]
                    out.append(Violation(
                        Locus.of_column(column),
                        f"non-numeric cell at row {r} ({len(bad)} in total)",
                        None if v is None else render_cell(v), ds.source_path,
                    ))
                    continue
                total = sum((_dec(v) for v in values), Decimal(0))
                if not within_band(total, lo, hi):
                    out.append(Violation(
                        Locus.of_column(column), f"{column},{_fmt(total)} outside {band}", _fmt(total), ds.source_path,
                    ))
        else:
            idxs = [ds.column_index(c) for c in columns]
            for r, row in enumerate(ds.rows):
                cells = [row[i] for i in idxs]
                if not all(is_numeric(v) for v in cells):
                    out.append(Violation(Locus.of_row(r), "row contains non-numeric cells", None, ds.source_path))
                    continue
                total = sum((_dec(v) for v in cells), Decimal(0))
                if not within_band(total, lo, hi):
                    out.append(Violation(Locus.of_row(r), f"row sum {_fmt(total)} outside {band}", _fmt(total), ds.source_path))
    return out


def check_distinct_fields(ds: TabularDataset, p: FieldPairParams, ctx=None) -> list[Violation]:
    missing = _missing_columns(ds, (p.a, p.b))
    if missing:
        return missing
    ia, ib = ds.column_index(p.a), ds.column_index(p.b)
    out = []
    for r, row in enumerate(ds.rows):
        a, b = row[ia], row[ib]
        if a is not None and b is not None and cell_key(a) == cell_key(b):
            out.append(Violation(Locus.of_row(r), f"{p.a} equals {p.b}", render_cell(a), ds.source_path))
    return out


def _ordered(a, b) -> bool | None:
    if is_numeric(a) and is_numeric(b):
        return a < b
    if isinstance(a, str) and isinstance(b, str):
        return a < b
    return None


def check_ordered_fields(ds: TabularDataset, p: FieldPairParams, ctx=None) -> list[Violation]:
    missing = _missing_columns(ds, (p.a, p.b))
    if missing:
        return missing
    ia, ib = ds.column_index(p.a), ds.column_index(p.b)
    out = []
    for r, row in enumerate(ds.rows):
        a, b = row[ia], row[ib]
        if a is None or b is None:
            continue
        ok = _ordered(a, b)
        if ok is None:
            out.append(Violation(Locus.of_row(r), f"{p.a} and {p.b} are not comparable", f"{render_cell(a)},{render_cell(b)}", ds.source_path))
        elif not ok:
            out.append(Violation(Locus.of_row(r), f"{p.a} must be < {p.b}", f"{render_cell(a)},{render_cell(b)}", ds.source_path))
    return out


def row_key(row, idxs: Sequence[int], unordered: bool):
    key = tuple(cell_key(row[i]) for i in idxs)
    if unordered:
        key = tuple(sorted(key, key=lambda k: (k is None, k or "")))
    return key


def check_unique_rows(ds: TabularDataset, p: UniqueRowsParams, ctx=None) -> list[Violation]:
    missing = _missing_columns(ds, p.columns)
    if missing:
        return missing
    idxs = [ds.column_index(c) for c in p.columns]
    first: dict[tuple, int] = {}
    out = []
    for r, row in enumerate(ds.rows):
        key = row_key(row, idxs, p.unordered)
        if key in first:
            out.append(Violation(
                Locus.of_row(r), f"duplicate of row {first[key]}",
                ",".join(render_cell(row[i]) for i in idxs), ds.source_path,
            ))
        else:
            first[key] = r
    return out


def check_required_columns(ds: TabularDataset, p: RequiredColumnsParams, ctx=None) -> list[Violation]:
    out = _missing_columns(ds, p.columns)
    if p.nullable:
        return out
    for column in p.columns:
        if not ds.has_column(column):
            continue
        for r, value in enumerate(ds.column(column)):
            if value is None:
                out.append(Violation(Locus.cell(r, column), "required value missing", None, ds.source_path))
    return out


def check_same_as_first(ds: TabularDataset, p: SameAsFirstParams, ctx=None) -> list[Violation]:
    cols = [p.column] + ([p.when.column] if p.when else [])
    missing = _missing_columns(ds, cols)
    if missing or ds.row_count == 0:
        return missing
    idx = ds.column_index(p.column)
    widx = ds.column_index(p.when.column) if p.when else None
    expected = ds.rows[0][idx]
    out = []
    for r, row in enumerate(ds.rows):
        if widx is not None and not p.when.holds(row[widx]):
            continue
        if cell_key(row[idx]) != cell_key(expected):
            out.append(Violation(
                Locus.cell(r, p.column), f"must equal first value {render_cell(expected)!r}",
                None if row[idx] is None else render_cell(row[idx]), ds.source_path,
            ))
    return out


def check_row_count(ds: TabularDataset, p: RowCountParams, ctx=None) -> list[Violation]:
    n = ds.row_count
    if p.min_rows is not None and n < p.min_rows:
        return [Violation(Locus.whole_file(), f"{n} rows, expected at least {p.min_rows}", str(n), ds.source_path)]
    if p.max_rows is not None and n > p.max_rows:
        return [Violation(Locus.whole_file(), f"{n} rows, expected at most {p.max_rows}", str(n), ds.source_path)]
    return []
