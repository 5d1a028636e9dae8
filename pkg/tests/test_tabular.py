from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simguard.errors import SelectorEmpty, SpecError
from simguard.model import DocumentTree, EvaluationContext, ReferenceTable, TabularDataset, parse_tabular_text
from simguard.tabular import (
    ColumnConstraintParams,
    ConditionalParams,
    DynamicColumnsParams,
    FieldPairParams,
    RequiredColumnsParams,
    RowCountParams,
    SameAsFirstParams,
    StepwiseParams,
    SummationParams,
    UniqueRowsParams,
    check_column,
    check_conditional,
    check_distinct_fields,
    check_dynamic_columns,
    check_ordered_fields,
    check_required_columns,
    check_row_count,
    check_same_as_first,
    check_stepwise,
    check_summation,
    check_unique_rows,
)


def table(text: str) -> TabularDataset:
    return parse_tabular_text(text.strip() + "\n", "t.csv")


def cells(violations):
    return [(v.locus.kind, v.locus.row, v.locus.column) for v in violations]


def rows_of(violations):
    return [v.locus.row for v in violations]


# ---------------------------------------------------------------------------
# column checks against a brute-force oracle

ints = st.lists(st.one_of(st.none(), st.integers(-50, 50)), max_size=30)


def column_oracle(values, lo, hi, nullable, unique, members):
    bad = []
    seen = set()
    for r, v in enumerate(values):
        if v is None:
            if not nullable:
                bad.append(r)
            continue
        fails = v < lo or v > hi or (members is not None and v not in members)
        if not fails and unique and v in seen:
            fails = True
        if unique:
            seen.add(v)
        if fails:
            bad.append(r)
    return bad


@settings(max_examples=150)
@given(
    ints,
    st.integers(-50, 50),
    st.integers(0, 40),
    st.booleans(),
    st.booleans(),
    st.one_of(st.none(), st.sets(st.integers(-50, 50), min_size=1, max_size=10)),
)
def test_column_matches_oracle(values, lo, width, nullable, unique, members):
    hi = lo + width
    ds = TabularDataset("t.csv", ("v",), tuple((v,) for v in values))
    raw = {"column": "v", "type": "integer", "ge": lo, "le": hi, "nullable": nullable, "unique": unique}
    if members is not None:
        raw["isin"] = sorted(members)
    got = rows_of(check_column(ds, ColumnConstraintParams.from_dict(raw)))
    assert got == column_oracle(values, lo, hi, nullable, unique, members)


@pytest.mark.parametrize(
    "raw, rows",
    [
        ({"type": "integer"}, [2, 3]),
        ({"type": "real"}, [3]),
        ({"type": "text"}, []),
        ({"gt": 1}, [0, 3]),
        ({"lt": 2.5}, [2, 3]),
        ({"regex": r"\d+"}, [2, 3]),
        ({"nullable": True, "type": "real", "coerce": True}, [3]),
    ],
)
def test_column_cases(raw, rows):
    ds = table("v\n1\n2\n2.5\nabc")
    assert rows_of(check_column(ds, ColumnConstraintParams.from_dict({"column": "v", **raw}))) == rows


def test_coerce_reads_quoted_numbers():
    ds = TabularDataset("t.csv", ("v",), (("3",), ("x",)))
    p = ColumnConstraintParams.from_dict({"column": "v", "type": "integer", "coerce": True})
    assert rows_of(check_column(ds, p)) == [1]


def test_integral_real_counts_as_integer_only_with_coerce():
    ds = table("v\n2.0")
    assert rows_of(check_column(ds, ColumnConstraintParams.from_dict({"column": "v", "type": "integer"}))) == [0]
    assert check_column(ds, ColumnConstraintParams.from_dict({"column": "v", "type": "integer", "coerce": True})) == []


def test_missing_column_is_a_file_locus():
    (v,) = check_column(table("a\n1"), ColumnConstraintParams.from_dict({"column": "b", "type": "integer"}))
    assert v.locus.kind == "file" and "absent" in v.message


@pytest.mark.parametrize(
    "raw",
    [
        {"column": "v"},
        {"column": "v", "type": "decimal"},
        {"column": "v", "type": "text", "ge": 0},
        {"column": "v", "isin": []},
        {"column": "v", "regex": "("},
        {"column": "v", "ge": "zero"},
        {"column": "v", "colour": "red"},
    ],
)
def test_bad_column_params(raw):
    with pytest.raises(SpecError):
        ColumnConstraintParams.from_dict(raw)


def test_isin_from_reference():
    ds = table("v\na\nb\nc")
    p = ColumnConstraintParams.from_dict({"column": "v", "isin": {"reference": "ok"}})
    ctx = EvaluationContext(references={"ok": ReferenceTable("ok", frozenset({"a", "c"}))})
    assert rows_of(check_column(ds, p, ctx)) == [1]


# ---------------------------------------------------------------------------
# conditional


def test_conditional_only_applies_where_predicate_holds():
    ds = table("kind,pop\ncamp,0\ntown,5\nmarker,0\ncamp,\n")
    p = ConditionalParams.from_dict({
        "when": {"column": "kind", "op": "in", "values": ["camp", "town"]},
        "then": {"column": "pop", "gt": 0},
    })
    assert cells(check_conditional(ds, p)) == [("cell", 0, "pop"), ("cell", 3, "pop")]


def test_conditional_predicate_then():
    ds = table("kind,date\nconflict,\nconflict,3\ntown,\n")
    p = ConditionalParams.from_dict({
        "when": {"column": "kind", "value": "conflict"},
        "then": {"column": "date", "op": "notnull"},
    })
    assert rows_of(check_conditional(ds, p)) == [0]


@given(st.lists(st.tuples(st.sampled_from("ab"), st.integers(-5, 5)), max_size=25))
def test_conditional_oracle(rows):
    ds = TabularDataset("t.csv", ("k", "v"), tuple(rows))
    p = ConditionalParams.from_dict({"when": {"column": "k", "value": "a"}, "then": {"column": "v", "ge": 0}})
    assert rows_of(check_conditional(ds, p)) == [r for r, (k, v) in enumerate(rows) if k == "a" and v < 0]


def test_unique_inside_then_rejected():
    with pytest.raises(SpecError):
        ConditionalParams.from_dict({"when": {"column": "k", "value": 1}, "then": {"column": "v", "unique": True}})


# ---------------------------------------------------------------------------
# stepwise


@settings(max_examples=120)
@given(st.lists(st.integers(-3, 14), max_size=20), st.booleans())
def test_stepwise_oracle(values, contiguous):
    ds = TabularDataset("t.csv", ("d",), tuple((v,) for v in values))
    p = StepwiseParams.from_dict({"column": "d", "min": 0, "max": 10, "step": 2, "require_contiguous": contiguous})
    got = check_stepwise(ds, p)
    want_cells = [r for r, v in enumerate(values) if not (0 <= v <= 10 and v % 2 == 0)]
    assert [v.locus.row for v in got if v.locus.kind == "cell"] == want_cells
    column_msgs = [v.offending for v in got if v.locus.kind == "column"]
    if not contiguous:
        assert column_msgs == []
    else:
        good = [v for v in values if 0 <= v <= 10 and v % 2 == 0]
        want = [str(x) for x in range(0, 11, 2) if good.count(x) != 1]
        assert column_msgs == want


def test_stepwise_with_config_max():
    ds = table("day\n0\n1\n2\n3")
    p = StepwiseParams.from_dict({"column": "day", "min": 0, "max": {"config": "period"}})
    ctx = EvaluationContext(config=DocumentTree("c.yml", {"sim": {"period": 2}}), bindings={"period": "sim/period"})
    assert rows_of(check_stepwise(ds, p, ctx)) == [3]


def test_stepwise_fractional_step_is_exact():
    ds = table("t\n0\n0.1\n0.2\n0.3")
    p = StepwiseParams.from_dict({"column": "t", "min": 0, "max": 0.3, "step": 0.1, "require_contiguous": True})
    assert check_stepwise(ds, p) == []


@pytest.mark.parametrize("raw", [{"column": "d", "min": 5, "max": 1}, {"column": "d", "min": 0, "max": 1, "step": 0}])
def test_stepwise_bad_params(raw):
    with pytest.raises(SpecError):
        StepwiseParams.from_dict(raw)


# ---------------------------------------------------------------------------
# dynamic columns


def test_dynamic_all_but_first():
    ds = table("day,z1,z2\n0,1,9\n1,2,3")
    p = DynamicColumnsParams.from_dict({"template": {"type": "integer", "le": 4}})
    assert cells(check_dynamic_columns(ds, p)) == [("cell", 0, "z2")]


def test_dynamic_regex_selector_and_empty():
    ds = table("day,z1,other\n0,1,9")
    p = DynamicColumnsParams.from_dict({"selector": {"regex": r"z\d+"}, "template": {"le": 4}})
    assert check_dynamic_columns(ds, p) == []
    empty = DynamicColumnsParams.from_dict({"selector": {"regex": "q+"}, "template": {"le": 4}})
    with pytest.raises(SelectorEmpty):
        check_dynamic_columns(ds, empty)


# ---------------------------------------------------------------------------
# summation


def per_row(total: str) -> TabularDataset:
    return parse_tabular_text(f"a,b\n{total},0\n", "t.csv")


@pytest.mark.parametrize("total, ok", [
    ("0.99", True), ("1.01", True), ("1", True), ("0.989", False), ("1.011", False),
    ("0.9899999", False), ("1.0100001", False),
])
def test_summation_band_edges(total, ok):
    p = SummationParams.from_dict({"axis": "per_row", "columns": "all", "tolerance": 0.01})
    assert (check_summation(per_row(total), p) == []) is ok


decimals = st.integers(0, 1000).map(lambda n: f"{n / 1000:.3f}")


@settings(max_examples=200)
@given(st.lists(decimals, min_size=1, max_size=5))
def test_summation_exact_oracle(parts):
    header = ",".join(f"c{i}" for i in range(len(parts)))
    ds = parse_tabular_text(f"{header}\n{','.join(parts)}\n")
    p = SummationParams.from_dict({"axis": "per_row", "columns": "all", "tolerance": 0.01})
    total = sum(Fraction(x) for x in parts)
    want = Fraction(99, 100) <= total <= Fraction(101, 100)
    assert (check_summation(ds, p) == []) is want


def test_summation_per_column_and_nulls():
    ds = table("name,a,b,c\nx,0.5,0.5,\ny,0.5,0.6,1")
    p = SummationParams.from_dict({})
    assert cells(check_summation(ds, p)) == [("column", None, "b"), ("column", None, "c")]


def test_summation_target_from_reference():
    ds = table("name,a\nx,2\ny,2")
    p = SummationParams.from_dict({"target": {"reference": "t", "key": "total"}, "tolerance": 0})
    ctx = EvaluationContext(references={"t": ReferenceTable("t", {"total": 4})})
    assert check_summation(ds, p, ctx) == []


# ---------------------------------------------------------------------------
# multi-column


def test_distinct_and_ordered_fields():
    ds = table("a,b\n1,2\n3,3\n5,4\nx,1")
    assert rows_of(check_distinct_fields(ds, FieldPairParams.from_dict({"a": "a", "b": "b"}))) == [1]
    assert rows_of(check_ordered_fields(ds, FieldPairParams.from_dict({"a": "a", "b": "b"}))) == [1, 2, 3]


@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), max_size=20), st.booleans())
def test_unique_rows_oracle(rows, unordered):
    ds = TabularDataset("t.csv", ("a", "b"), tuple(rows))
    got = rows_of(check_unique_rows(ds, UniqueRowsParams.from_dict({"columns": ["a", "b"], "unordered": unordered})))
    seen, want = set(), []
    for r, (a, b) in enumerate(rows):
        key = tuple(sorted((a, b))) if unordered else (a, b)
        if key in seen:
            want.append(r)
        seen.add(key)
    assert got == want


def test_required_columns():
    ds = table("a,b\n1,\n2,3")
    assert cells(check_required_columns(ds, RequiredColumnsParams.from_dict({"columns": ["a", "b", "c"]}))) == [
        ("file", None, None), ("cell", 0, "b"),
    ]
    assert len(check_required_columns(ds, RequiredColumnsParams.from_dict({"columns": ["b"], "nullable": True}))) == 0


def test_same_as_first():
    ds = table("kind,country\nconflict,A\ntown,B\nconflict,A\nconflict,C")
    p = SameAsFirstParams.from_dict({"column": "country", "when": {"column": "kind", "value": "conflict"}})
    assert rows_of(check_same_as_first(ds, p)) == [3]


@pytest.mark.parametrize("raw, n, bad", [
    ({"min_rows": 2}, 1, True), ({"min_rows": 1}, 1, False), ({"max_rows": 0}, 1, True),
])
def test_row_count(raw, n, bad):
    ds = TabularDataset("t.csv", ("a",), tuple((i,) for i in range(n)))
    assert bool(check_row_count(ds, RowCountParams.from_dict(raw))) is bad
