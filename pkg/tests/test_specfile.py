from __future__ import annotations

import pytest
from hypothesis import example, given
from hypothesis import strategies as st

from simguard.errors import SpecError
from simguard.model import parse_document_text
from simguard.specfile import dump_guard_spec, dump_yaml, load_guard_spec, parse_guard_spec
from exemplars import PACK_ROOT, PACKS


@pytest.mark.parametrize("pack", PACKS)
def test_dump_then_load_preserves_constraints(pack):
    path = PACK_ROOT / pack / "spec.yml"
    spec = load_guard_spec(path)
    header = {k: v for k, v in parse_document_text(path.read_text()).root.items() if k != "constraints"}
    back = parse_guard_spec(dump_guard_spec(header, spec.constraints))
    assert [(d.id, d.kind, d.on, d.params, d.severity) for d in back.constraints] == [
        (d.id, d.kind, d.on, d.params, d.severity) for d in spec.constraints
    ]


scalars = st.one_of(
    st.integers(-1000, 1000),
    st.floats(allow_nan=False, allow_infinity=False),
    st.booleans(),
    st.none(),
    st.text(max_size=8),
)
trees = st.recursive(
    scalars,
    lambda inner: st.one_of(st.lists(inner, max_size=3), st.dictionaries(st.text(max_size=5), inner, max_size=3)),
    max_leaves=12,
)


@given(trees)
@example({"\x85": None})
@example(["a\u2028b\u2029"])
def test_yaml_dump_load_round_trip(tree):
    assert parse_document_text(dump_yaml(tree)).root == tree


def test_on_key_stays_text():
    assert "'on'" not in dump_yaml({"on": "x"})
    assert parse_document_text(dump_yaml({"on": "yes"})).root == {"on": "yes"}


BASE = "name: s\nfiles: {t: t.csv}\n"


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("name: s\ncolour: red\n", "unknown top-level"),
        (BASE + "constraints:\n  - {id: a, kind: column, on: t, params: {column: x, type: integer}}\n"
                "  - {id: a, kind: column, on: t, params: {column: y, type: integer}}\n", "duplicate constraint id"),
        (BASE + "constraints:\n  - {id: a, kind: nope, on: t}\n", "unknown kind"),
        (BASE + "constraints:\n  - {id: a, kind: column, on: t, params: {column: x, ge: {config: hi}}}\n",
         "unknown config binding"),
        (BASE + "constraints:\n  - {id: a, kind: column, on: t, params: {column: x, isin: {reference: r}}}\n",
         "unknown reference"),
        (BASE + "constraints:\n  - {id: a, kind: column, on: t, pattern: 1.A.iv, params: {column: x, type: text}}\n",
         "unknown target"),
        (BASE + "constraints:\n  - {id: a, kind: column, on: t, tolerance: 0.1, params: {column: x, type: text}}\n",
         "tolerance only"),
        (BASE + "constraints:\n  - {id: a, kind: column, on: t, severity: fatal, params: {column: x, type: text}}\n",
         "severity"),
        (BASE + "bindings: {x: a/b}\n", "without a config"),
        (BASE + "constraints:\n  - {id: a, kind: config_gate, on: t, params: {gate: {path: a, op: truthy}, "
                "constraint: {kind: unique_rows, params: {columns: [a]}}}}\n", "needs a config"),
        ("a: 1\na: 2\n", "duplicate key"),
    ],
)
def test_spec_errors(text, fragment):
    with pytest.raises(SpecError) as exc:
        parse_guard_spec(text)
    assert fragment in str(exc.value)


def test_reference_file(tmp_path):
    (tmp_path / "cal.csv").write_text("month,days\n2023-01,31\n2023-02,28\n")
    (tmp_path / "spec.yml").write_text(
        "name: s\nreferences:\n  cal: {file: cal.csv, key: month, value: days}\n"
        "  months: {file: cal.csv, column: month}\n"
    )
    spec = load_guard_spec(tmp_path / "spec.yml")
    assert spec.references["cal"].get("2023-02") == 28
    assert "2023-01" in spec.references["months"].values()


def test_missing_spec_file(tmp_path):
    with pytest.raises(SpecError):
        load_guard_spec(tmp_path / "missing.yml")
