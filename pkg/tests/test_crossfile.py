from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from simguard.crossfile import (
    ConnectivityParams,
    ForeignKeyParams,
    Gate,
    TemporalWindowParams,
    check_connectivity,
    check_foreign_key,
    check_temporal_window,
    gate_holds,
)
from simguard.errors import ConfigBindingMissing, SiblingFileMissing, SpecError
from simguard.model import DocumentTree, EvaluationContext, TabularDataset, parse_tabular_text


def table(text: str, name: str = "t.csv") -> TabularDataset:
    return parse_tabular_text(text.strip() + "\n", name)


LOCATIONS = table("name,country\nA,SSD\nB,SSD\nC,ETH", "locations.csv")


def ctx_with(**siblings) -> EvaluationContext:
    return EvaluationContext(sibling_files=siblings)


names = st.lists(st.sampled_from("ABCDEFG"), max_size=15)


@given(names, st.sets(st.sampled_from("ABCDEFG")))
def test_foreign_key_oracle(values, domain):
    ds = TabularDataset("r.csv", ("n",), tuple((v,) for v in values))
    other = TabularDataset("o.csv", ("k",), tuple((d,) for d in sorted(domain)))
    p = ForeignKeyParams.from_dict({"column": "n", "other_file": "o", "other_column": "k"})
    got = [v.locus.row for v in check_foreign_key(ds, p, ctx_with(o=other))]
    assert got == [r for r, v in enumerate(values) if v not in domain]


def test_foreign_key_conditional_and_union():
    closures = table("closure_type,name1,name2\ncountry,SSD,UGA\nlocation,X,Y\ncountry,ETH,SSD")
    p = ForeignKeyParams.from_dict({
        "columns": ["name1", "name2"], "other_file": "locations", "other_columns": ["country"],
        "when": {"column": "closure_type", "value": "country"},
    })
    got = check_foreign_key(closures, p, ctx_with(locations=LOCATIONS))
    assert [(v.locus.row, v.locus.column, v.offending) for v in got] == [(0, "name2", "UGA")]


def test_foreign_key_missing_columns():
    p = ForeignKeyParams.from_dict({"column": "n", "other_file": "locations", "other_column": "nope"})
    with pytest.raises(SiblingFileMissing):
        check_foreign_key(table("n\nA"), p, ctx_with(locations=LOCATIONS))
    p = ForeignKeyParams.from_dict({"column": "zz", "other_file": "locations", "other_column": "name"})
    (v,) = check_foreign_key(table("n\nA"), p, ctx_with(locations=LOCATIONS))
    assert v.locus.kind == "file"


def test_connectivity_flags_isolated_nodes_as_warnings():
    routes = table("name1,name2\nA,B", "routes.csv")
    p = ConnectivityParams.from_dict({
        "node_file": "locations", "node_column": "name", "edge_file": "routes", "endpoint_columns": ["name1", "name2"],
    })
    (v,) = check_connectivity(ctx_with(locations=LOCATIONS, routes=routes), p)
    assert (v.locus.row, v.offending, v.severity) == (2, "C", "warning")


CONFIG = DocumentTree("c.yml", {"flood": {"on": True, "max": 4, "mode": "strict"}, "off": False, "start": 10})


@pytest.mark.parametrize(
    "raw, holds",
    [
        ({"path": "flood/on", "op": "truthy"}, True),
        ({"path": "off", "op": "truthy"}, False),
        ({"path": "flood/mode", "value": "strict"}, True),
        ({"path": "flood/max", "op": "neq", "value": 4}, False),
        ({"path": "flood/max", "op": "in", "values": [3, 4.0]}, True),
        ({"path": "flood/nope", "op": "exists"}, False),
        ({"path": "flood/nope", "op": "absent"}, True),
        ({"path": "flood/on", "value": 1}, False),
    ],
)
def test_gate(raw, holds):
    assert gate_holds(EvaluationContext(config=CONFIG), Gate.from_dict(raw)) is holds


def test_gate_on_missing_key_is_configuration_error():
    with pytest.raises(ConfigBindingMissing):
        gate_holds(EvaluationContext(config=CONFIG), Gate.from_dict({"path": "x/y", "op": "truthy"}))


@pytest.mark.parametrize("raw", [{"path": "", "op": "truthy"}, {"path": "a", "op": "gt"}, {"path": "a"}])
def test_bad_gate(raw):
    with pytest.raises(SpecError):
        Gate.from_dict(raw)


def test_temporal_window():
    ds = table("day,x\n9,1\n10,1\n,1\nabc,1")
    p = TemporalWindowParams.from_dict({"column": "day", "not_before": {"config": "start"}})
    ctx = EvaluationContext(config=CONFIG, bindings={"start": "start"})
    assert [v.locus.row for v in check_temporal_window(ds, p, ctx)] == [0, 3]


def test_temporal_window_needs_config_binding():
    with pytest.raises(SpecError):
        TemporalWindowParams.from_dict({"column": "day", "not_before": 3})
