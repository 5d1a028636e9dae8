from __future__ import annotations

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from simguard.errors import DocumentSyntaxError, DuplicateKey, FileMissing, ParseError
from simguard.model import (
    MISSING,
    DocumentTree,
    LoadOptions,
    Locus,
    TabularDataset,
    cell_key,
    dump_tabular,
    join_path,
    load_document,
    load_tabular,
    locus_resolves,
    normalize_header,
    parse_cell,
    parse_document_text,
    parse_tabular_text,
    resolve_path,
    split_path,
)

words = st.text(alphabet="abcdefghijklmnopqrstuvwxyz_", min_size=1, max_size=8)
cells = st.one_of(
    st.none(),
    st.integers(-10**12, 10**12),
    st.floats(allow_nan=False, allow_infinity=False, width=64),
    st.booleans(),
    words.filter(lambda w: w.lower() not in ("true", "false")),
)


@st.composite
def datasets(draw):
    names = draw(st.lists(words, min_size=1, max_size=5, unique=True))
    rows = draw(st.lists(st.tuples(*[cells] * len(names)), max_size=8))
    return TabularDataset("t.csv", tuple(names), tuple(rows))


def same_cell(a, b):
    if isinstance(a, float) and isinstance(b, float):
        return a == b or (math.isnan(a) and math.isnan(b))
    return type(a) is type(b) and a == b


@given(datasets())
def test_tabular_round_trip(ds):
    back = parse_tabular_text(dump_tabular(ds), "t.csv")
    assert back.column_names == ds.column_names
    assert len(back.rows) == len(ds.rows)
    for got, want in zip(back.rows, ds.rows):
        for a, b in zip(got, want):
            # integral floats print as e.g. 2.0 and stay real
            assert same_cell(a, b), (a, b)


@given(datasets())
def test_tsv_round_trip(ds):
    opts = LoadOptions(delimiter="\t")
    back = parse_tabular_text(dump_tabular(ds, opts), "t.tsv", opts)
    assert len(back.rows) == len(ds.rows)
    assert all(same_cell(a, b) for r, s in zip(back.rows, ds.rows) for a, b in zip(r, s))


@pytest.mark.parametrize(
    "token, value",
    [
        ("", None),
        ("  ", None),
        ("7", 7),
        ("-3", -3),
        ("2.5", 2.5),
        ("1e3", 1000.0),
        (".5", 0.5),
        ("true", True),
        ("FALSE", False),
        ("yes", "yes"),
        ("abc", "abc"),
        ("2023-01-01", "2023-01-01"),
    ],
)
def test_parse_cell(token, value):
    got = parse_cell(token)
    assert type(got) is type(value) and got == value


@pytest.mark.parametrize("token", ["nan", "inf", "-Infinity", "1e999"])
def test_non_finite_rejected(token):
    with pytest.raises(ValueError):
        parse_cell(token)


def test_non_finite_in_file_is_parse_error():
    with pytest.raises(ParseError) as exc:
        parse_tabular_text("a\n1\nnan\n", "x.csv")
    assert exc.value.line == 3


def test_ragged_row():
    with pytest.raises(ParseError) as exc:
        parse_tabular_text("a,b\n1,2\n3\n")
    assert exc.value.line == 3


def test_duplicate_header():
    with pytest.raises(ParseError):
        parse_tabular_text("a,a\n1,2\n")


@pytest.mark.parametrize("raw, name", [('#"name"', "name"), ("#name", "name"), (" x ", "x"), ("'q'", "q")])
def test_normalize_header(raw, name):
    assert normalize_header(raw) == name


def test_cell_key_unifies_numbers():
    assert cell_key(1) == cell_key(1.0) == "1"
    assert cell_key(" a ") == "a"
    assert cell_key(True) != cell_key(1)


def test_load_missing_file(tmp_path):
    with pytest.raises(FileMissing):
        load_tabular(tmp_path / "nope.csv")
    with pytest.raises(FileMissing):
        load_document(tmp_path / "nope.yml")


def test_load_bom_and_bad_utf8(tmp_path):
    good = tmp_path / "a.csv"
    good.write_bytes(b"\xef\xbb\xbfa,b\n1,2\n")
    assert load_tabular(good).column_names == ("a", "b")
    bad = tmp_path / "b.csv"
    bad.write_bytes(b"a\n1\n\xff\n")
    with pytest.raises(ParseError) as exc:
        load_tabular(bad)
    assert exc.value.line == 3


def test_strict_yaml_scalars():
    doc = parse_document_text("on: yes\nwhen: 2023-01-01\nflag: true\nn: 3\nx: 0.5\n")
    assert doc.root == {"on": "yes", "when": "2023-01-01", "flag": True, "n": 3, "x": 0.5}


def test_duplicate_key_path():
    with pytest.raises(DuplicateKey) as exc:
        parse_document_text("a:\n  b: 1\n  b: 2\n", "d.yml")
    assert exc.value.path == "a/b"
    assert exc.value.line == 3


@pytest.mark.parametrize("text", ["x: .nan\n", "x: [1, .inf]\n", "a: [1, 2\n", "a: b: c\n"])
def test_document_syntax_errors(text):
    with pytest.raises(DocumentSyntaxError):
        parse_document_text(text)


segments = st.lists(st.text(min_size=1, max_size=6), min_size=1, max_size=4)


@given(segments)
def test_path_escaping_round_trip(parts):
    assert split_path(join_path(parts)) == parts


@given(st.dictionaries(words, st.dictionaries(words, st.integers(), max_size=3), max_size=3))
def test_resolve_path_oracle(tree):
    for k, sub in tree.items():
        assert resolve_path(tree, k) == sub
        for k2, v in sub.items():
            assert resolve_path(tree, f"{k}/{k2}") == v
    assert resolve_path(tree, "zz_missing_zz") is MISSING


def test_locus_resolution():
    ds = parse_tabular_text("a,b\n1,2\n")
    assert locus_resolves(ds, Locus.cell(0, "a"))
    assert not locus_resolves(ds, Locus.cell(1, "a"))
    assert not locus_resolves(ds, Locus.of_column("c"))
    assert locus_resolves(ds, Locus.whole_file())
    doc = DocumentTree("d.yml", {"x": [1, {"y": 2}]})
    assert locus_resolves(doc, Locus.at_path("x/1/y"))
    assert not locus_resolves(doc, Locus.at_path("x/2"))
