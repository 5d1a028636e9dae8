from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simguard.errors import ProviderError, SampleTooLarge
from simguard.inference import infer_inputs
from simguard.model import ConstraintDecl, TabularDataset
from simguard.runner import MemoryInputs
from simguard.specfile import parse_guard_spec
from simguard.suggest import (
    HttpProvider,
    MockProvider,
    SuggestionRequest,
    build_prompt,
    compare_pair,
    compare_with_spec,
    extract_samples,
    make_provider,
    parse_response,
    run_suggestion,
    sample_file,
    samples_from_inputs,
)
from simguard.tabular import ColumnConstraintParams, check_column

ROUTES = "name1,name2,distance,forced_redirection\n" + "".join(f"L{i},L{i + 1},{10 + i}.5,{i % 3}\n" for i in range(40))
FILES = {"routes.csv": ROUTES, "settings.yml": "period: 10\nflood: {max: 4}\n"}


def request(**kw):
    base = {"file_samples": samples_from_inputs(MemoryInputs(FILES))}
    base.update(kw)
    return SuggestionRequest(**base)


def test_prompt_is_deterministic_and_carries_samples():
    req = request(context_docs="Agents move between locations.", sample_rows=5)
    prompt = build_prompt(req)
    assert prompt == build_prompt(req)
    assert "```sample path=routes.csv rows=5 of 40" in prompt
    samples = dict(extract_samples(prompt))
    assert samples["routes.csv"].count("\n") == 6
    assert samples["settings.yml"] == FILES["settings.yml"]
    assert "Agents move between locations." in prompt
    assert "- foreign_key:" in prompt


def test_prompt_shrinks_to_fit_then_gives_up():
    req = request(sample_rows=40)
    full = build_prompt(req)
    smaller = build_prompt(req, limit=len(full) - 1)
    assert len(smaller) < len(full)
    with pytest.raises(SampleTooLarge):
        build_prompt(req, limit=100)


@pytest.mark.parametrize(
    "kw",
    [dict(task="guess"), dict(task="generate"), dict(file_samples=()), dict(sample_rows=0)],
)
def test_bad_requests(kw):
    with pytest.raises(ValueError):
        request(**kw)


def test_parse_response_ignores_prose_and_collects_diagnostics():
    text = """Here you go.

```guard-constraint
id: a
kind: column
on: routes.csv
params: {column: distance, gt: 0}
```

```guard-constraint
- {id: b, kind: wormhole, on: routes.csv}
- {id: c, kind: unique_rows, on: routes.csv, params: {columns: [name1, name2]}}
```

```guard-constraint
id: [unclosed
```
"""
    parsed = parse_response(text)
    assert [d.id for d in parsed.decls] == ["a", "c"]
    assert len(parsed.diagnostics) == 2


def test_mock_infer_matches_inference_engine():
    ins = MemoryInputs(FILES)
    reference, _ = infer_inputs(ins)
    outcome = run_suggestion(request(existing_spec=reference, sample_rows=100), MockProvider())
    assert outcome.labels() and set(outcome.labels()) == {"exact_match"}


@pytest.mark.parametrize(
    "text, column, params",
    [
        ("Route distances must be positive numbers", "distance", {"gt": 0, "type": "real"}),
        ("Forced redirection must be non-negative", "forced_redirection", {"ge": 0, "type": "real"}),
        ("Distances must not be empty", "distance", {"nullable": False}),
    ],
)
def test_mock_describe(text, column, params):
    outcome = run_suggestion(request(task="generate", description=text), MockProvider())
    (decl,) = outcome.suggested
    assert decl.kind == "column" and decl.on == "routes.csv"
    assert decl.raw_params == {"column": column, **params}


def test_mock_describe_without_samples():
    req = SuggestionRequest(task="generate", description="Route distances must be positive numbers")
    (decl,) = run_suggestion(req, MockProvider()).suggested
    assert (decl.on, decl.params.column, decl.params.gt) == ("routes.csv", "distance", 0)


def test_mock_describe_summation():
    req = SuggestionRequest(task="generate", description="Entries in each row must add up to 1")
    (decl,) = run_suggestion(req, MockProvider()).suggested
    assert decl.kind == "summation" and decl.params.axis == "per_row" and decl.params.target == 1


# ---------------------------------------------------------------------------
# comparison


def col(**raw) -> ConstraintDecl:
    raw = {"column": "v", **raw}
    return ConstraintDecl("x", "t.csv", "column", ColumnConstraintParams.from_dict(raw), raw)


@pytest.mark.parametrize(
    "suggested, existing, label",
    [
        (dict(type="real", gt=0), dict(type="real", gt=0), "exact_match"),
        (dict(type="real", ge=1), dict(type="real", gt=0), "improved"),
        (dict(type="real"), dict(type="real", gt=0), "partial"),
        (dict(type="real", ge=1, le=99), dict(type="real", ge=0, le=50), "requires_adjustment"),
        (dict(isin=["a", "b"]), dict(isin=["a", "b", "c"]), "partial"),
        (dict(isin=["a", "b", "c"]), dict(isin=["a", "b"]), "improved"),
        (dict(isin=["a", "d"]), dict(isin=["a", "b"]), "requires_adjustment"),
        (dict(type="integer", nullable=False), dict(type="real", nullable=True), "improved"),
    ],
)
def test_compare_cases(suggested, existing, label):
    assert compare_pair(col(**suggested), col(**existing)) == label


def test_compare_with_spec_labels_every_side():
    existing = parse_guard_spec("""
name: e
files: {routes: routes.csv}
constraints:
  - {id: d, kind: column, on: routes, params: {column: distance, type: real, gt: 0}}
  - {id: f, kind: column, on: routes, params: {column: forced_redirection, isin: [0, 1, 2]}}
  - {id: u, kind: unique_rows, on: routes, params: {columns: [name1, name2]}}
""")
    suggested = [
        ConstraintDecl("s1", "routes.csv", "column", ColumnConstraintParams.from_dict({"column": "distance", "gt": 0, "type": "real"})),
        ConstraintDecl("s2", "routes.csv", "conditional",
                       parse_guard_spec("constraints: [{id: c, kind: conditional, on: r, params: "
                                        "{when: {column: name1, value: A}, then: {column: forced_redirection, ge: 0}}}]")
                       .constraints[0].params),
        ConstraintDecl("s3", "routes.csv", "column", ColumnConstraintParams.from_dict({"column": "name1", "type": "text"})),
    ]
    out = compare_with_spec(suggested, existing)
    assert [(c.suggestion.id if c.suggestion else None, c.label, c.counterpart) for c in out.comparison] == [
        ("s1", "exact_match", "d"),
        ("s2", "requires_adjustment", "f"),
        ("s3", "requires_adjustment", "u"),
    ]
    out = compare_with_spec(suggested[:1], existing)
    assert out.labels() == ["exact_match", "not_inferred", "not_inferred"]


UNIVERSE = (None, -3, -1, 0, 1, 2, 3, 0.5, -0.5, 2.5, "x", True)

column_params = st.fixed_dictionaries(
    {},
    optional={
        "type": st.sampled_from(["integer", "real"]),
        "nullable": st.booleans(),
        "ge": st.integers(-3, 3),
        "gt": st.integers(-3, 3),
        "le": st.integers(-3, 3),
        "lt": st.integers(-3, 3),
    },
).filter(bool)


def admitted(decl) -> frozenset:
    ds = TabularDataset("t.csv", ("v",), tuple((u,) for u in UNIVERSE))
    bad = {v.locus.row for v in check_column(ds, decl.params)}
    return frozenset(i for i in range(len(UNIVERSE)) if i not in bad)


@settings(max_examples=300)
@given(column_params, column_params)
def test_compare_agrees_with_admitted_values(a, b):
    s, e = col(**a), col(**b)
    label = compare_pair(s, e)
    mirror = compare_pair(e, s)
    assert {label, mirror} in ({"exact_match"}, {"improved", "partial"}, {"requires_adjustment"})
    if label == "improved":
        assert admitted(s) <= admitted(e)
    elif label == "partial":
        assert admitted(s) >= admitted(e)
    elif label == "exact_match":
        assert admitted(s) == admitted(e)


# ---------------------------------------------------------------------------
# http provider


class _Handler(BaseHTTPRequestHandler):
    replies: list = []
    seen: list = []

    def do_POST(self):  # noqa: N802
        body = self.rfile.read(int(self.headers["Content-Length"]))
        type(self).seen.append((json.loads(body), self.headers.get("Authorization")))
        reply = type(self).replies.pop(0)
        self.send_response(200)
        self.end_headers()
        self.wfile.write(reply.encode())

    def log_message(self, *args):
        pass


@pytest.fixture()
def server():
    srv = HTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{srv.server_port}/"
    srv.shutdown()


def test_http_provider_round_trip(server):
    block = "```guard-constraint\nid: a\nkind: column\non: routes.csv\nparams: {column: distance, gt: 0}\n```\n"
    _Handler.replies[:] = [json.dumps({"text": block}), block]
    _Handler.seen[:] = []
    provider = HttpProvider(server, auth="Bearer t0k")
    for _ in range(2):
        outcome = run_suggestion(request(), provider, timeout=5)
        assert [d.id for d in outcome.suggested] == ["a"]
    prompt, auth = _Handler.seen[0]
    assert auth == "Bearer t0k" and "routes.csv" in prompt["prompt"]


def test_http_provider_errors():
    with pytest.raises(ProviderError):
        make_provider("http", env={})
    with pytest.raises(ProviderError):
        HttpProvider("http://127.0.0.1:9/").complete("x", timeout=1)
    with pytest.raises(ProviderError):
        make_provider("oracle")


def test_sample_rows_counted():
    assert sample_file("a.csv", "h\n1\n\n2\n").total_rows == 2
    assert sample_file("a.yml", "a: 1\n").total_rows is None
