from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simguard.bench import (
    INJECTION_KINDS,
    CorpusParams,
    Injection,
    InjectionPlan,
    available_kinds,
    generate_corpus,
    inject_violations,
    injection_trial,
    linear_fit,
    parse_sweep,
    plan_injections,
    run_scaling,
    score,
)
from simguard.errors import LocusConflict
from simguard.runner import run_validation


def small(complexity=10, **kw):
    base = dict(complexity=complexity, columns=12, rows=100, files=2, seed=3)
    base.update(kw)
    return CorpusParams(**base)


@pytest.mark.parametrize("complexity", range(1, 11))
def test_clean_corpus_validates(complexity):
    corpus = generate_corpus(small(complexity))
    report = run_validation(corpus.spec(), corpus.inputs(), jobs=1, timestamp="")
    assert report.totals.failed == 0 and report.totals.evaluated > 0


def test_corpus_is_seeded():
    assert generate_corpus(small()).texts() == generate_corpus(small()).texts()
    assert generate_corpus(small()).texts() != generate_corpus(small(seed=4)).texts()


@pytest.mark.parametrize("raw", [dict(complexity=0), dict(columns=9), dict(rows=5000), dict(files=0)])
def test_params_validated(raw):
    with pytest.raises(ValueError):
        small(**raw)


@pytest.mark.parametrize("kind", INJECTION_KINDS)
def test_each_injection_kind_is_detected_alone(kind):
    p = small(9 if kind == "type" else 10)
    corpus = generate_corpus(p)
    plan = plan_injections(corpus, 3, kinds=[kind], seed=1)
    mutated, truth = inject_violations(corpus, plan)
    sc = score(truth, run_validation(mutated.spec(), mutated.inputs(), jobs=1, timestamp=""))
    assert (sc.expected, sc.reported, sc.matched) == (3, 3, 3)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 10), st.integers(0, 12), st.integers(0, 10**6))
def test_injection_oracle(complexity, count, seed):
    sc = injection_trial(small(complexity, seed=seed % 97), count, seed=seed)
    assert sc.precision == 1.0 and sc.recall == 1.0


def test_available_kinds_grow_with_complexity():
    assert available_kinds(small(1)) == ["type"]
    assert available_kinds(small(2)) == ["type", "range"]
    assert set(available_kinds(small(10))) == set(INJECTION_KINDS)


def test_conflicting_plan_rejected():
    corpus = generate_corpus(small())
    clash = InjectionPlan((Injection("data_000.csv", 4, "category", "enum"),) * 2)
    with pytest.raises(LocusConflict):
        inject_violations(corpus, clash)
    sums = InjectionPlan((Injection("data_000.csv", 4, "p1", "sum"), Injection("data_000.csv", 4, "p2", "sum")))
    with pytest.raises(LocusConflict):
        inject_violations(corpus, sums)


def test_linear_fit_recovers_line():
    a, b, r2 = linear_fit([1, 2, 3, 4], [5, 7, 9, 11])
    assert (round(a, 9), round(b, 9), round(r2, 9)) == (3, 2, 1)


@pytest.mark.parametrize(
    "text, dim, values",
    [
        ("files=1:100", "files", [1, 10, 25, 50, 100]),
        ("files=5:30", "files", [5, 10, 25, 30]),
        ("rows=100:300:100", "rows", [100, 200, 300]),
        ("cols=10,20", "columns", [10, 20]),
    ],
)
def test_parse_sweep(text, dim, values):
    assert parse_sweep(text) == (dim, values)


@pytest.mark.parametrize("text", ["files", "depth=1,2", "files=0:5", "files=a", "rows=1:2:0"])
def test_parse_sweep_rejects(text):
    with pytest.raises(ValueError):
        parse_sweep(text)


def test_small_scaling_run():
    res = run_scaling([1, 2, 3], "files", small(files=1), warmup=0, reps=2)
    assert [p.value for p in res.points] == [1, 2, 3]
    assert res.throughput_rows_per_s > 0 and len(res.to_rows()) == 4
