"""Synthetic corpora, violation injection with ground truth, and scaling runs.

Complexity levels (each level adds to the previous one):

    ====  =========================================================
    d     constraint kinds in the generated spec
    ====  =========================================================
    1     column types
    2     + numeric bounds
    3     + enumerations (isin)
    4     + uniqueness of the id column
    5     + regular expression on the code column
    6     + conditional rule (kind == a  =>  amount > 0)
    7     + stepwise day grid (replaces the day column's own checks)
    8     + per-row summation of the probability pair
    9     + cross-file foreign key into keys.csv
    10    + dynamic columns (replaces per-column checks on x0, x1, ...)
    ====  =========================================================
"""

from __future__ import annotations

import random
import statistics
import time
from dataclasses import dataclass

import numpy as np

from .errors import LocusConflict
from .model import ERROR
from .runner import MemoryInputs, run_validation
from .specfile import dump_yaml, parse_guard_spec

RANGES = {"complexity": (1, 10), "columns": (10, 100), "rows": (100, 1000), "files": (1, 100)}
FIXED_COLUMNS = ("id", "day", "category", "code", "kind", "amount", "p1", "p2", "ref")
CATEGORIES = ("alpha", "beta", "delta", "gamma", "omega")
KEYS_FILE = "keys.csv"
N_KEYS = 20
X_MAX = 1000
AMOUNT_MAX = 50

INJECTION_KINDS = ("type", "range", "enum", "duplicate", "regex", "conditional", "step", "sum", "fk")
_KIND_LEVEL = {
    "type": 1, "range": 2, "enum": 3, "duplicate": 4, "regex": 5,
    "conditional": 6, "step": 7, "sum": 8, "fk": 9,
}


@dataclass(frozen=True)
class CorpusParams:
    complexity: int = 5
    columns: int = 10
    rows: int = 100
    files: int = 1
    seed: int = 0

    def __post_init__(self):
        for name, (lo, hi) in RANGES.items():
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or not lo <= value <= hi:
                raise ValueError(f"{name} must be an integer in [{lo}, {hi}], got {value!r}")
        if not isinstance(self.seed, int):
            raise ValueError("seed must be an integer")


@dataclass
class Table:
    header: list[str]
    rows: list[list[str]]

    def render(self) -> str:
        return "\n".join([",".join(self.header)] + [",".join(r) for r in self.rows]) + "\n"

    def copy(self) -> Table:
        return Table(list(self.header), [list(r) for r in self.rows])


@dataclass
class Corpus:
    params: CorpusParams
    tables: dict[str, Table]
    spec_text: str

    @property
    def data_files(self) -> list[str]:
        return sorted(f for f in self.tables if f != KEYS_FILE)

    def texts(self) -> dict[str, str]:
        return {name: t.render() for name, t in sorted(self.tables.items())}

    def inputs(self) -> MemoryInputs:
        return MemoryInputs(self.texts())

    def spec(self):
        return parse_guard_spec(self.spec_text)

    def copy(self) -> Corpus:
        return Corpus(self.params, {k: t.copy() for k, t in self.tables.items()}, self.spec_text)

    def total_rows(self) -> int:
        return sum(len(self.tables[f].rows) for f in self.data_files)


def _x_columns(p: CorpusParams) -> list[str]:
    return [f"x{j}" for j in range(p.columns - len(FIXED_COLUMNS))]


def _spec_constraints(p: CorpusParams) -> list[dict]:
    d = p.complexity
    on = "data"
    out: list[dict] = []

    def col(name: str, **params):
        out.append({"id": f"col.{name}", "kind": "column", "on": on, "params": {"column": name, **params}})

    bounds = d >= 2
    col("id", type="integer", **({"unique": True} if d >= 4 else {}))
    if d < 7:
        col("day", type="integer", **({"ge": 0, "le": p.rows - 1} if bounds else {}))
    col("category", type="text", **({"isin": list(CATEGORIES)} if d >= 3 else {}))
    col("code", type="text", **({"regex": "[A-Z]{3}[0-9]{3}"} if d >= 5 else {}))
    col("kind", type="text", **({"isin": ["a", "b"]} if d >= 3 else {}))
    col("amount", type="real", **({"ge": -AMOUNT_MAX, "le": AMOUNT_MAX} if bounds else {}))
    col("p1", type="real", **({"ge": 0, "le": 1} if bounds else {}))
    col("p2", type="real", **({"ge": 0, "le": 1} if bounds else {}))
    col("ref", type="text")
    if d < 10:
        for x in _x_columns(p):
            col(x, type="real", **({"ge": 0, "le": X_MAX} if bounds else {}))
    if d >= 6:
        out.append({"id": "cond.amount", "kind": "conditional", "on": on, "params": {
            "when": {"column": "kind", "op": "eq", "value": "a"},
            "then": {"column": "amount", "gt": 0},
        }})
    if d >= 7:
        out.append({"id": "step.day", "kind": "stepwise", "on": on,
                    "params": {"column": "day", "min": 0, "max": p.rows - 1, "step": 1}})
    if d >= 8:
        out.append({"id": "sum.p", "kind": "summation", "on": on,
                    "params": {"axis": "per_row", "columns": ["p1", "p2"], "target": 1, "tolerance": 0.01}})
    if d >= 9:
        out.append({"id": "fk.ref", "kind": "foreign_key", "on": on,
                    "params": {"columns": ["ref"], "other_file": "keys", "other_columns": ["key"]}})
    if d >= 10:
        out.append({"id": "dyn.x", "kind": "dynamic_columns", "on": on, "params": {
            "selector": {"regex": "x[0-9]+"},
            "template": {"type": "real", "ge": 0, "le": X_MAX},
        }})
    return out


def _spec_text(p: CorpusParams) -> str:
    files = {"data": "data_*.csv"}
    if p.complexity >= 9:
        files["keys"] = KEYS_FILE
    doc = {"name": f"bench-d{p.complexity}", "files": files, "constraints": _spec_constraints(p)}
    return dump_yaml(doc, default_flow_style=None, width=120)


def _row(rng: random.Random, i: int, p: CorpusParams) -> list[str]:
    kind = rng.choice("ab")
    amount = rng.randint(1, AMOUNT_MAX * 100) / 100 if kind == "a" else rng.randint(-AMOUNT_MAX * 100, AMOUNT_MAX * 100) / 100
    k = rng.randint(0, 100)
    cells = [
        str(i),
        str(i),
        rng.choice(CATEGORIES),
        "".join(rng.choice("ABCDEFGHIJKLMNOPQRSTUVWXYZ") for _ in range(3)) + f"{rng.randint(0, 999):03d}",
        kind,
        repr(float(amount)),
        repr(k / 100),
        repr((100 - k) / 100),
        f"k{rng.randrange(N_KEYS)}",
    ]
    cells.extend(repr(rng.randint(0, X_MAX * 100) / 100) for _ in _x_columns(p))
    return cells


def generate_corpus(p: CorpusParams) -> Corpus:
    """Deterministic corpus plus a spec it satisfies."""
    rng = random.Random(p.seed)
    header = list(FIXED_COLUMNS) + _x_columns(p)
    tables: dict[str, Table] = {}
    for f in range(p.files):
        tables[f"data_{f:03d}.csv"] = Table(list(header), [_row(rng, i, p) for i in range(p.rows)])
    if p.complexity >= 9:
        tables[KEYS_FILE] = Table(["key"], [[f"k{i}"] for i in range(N_KEYS)])
    return Corpus(p, tables, _spec_text(p))


# ---------------------------------------------------------------------------
# injection


@dataclass(frozen=True)
class Injection:
    file: str
    row: int
    column: str
    kind: str


@dataclass(frozen=True)
class Expected:
    """Where validation must report an injected defect."""

    file: str
    row: int
    column: str | None
    kind: str
    constraint_id: str


@dataclass(frozen=True)
class InjectionPlan:
    injections: tuple[Injection, ...] = ()

    @property
    def count(self) -> int:
        return len(self.injections)

    @property
    def kinds(self) -> frozenset[str]:
        return frozenset(i.kind for i in self.injections)


def available_kinds(p: CorpusParams) -> list[str]:
    kinds = [k for k in INJECTION_KINDS if _KIND_LEVEL[k] <= p.complexity]
    if not _x_columns(p):
        kinds = [k for k in kinds if k not in ("type", "range")]
    return kinds


def _column_for(kind: str, p: CorpusParams, rng: random.Random) -> str:
    return {
        "type": None, "range": None, "enum": "category", "duplicate": "id", "regex": "code",
        "conditional": "amount", "step": "day", "sum": "p1", "fk": "ref",
    }[kind] or rng.choice(_x_columns(p))


def _expected(inj: Injection, p: CorpusParams) -> Expected:
    if inj.kind in ("type", "range"):
        cid = "dyn.x" if p.complexity >= 10 else f"col.{inj.column}"
    else:
        cid = {
            "enum": "col.category", "duplicate": "col.id", "regex": "col.code",
            "conditional": "cond.amount", "step": "step.day", "sum": "sum.p", "fk": "fk.ref",
        }[inj.kind]
    column = None if inj.kind == "sum" else inj.column
    return Expected(inj.file, inj.row, column, inj.kind, cid)


def ground_truth(plan: InjectionPlan, p: CorpusParams) -> list[Expected]:
    return sorted((_expected(i, p) for i in plan.injections), key=lambda e: (e.file, e.row, e.column or "", e.kind))


def plan_injections(corpus: Corpus, count: int, kinds=None, seed: int = 0) -> InjectionPlan:
    """A random valid plan of ``count`` injections with distinct loci."""
    p = corpus.params
    rng = random.Random(seed)
    allowed = [k for k in (kinds or available_kinds(p)) if k in available_kinds(p)]
    if count and not allowed:
        raise ValueError(f"no injection kinds available at complexity {p.complexity}")
    chosen: list[Injection] = []
    taken: set[tuple[str, int, str]] = set()
    attempts = 0
    while len(chosen) < count:
        attempts += 1
        if attempts > 100 * (count + 10):
            raise ValueError(f"cannot place {count} distinct injections in this corpus")
        kind = rng.choice(allowed)
        file = rng.choice(corpus.data_files)
        table = corpus.tables[file]
        row = rng.randrange(1 if kind == "duplicate" else 0, len(table.rows))
        column = _column_for(kind, p, rng)
        if kind == "conditional" and table.rows[row][FIXED_COLUMNS.index("kind")] != "a":
            continue
        cell = (file, row, column)
        # A summation defect is reported per row; keep one p-cell mutation per row.
        row_key = (file, row, "p*") if kind == "sum" else None
        if cell in taken or (row_key and row_key in taken):
            continue
        taken.add(cell)
        if row_key:
            taken.add(row_key)
        chosen.append(Injection(file, row, column, kind))
    return InjectionPlan(tuple(chosen))


def inject_violations(corpus: Corpus, plan: InjectionPlan) -> tuple[Corpus, list[Expected]]:
    """Apply ``plan`` to a copy of ``corpus``; each injection breaks exactly one constraint."""
    p = corpus.params
    seen: set[tuple[str, int, str]] = set()
    sum_rows: set[tuple[str, int]] = set()
    for inj in plan.injections:
        key = (inj.file, inj.row, inj.column)
        if key in seen:
            raise LocusConflict(f"two injections target {inj.file}:{inj.row}:{inj.column}")
        seen.add(key)
        if inj.kind == "sum":
            if (inj.file, inj.row) in sum_rows:
                raise LocusConflict(f"two summation injections on {inj.file} row {inj.row}")
            sum_rows.add((inj.file, inj.row))
        if inj.kind not in available_kinds(p):
            raise ValueError(f"injection kind {inj.kind!r} has no constraint at complexity {p.complexity}")
    out = corpus.copy()
    id_idx = FIXED_COLUMNS.index("id")
    dup_rows = {(i.file, i.row) for i in plan.injections if i.kind == "duplicate"}
    for n, inj in enumerate(plan.injections):
        table = out.tables[inj.file]
        original = corpus.tables[inj.file]
        c = table.header.index(inj.column)
        row = table.rows[inj.row]
        if inj.kind == "type":
            row[c] = f"bad{n}"
        elif inj.kind == "range":
            row[c] = repr(float(X_MAX + 1 + n))
        elif inj.kind == "enum":
            row[c] = f"fresh{n}"
        elif inj.kind == "regex":
            row[c] = f"bad-{n}"
        elif inj.kind == "conditional":
            row[c] = repr(-float(original.rows[inj.row][c]))
        elif inj.kind == "step":
            row[c] = repr(int(original.rows[inj.row][c]) + 0.5)
        elif inj.kind == "sum":
            k = round(float(original.rows[inj.row][c]) * 100)
            row[c] = repr((k + 5) / 100 if k <= 95 else (k - 5) / 100)
        elif inj.kind == "fk":
            row[c] = f"missing{n}"
        elif inj.kind == "duplicate":
            sources = [q for q in range(inj.row) if (inj.file, q) not in dup_rows]
            if not sources:
                raise LocusConflict(f"no clean earlier row to duplicate for {inj.file}:{inj.row}")
            q = sources[(inj.row * 7 + n) % len(sources)]
            row[id_idx] = original.rows[q][id_idx]
        else:
            raise ValueError(f"unknown injection kind {inj.kind!r}")
    return out, ground_truth(plan, p)


def detected(report) -> list[Expected]:
    """Error violations of a report in ground-truth shape (kind left blank)."""
    out = []
    for v in report.violations:
        if v.severity != ERROR:
            continue
        out.append(Expected(v.file, v.locus.row, v.locus.column, "", v.constraint_id))
    return out


@dataclass(frozen=True)
class DetectionScore:
    expected: int
    reported: int
    matched: int

    @property
    def precision(self) -> float:
        return 1.0 if self.reported == 0 else self.matched / self.reported

    @property
    def recall(self) -> float:
        return 1.0 if self.expected == 0 else self.matched / self.expected


def score(truth: list[Expected], report) -> DetectionScore:
    want = {(e.file, e.row, e.column, e.constraint_id) for e in truth}
    got = [(e.file, e.row, e.column, e.constraint_id) for e in detected(report)]
    return DetectionScore(len(want), len(got), len(want & set(got)))


def injection_trial(params: CorpusParams, count: int, seed: int = 0, jobs: int = 1) -> DetectionScore:
    corpus = generate_corpus(params)
    plan = plan_injections(corpus, count, seed=seed)
    mutated, truth = inject_violations(corpus, plan)
    report = run_validation(mutated.spec(), mutated.inputs(), jobs=jobs, timestamp="")
    return score(truth, report)


# ---------------------------------------------------------------------------
# timing


@dataclass(frozen=True)
class SweepPoint:
    dim: str
    value: int
    median_ms: float
    samples_ms: tuple[float, ...]
    rows: int


@dataclass(frozen=True)
class ScalingResult:
    dim: str
    points: tuple[SweepPoint, ...]
    intercept_ms: float
    slope_ms: float
    r2: float
    throughput_rows_per_s: float
    jobs: int = 1
    peak_rss_kb: int | None = None

    def to_rows(self) -> list[dict]:
        rows = [{"dim": p.dim, "value": p.value, "median_ms": round(p.median_ms, 3)} for p in self.points]
        rows.append({"dim": self.dim, "value": "fit", "median_ms": None, "r2": round(self.r2, 6),
                     "slope_ms": round(self.slope_ms, 6), "intercept_ms": round(self.intercept_ms, 6)})
        return rows


def linear_fit(xs, ys) -> tuple[float, float, float]:
    """Least-squares ``y = a + b x``; returns (a, b, r2)."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    b, a = np.polyfit(x, y, 1)
    pred = a + b * x
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(a), float(b), r2


def _timed_run(spec, inputs, jobs: int) -> float:
    start = time.perf_counter()
    run_validation(spec, inputs, jobs=jobs, timestamp="")
    return (time.perf_counter() - start) * 1000


def time_validation(corpus: Corpus, warmup: int, reps: int, jobs: int = 1) -> list[float]:
    spec = corpus.spec()
    inputs = corpus.inputs()
    for _ in range(warmup):
        run_validation(spec, inputs, jobs=jobs, timestamp="")
    return [_timed_run(spec, inputs, jobs) for _ in range(reps)]


def time_interleaved(corpora: list[Corpus], warmup: int, reps: int, jobs: int = 1) -> list[list[float]]:
    """Time several corpora with their reps taken round-robin.

    A slow stretch on the host then lands on every corpus instead of
    skewing whichever one happened to be running.
    """
    loaded = [(c.spec(), c.inputs()) for c in corpora]
    for spec, inputs in loaded:
        for _ in range(warmup):
            run_validation(spec, inputs, jobs=jobs, timestamp="")
    samples: list[list[float]] = [[] for _ in corpora]
    for _ in range(reps):
        for i, (spec, inputs) in enumerate(loaded):
            samples[i].append(_timed_run(spec, inputs, jobs))
    return samples


def _peak_rss_kb() -> int | None:
    try:
        import resource
    except ImportError:
        return None
    return int(resource.getrusage(resource.RUSAGE_SELF).ru_maxrss)


def run_scaling(
    values=(1, 10, 25, 50, 100),
    dim: str = "files",
    base: CorpusParams | None = None,
    warmup: int = 5,
    reps: int = 10,
    jobs: int = 1,
) -> ScalingResult:
    """Median validation time at each sweep point plus a linear fit."""
    if len(values) < 2:
        raise ValueError("a sweep needs at least two points")
    if reps < 1 or warmup < 0:
        raise ValueError("reps must be >= 1 and warmup >= 0")
    base = base or CorpusParams(complexity=5, columns=10, rows=100, files=1, seed=0)
    corpora = [generate_corpus(CorpusParams(**{**base.__dict__, dim: int(v)})) for v in values]
    points = []
    total_rows = 0
    total_ms = 0.0
    for v, corpus, samples in zip(values, corpora, time_interleaved(corpora, warmup, reps, jobs)):
        rows = corpus.total_rows()
        total_rows += rows * len(samples)
        total_ms += sum(samples)
        points.append(SweepPoint(dim, int(v), statistics.median(samples), tuple(samples), rows))
    a, b, r2 = linear_fit([p.value for p in points], [p.median_ms for p in points])
    throughput = total_rows / (total_ms / 1000) if total_ms else 0.0
    return ScalingResult(dim, tuple(points), a, b, r2, throughput, jobs, _peak_rss_kb())


def parse_sweep(text: str) -> tuple[str, list[int]]:
    """``files=1:100`` (standard points within range), ``files=1:100:10`` or ``files=1,5,9``."""
    dim, sep, spec = text.partition("=")
    dim = {"cols": "columns"}.get(dim.strip(), dim.strip())
    if not sep or dim not in RANGES:
        raise ValueError(f"bad sweep {text!r}; expected <dim>=<values> with dim in {sorted(RANGES)}")
    try:
        if ":" in spec:
            parts = [int(x) for x in spec.split(":")]
            if len(parts) == 3:
                lo, hi, step = parts
                if step <= 0:
                    raise ValueError
                values = list(range(lo, hi + 1, step))
            elif len(parts) == 2:
                lo, hi = parts
                values = sorted({lo, hi, *[v for v in _STANDARD[dim] if lo <= v <= hi]})
            else:
                raise ValueError
        else:
            values = [int(x) for x in spec.split(",")]
    except ValueError:
        raise ValueError(f"bad sweep values {spec!r}") from None
    lo, hi = RANGES[dim]
    if not values or any(not lo <= v <= hi for v in values):
        raise ValueError(f"sweep values for {dim} must lie in [{lo}, {hi}]")
    return dim, values


_STANDARD = {
    "files": (1, 10, 25, 50, 100),
    "rows": (100, 250, 500, 750, 1000),
    "columns": (10, 25, 50, 75, 100),
    "complexity": (1, 3, 5, 7, 10),
}


def render_scaling_text(res: ScalingResult) -> str:
    lines = [f"{res.dim:>10}  {'median_ms':>12}  {'rows':>8}"]
    for p in res.points:
        lines.append(f"{p.value:>10}  {p.median_ms:>12.3f}  {p.rows:>8}")
    lines.append(f"fit: time_ms = {res.intercept_ms:.3f} + {res.slope_ms:.3f} * {res.dim}   R^2 = {res.r2:.4f}")
    lines.append(f"throughput: {res.throughput_rows_per_s:.1f} rows/s")
    if res.jobs != 1:
        lines.append(f"note: timed with --jobs {res.jobs}")
    if res.peak_rss_kb is not None:
        lines.append(f"peak RSS: {res.peak_rss_kb} kB")
    return "\n".join(lines) + "\n"
