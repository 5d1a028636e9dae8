"""Run a guard spec over a set of input files and assemble a report."""

from __future__ import annotations

import fnmatch
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping

from .errors import (
    DocumentSyntaxError,
    DuplicateKey,
    FileMissing,
    ParseError,
    SelectorEmpty,
    SiblingFileMissing,
    SpecError,
)
from .kinds import FILESET, PATH, REGISTRY, TABLE, Skipped, input_of
from .model import (
    DOCUMENT_SUFFIXES,
    ERROR,
    WARNING,
    ConstraintDecl,
    DocumentTree,
    EvaluationContext,
    GuardSpec,
    LoadOptions,
    Locus,
    TabularDataset,
    Violation,
    parse_document_text,
    parse_tabular_text,
)
from .patterns import effective_code
from .reporting import ConstraintOutcome, FileSetOutcome, ValidationReport, aggregate

LOAD_ID = "<load>"
NO_ROWS_NOTE = "no data rows"


def _options_for(rel: str) -> LoadOptions:
    return LoadOptions(delimiter="\t" if rel.lower().endswith(".tsv") else ",")


def _is_document(rel: str) -> bool:
    return Path(rel).suffix.lower() in DOCUMENT_SUFFIXES


class InputSet:
    """A collection of input files addressed by relative POSIX path."""

    def paths(self) -> list[str]:
        raise NotImplementedError

    def read_text(self, rel: str) -> str:
        raise NotImplementedError

    def exists(self, rel: str) -> bool:
        return rel in self.paths()

    def load(self, rel: str):
        """Parse ``rel`` into a TabularDataset or DocumentTree."""
        text = self.read_text(rel)
        if _is_document(rel):
            return parse_document_text(text, rel)
        return parse_tabular_text(text, rel, _options_for(rel))

    def syntax_violations(self, rel: str) -> list[Violation]:
        try:
            self.load(rel)
        except (DocumentSyntaxError, DuplicateKey, ParseError) as exc:
            return [Violation(Locus.whole_file(), _load_message(exc), None, rel)]
        return []

    def match(self, pattern: str) -> list[str]:
        return [p for p in self.paths() if fnmatch.fnmatchcase(p, pattern)]


class DirectoryInputs(InputSet):
    def __init__(self, root):
        self.root = Path(root)
        if not self.root.is_dir():
            raise FileMissing(self.root)
        self._paths = sorted(
            p.relative_to(self.root).as_posix() for p in self.root.rglob("*") if p.is_file()
        )

    def paths(self) -> list[str]:
        return list(self._paths)

    def read_text(self, rel: str) -> str:
        path = self.root / rel
        try:
            data = path.read_bytes()
        except FileNotFoundError:
            raise FileMissing(path) from None
        try:
            return data.decode("utf-8").removeprefix("﻿")
        except UnicodeDecodeError as exc:
            line = data[: exc.start].count(b"\n") + 1
            if _is_document(rel):
                raise DocumentSyntaxError(line, 0, "invalid UTF-8 byte sequence", rel) from None
            raise ParseError(line, "invalid UTF-8 byte sequence", rel) from None


class MemoryInputs(InputSet):
    """Inputs held in memory; handy for tests and the benchmark harness."""

    def __init__(self, files: Mapping[str, str]):
        self.files = dict(files)

    def paths(self) -> list[str]:
        return sorted(self.files)

    def read_text(self, rel: str) -> str:
        if rel not in self.files:
            raise FileMissing(rel)
        return self.files[rel]


def _load_message(exc: Exception) -> str:
    if isinstance(exc, ParseError):
        return f"cannot parse: line {exc.line}: {exc.reason}"
    if isinstance(exc, DocumentSyntaxError):
        return f"cannot parse: {exc.line}:{exc.col}: {exc.reason}"
    if isinstance(exc, DuplicateKey):
        return f"cannot parse: line {exc.line}: duplicate key at '{exc.path}'"
    return f"cannot parse: {exc}"


def selector_of(spec: GuardSpec, name: str) -> str:
    return spec.files.get(name, name)


def _resolve_one(spec: GuardSpec, inputs: InputSet, name: str) -> str:
    pattern = selector_of(spec, name)
    hits = inputs.match(pattern)
    if not hits:
        raise SiblingFileMissing(name, f"no input matches '{pattern}'")
    if len(hits) > 1:
        raise SpecError(f"sibling '{name}' is ambiguous: '{pattern}' matches {len(hits)} files")
    return hits[0]


def build_context(spec: GuardSpec, inputs: InputSet) -> EvaluationContext:
    """Load the configuration and every sibling file the constraints refer to."""
    config = None
    if spec.config is not None:
        rel = spec.config
        if not inputs.exists(rel):
            raise FileMissing(rel)
        try:
            config = parse_document_text(inputs.read_text(rel), rel)
        except (DocumentSyntaxError, DuplicateKey) as exc:
            raise SpecError(f"configuration {rel}: {exc}") from None
    names: set[str] = set()
    for decl in spec.constraints:
        names |= set(REGISTRY[decl.kind].siblings(decl.params))
    siblings = {}
    for name in sorted(names):
        rel = _resolve_one(spec, inputs, name)
        try:
            siblings[name] = inputs.load(rel)
        except (ParseError, DocumentSyntaxError, DuplicateKey) as exc:
            raise SiblingFileMissing(name, _load_message(exc)) from None
    return EvaluationContext(config, dict(spec.references), siblings, dict(spec.config_bindings))


def _stamp(v: Violation, rel: str, decl: ConstraintDecl, code) -> Violation:
    severity = WARNING if decl.severity == WARNING else v.severity
    return replace(v, file=rel, constraint_id=decl.id, pattern=code, severity=severity)


@dataclass
class _FileResult:
    rel: str
    outcomes: list[ConstraintOutcome]
    notes: list[str]
    elapsed: float

    @property
    def failed(self) -> bool:
        return any(v.severity == ERROR for o in self.outcomes for v in o.violations)


def _evaluate_file(rel: str, decls: list[ConstraintDecl], inputs: InputSet, ctx: EvaluationContext, codes) -> _FileResult:
    start = time.perf_counter()
    outcomes: list[ConstraintOutcome] = []
    notes: list[str] = []
    needs = {d.id: input_of(d.kind, d.params) for d in decls}
    artifact = None
    load_error: Exception | None = None
    if any(n != PATH for n in needs.values()):
        try:
            artifact = inputs.load(rel)
        except (ParseError, DocumentSyntaxError, DuplicateKey) as exc:
            load_error = exc
    if load_error is not None:
        outcomes.append(ConstraintOutcome(rel, LOAD_ID, ERROR, (
            Violation(Locus.whole_file(), _load_message(load_error), None, rel, LOAD_ID),
        )))
    elif isinstance(artifact, TabularDataset) and artifact.row_count == 0:
        notes.append(NO_ROWS_NOTE)
    for decl in decls:
        need = needs[decl.id]
        kind = REGISTRY[decl.kind]
        if need == PATH:
            found = inputs.syntax_violations(rel)
        elif load_error is not None:
            continue
        else:
            expected = TabularDataset if need == TABLE else DocumentTree
            if not isinstance(artifact, expected):
                raise SpecError(f"constraint '{decl.id}' needs a {need} but {rel} is not one")
            try:
                found = kind.evaluate(artifact, decl.params, ctx)
            except Skipped as exc:
                outcomes.append(ConstraintOutcome(rel, decl.id, decl.severity, skipped=str(exc)))
                continue
            except SelectorEmpty as exc:
                found = [Violation(Locus.whole_file(), str(exc), None, rel)]
        code = codes[decl.id]
        outcomes.append(ConstraintOutcome(
            rel, decl.id, decl.severity, tuple(_stamp(v, rel, decl, code) for v in found),
        ))
    return _FileResult(rel, outcomes, notes, time.perf_counter() - start)


def _file_count(spec: GuardSpec, decl: ConstraintDecl, inputs: InputSet) -> FileSetOutcome:
    pattern = selector_of(spec, decl.on)
    n = len(inputs.match(pattern))
    p = decl.params
    message = None
    if p.min is not None and n < p.min:
        message = f"expected at least {p.min} file(s)"
    elif p.max is not None and n > p.max:
        message = f"expected at most {p.max} file(s)"
    return FileSetOutcome(decl.id, pattern, n, message, decl.severity)


def plan(spec: GuardSpec, inputs: InputSet) -> dict[str, list[ConstraintDecl]]:
    """Map each input file to the constraints that target it."""
    work: dict[str, list[ConstraintDecl]] = {}
    for decl in spec.constraints:
        if REGISTRY[decl.kind].input == FILESET:
            continue
        pattern = selector_of(spec, decl.on)
        hits = inputs.match(pattern)
        if not hits:
            raise FileMissing(f"{pattern} (target of constraint '{decl.id}')")
        for rel in hits:
            work.setdefault(rel, []).append(decl)
    return {rel: work[rel] for rel in sorted(work)}


def default_jobs() -> int:
    return os.cpu_count() or 1


def now_timestamp() -> str:
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat()


def run_validation(
    spec: GuardSpec,
    inputs: InputSet,
    jobs: int | None = None,
    fail_fast: bool = False,
    timestamp: str | None = None,
) -> ValidationReport:
    """Evaluate every constraint of ``spec`` against ``inputs``.

    Run-configuration problems raise a RunConfigurationError; data defects
    come back as violations in the report.
    """
    jobs = jobs or default_jobs()
    ctx = build_context(spec, inputs)
    work = plan(spec, inputs)
    codes = {d.id: effective_code(d, spec) for d in spec.constraints}
    results: list[_FileResult] = []
    stopped = False
    if fail_fast:
        for rel, decls in work.items():
            res = _evaluate_file(rel, decls, inputs, ctx, codes)
            results.append(res)
            if res.failed:
                stopped = rel != list(work)[-1]
                break
    elif jobs <= 1 or len(work) <= 1:
        results = [_evaluate_file(rel, decls, inputs, ctx, codes) for rel, decls in work.items()]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_evaluate_file, rel, decls, inputs, ctx, codes) for rel, decls in work.items()]
            results = [f.result() for f in futures]
    file_set = [
        _file_count(spec, d, inputs) for d in spec.constraints if REGISTRY[d.kind].input == FILESET
    ]
    return aggregate(
        (o for r in results for o in r.outcomes),
        spec_name=spec.name,
        timestamp=timestamp if timestamp is not None else now_timestamp(),
        timings={r.rel: r.elapsed for r in results},
        notes={r.rel: r.notes for r in results if r.notes},
        file_set=file_set,
        stopped_early=stopped,
    )


def exit_code(report: ValidationReport) -> int:
    return 1 if report.totals.failed > 0 else 0

