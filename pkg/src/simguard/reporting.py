"""Aggregation of per-constraint results into reports, and rendering."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable

from .model import ERROR, WARNING, Violation

VIOLATION_CAP = 1000


@dataclass(frozen=True)
class ConstraintOutcome:
    """Result of evaluating one constraint against one file."""

    file: str
    constraint_id: str
    severity: str
    violations: tuple[Violation, ...] = ()
    skipped: str | None = None


@dataclass(frozen=True)
class FileSetOutcome:
    constraint_id: str
    selector: str
    matched: int
    message: str | None
    severity: str = ERROR

    @property
    def failed(self) -> bool:
        return self.message is not None and self.severity == ERROR


@dataclass(frozen=True)
class FileReport:
    file: str
    constraints_evaluated: int
    passed: int
    failed: int
    warnings: int
    violations: tuple[Violation, ...]
    elapsed: float = 0.0
    skipped: tuple[tuple[str, str], ...] = ()
    notes: tuple[str, ...] = ()
    omitted: tuple[tuple[str, int], ...] = ()


@dataclass(frozen=True)
class Totals:
    evaluated: int = 0
    passed: int = 0
    failed: int = 0
    warnings: int = 0


@dataclass(frozen=True)
class ValidationReport:
    spec_name: str
    timestamp: str
    files: tuple[FileReport, ...] = ()
    file_set: tuple[FileSetOutcome, ...] = ()
    stopped_early: bool = False

    @property
    def totals(self) -> Totals:
        fs_failed = sum(1 for f in self.file_set if f.failed)
        fs_warn = sum(1 for f in self.file_set if f.message is not None and f.severity == WARNING)
        return Totals(
            evaluated=sum(f.constraints_evaluated for f in self.files) + len(self.file_set),
            passed=sum(f.passed for f in self.files) + len(self.file_set) - fs_failed,
            failed=sum(f.failed for f in self.files) + fs_failed,
            warnings=sum(f.warnings for f in self.files) + fs_warn,
        )

    @property
    def violations(self) -> list[Violation]:
        return [v for f in self.files for v in f.violations]

    def error_violations(self) -> list[Violation]:
        return [v for v in self.violations if v.severity == ERROR]


def aggregate(
    outcomes: Iterable[ConstraintOutcome],
    spec_name: str,
    timestamp: str,
    timings: dict[str, float] | None = None,
    notes: dict[str, list[str]] | None = None,
    file_set: Iterable[FileSetOutcome] = (),
    stopped_early: bool = False,
    cap: int = VIOLATION_CAP,
) -> ValidationReport:
    timings = timings or {}
    notes = notes or {}
    by_file: dict[str, list[ConstraintOutcome]] = {}
    for o in outcomes:
        by_file.setdefault(o.file, []).append(o)
    for path in notes:
        by_file.setdefault(path, [])
    files = []
    for path in sorted(by_file):
        evaluated = passed = failed = warnings = 0
        kept: list[Violation] = []
        skipped = []
        omitted = []
        for o in sorted(by_file[path], key=lambda o: o.constraint_id):
            if o.skipped is not None:
                skipped.append((o.constraint_id, o.skipped))
                continue
            evaluated += 1
            if any(v.severity == ERROR for v in o.violations):
                failed += 1
            else:
                passed += 1
            warnings += sum(1 for v in o.violations if v.severity == WARNING)
            ordered = sorted(o.violations, key=Violation.sort_key)
            if len(ordered) > cap:
                omitted.append((o.constraint_id, len(ordered) - cap))
                ordered = ordered[:cap]
            kept.extend(ordered)
        file_notes = tuple(notes.get(path, ()))
        files.append(FileReport(
            file=path,
            constraints_evaluated=evaluated,
            passed=passed,
            failed=failed,
            warnings=warnings + len(file_notes),
            violations=tuple(sorted(kept, key=Violation.sort_key)),
            elapsed=timings.get(path, 0.0),
            skipped=tuple(skipped),
            notes=file_notes,
            omitted=tuple(omitted),
        ))
    return ValidationReport(
        spec_name=spec_name,
        timestamp=timestamp,
        files=tuple(files),
        file_set=tuple(sorted(file_set, key=lambda f: f.constraint_id)),
        stopped_early=stopped_early,
    )


def _pattern_text(pattern) -> str | None:
    return None if pattern is None else str(pattern)


def violation_to_dict(v: Violation) -> dict:
    return {
        "constraint_id": v.constraint_id,
        "pattern": _pattern_text(v.pattern),
        "locus": v.locus.to_dict(),
        "offending": v.offending,
        "message": v.message,
        "severity": v.severity,
    }


def report_to_dict(report: ValidationReport) -> dict:
    t = report.totals
    return {
        "spec": report.spec_name,
        "generated_at": report.timestamp,
        "totals": {"evaluated": t.evaluated, "passed": t.passed, "failed": t.failed, "warnings": t.warnings},
        "stopped_early": report.stopped_early,
        "files": [
            {
                "path": f.file,
                "evaluated": f.constraints_evaluated,
                "passed": f.passed,
                "failed": f.failed,
                "warnings": f.warnings,
                "elapsed_ms": round(f.elapsed * 1000, 3),
                "notes": list(f.notes),
                "skipped": [{"constraint_id": c, "reason": r} for c, r in f.skipped],
                "omitted": [{"constraint_id": c, "count": n} for c, n in f.omitted],
                "violations": [violation_to_dict(v) for v in f.violations],
            }
            for f in report.files
        ],
        "file_set": [
            {
                "constraint_id": fs.constraint_id,
                "selector": fs.selector,
                "matched": fs.matched,
                "passed": fs.message is None,
                "message": fs.message,
                "severity": fs.severity,
            }
            for fs in report.file_set
        ],
    }


TIMING_FIELDS = ("generated_at", "elapsed_ms")


def strip_timing(doc: dict) -> dict:
    """Copy of a structured report without timestamp/elapsed fields."""
    out = {k: v for k, v in doc.items() if k != "generated_at"}
    out["files"] = [{k: v for k, v in f.items() if k != "elapsed_ms"} for f in doc.get("files", [])]
    return out


def _line(v: Violation) -> str:
    loc = v.locus
    if loc.kind == "path":
        where = f"{v.file}:{loc.path}"
    else:
        row = "-" if loc.row is None else str(loc.row)
        col = "-" if loc.column is None else loc.column
        where = f"{v.file}:{row}:{col}"
    pattern = _pattern_text(v.pattern) or "-"
    tag = "" if v.severity == ERROR else " warning:"
    value = "null" if v.offending is None else v.offending
    return f"{where}  [{v.constraint_id}/{pattern}]{tag}  {v.message} (value={value})"


def render_text(report: ValidationReport) -> str:
    lines = [f"simguard report for spec '{report.spec_name}' ({report.timestamp})"]
    for f in report.files:
        lines.append("")
        lines.append(
            f"== {f.file}: {f.constraints_evaluated} evaluated, {f.passed} passed, "
            f"{f.failed} failed, {f.warnings} warnings"
        )
        for note in f.notes:
            lines.append(f"  note: {note}")
        for v in f.violations:
            lines.append(_line(v))
        for cid, n in f.omitted:
            lines.append(f"{f.file}  [{cid}]  +{n} more")
        for cid, reason in f.skipped:
            lines.append(f"  skipped {cid}: {reason}")
    if report.file_set:
        lines.append("")
        lines.append("== file-set checks")
        for fs in report.file_set:
            status = "ok" if fs.message is None else ("FAILED" if fs.failed else "warning")
            detail = "" if fs.message is None else f": {fs.message}"
            lines.append(f"  [{fs.constraint_id}] {fs.selector} matched {fs.matched} file(s) {status}{detail}")
    if report.stopped_early:
        lines.append("")
        lines.append("stopped at first failing file (--fail-fast)")
    t = report.totals
    lines.append("")
    lines.append(f"{t.evaluated} evaluated, {t.passed} passed, {t.failed} failed, {t.warnings} warnings")
    return "\n".join(lines) + "\n"


def render(report: ValidationReport, format: str = "text") -> bytes:
    if format == "text":
        return render_text(report).encode("utf-8")
    if format in ("structured", "json"):
        return (json.dumps(report_to_dict(report), indent=2, sort_keys=False, ensure_ascii=False) + "\n").encode("utf-8")
    raise ValueError(f"unknown report format {format!r}")


_LOCUS_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"type": "string", "enum": ["file", "column", "row", "cell", "path"]},
        "row": {"type": "integer", "minimum": 0},
        "column": {"type": "string"},
        "path": {"type": "string"},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

_VIOLATION_SCHEMA = {
    "type": "object",
    "properties": {
        "constraint_id": {"type": "string"},
        "pattern": {},
        "locus": _LOCUS_SCHEMA,
        "offending": {},
        "message": {"type": "string"},
        "severity": {"type": "string", "enum": ["error", "warning"]},
    },
    "required": ["constraint_id", "pattern", "locus", "offending", "message", "severity"],
    "additionalProperties": False,
}

_COUNT = {"type": "integer", "minimum": 0}

REPORT_SCHEMA = {
    "type": "object",
    "properties": {
        "spec": {"type": "string"},
        "generated_at": {"type": "string"},
        "totals": {
            "type": "object",
            "properties": {"evaluated": _COUNT, "passed": _COUNT, "failed": _COUNT, "warnings": _COUNT},
            "required": ["evaluated", "passed", "failed", "warnings"],
            "additionalProperties": False,
        },
        "stopped_early": {"type": "boolean"},
        "files": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "path": {"type": "string"},
                    "evaluated": _COUNT,
                    "passed": _COUNT,
                    "failed": _COUNT,
                    "warnings": _COUNT,
                    "elapsed_ms": {"type": "number", "minimum": 0},
                    "notes": {"type": "array", "items": {"type": "string"}},
                    "skipped": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "properties": {"constraint_id": {"type": "string"}, "reason": {"type": "string"}},
                            "required": ["constraint_id", "reason"],
                            "additionalProperties": False,
                        },
                    },
                    "omitted": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "properties": {"constraint_id": {"type": "string"}, "count": _COUNT},
                            "required": ["constraint_id", "count"],
                            "additionalProperties": False,
                        },
                    },
                    "violations": {"type": "array", "items": _VIOLATION_SCHEMA},
                },
                "required": ["path", "evaluated", "passed", "failed", "warnings", "violations"],
                "additionalProperties": False,
            },
        },
        "file_set": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "constraint_id": {"type": "string"},
                    "selector": {"type": "string"},
                    "matched": _COUNT,
                    "passed": {"type": "boolean"},
                    "message": {},
                    "severity": {"type": "string", "enum": ["error", "warning"]},
                },
                "required": ["constraint_id", "selector", "matched", "passed"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["spec", "generated_at", "totals", "files"],
    "additionalProperties": False,
}
