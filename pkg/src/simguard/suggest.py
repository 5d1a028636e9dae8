"""Provider-agnostic constraint suggestion: prompts, response parsing, comparison.

The prompt template is original to this package. Providers are a single
text-to-text call; the built-in mock answers offline.
"""

from __future__ import annotations

import json
import os
import re
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import PurePosixPath
from typing import Protocol

from .errors import DocumentSyntaxError, DuplicateKey, ParseError, ProviderError, SampleTooLarge, SpecError
from .inference import InferenceOptions, infer_document, infer_tabular, logical_name
from .kinds import REGISTRY
from .model import (
    DOCUMENT_SUFFIXES,
    ConstraintDecl,
    GuardSpec,
    cell_key,
    parse_document_text,
    parse_tabular_text,
)
from .specfile import constraint_from_dict, constraint_to_dict, dump_constraints, dump_yaml
from .tabular import ColumnConstraintParams, ConditionalParams, SummationParams

LABELS = ("exact_match", "improved", "partial", "requires_adjustment", "new", "not_inferred")
FENCE_TAG = "guard-constraint"
DEFAULT_SAMPLE_ROWS = 50
DEFAULT_PROMPT_LIMIT = 200_000

ENDPOINT_ENV = "SIMGUARD_LLM_ENDPOINT"
AUTH_ENV = "SIMGUARD_LLM_AUTH"


@dataclass(frozen=True)
class FileSample:
    path: str
    text: str
    total_rows: int | None = None


@dataclass(frozen=True)
class SuggestionRequest:
    file_samples: tuple[FileSample, ...] = ()
    context_docs: str = ""
    existing_spec: GuardSpec | None = None
    task: str = "infer"
    description: str | None = None
    sample_rows: int = DEFAULT_SAMPLE_ROWS

    def __post_init__(self):
        if self.task not in ("infer", "generate"):
            raise ValueError(f"unknown task {self.task!r}")
        if self.task == "generate" and not self.description:
            raise ValueError("generate task needs a description")
        if not self.file_samples and not self.description:
            raise ValueError("a request needs at least one file sample or a description")
        if self.sample_rows < 1:
            raise ValueError("sample_rows must be >= 1")


def _is_document(path: str) -> bool:
    return PurePosixPath(path).suffix.lower() in DOCUMENT_SUFFIXES


def sample_file(path: str, text: str) -> FileSample:
    lines = text.splitlines()
    rows = None if _is_document(path) else max(len([ln for ln in lines if ln.strip()]) - 1, 0)
    return FileSample(path, text, rows)


def samples_from_inputs(inputs, paths=None) -> tuple[FileSample, ...]:
    return tuple(sample_file(p, inputs.read_text(p)) for p in (paths or inputs.paths()))


def _truncate(sample: FileSample, rows: int) -> str:
    if _is_document(sample.path):
        return sample.text.rstrip("\n") + "\n"
    lines = [ln for ln in sample.text.splitlines() if ln.strip()]
    return "\n".join(lines[: rows + 1]) + "\n"


def _grammar() -> str:
    lines = ["Available constraint kinds:"]
    for kind in REGISTRY.values():
        lines.append(f"  - {kind.name}: {kind.summary}")
    return "\n".join(lines)


_FORMAT = f"""Answer format:
Emit one fenced block per constraint, tagged `{FENCE_TAG}`, containing a YAML
mapping with keys id, kind, on (file name), params and optionally severity.
Example:

```{FENCE_TAG}
id: routes.distance
kind: column
on: routes.csv
params: {{column: distance, type: real, gt: 0}}
```

Text outside fenced blocks is ignored."""


def _render_prompt(req: SuggestionRequest, rows: int) -> str:
    parts = ["You write input-verification constraints for simulation input files."]
    if req.context_docs.strip():
        parts.append("Simulation context:\n" + req.context_docs.strip())
    for s in req.file_samples:
        if _is_document(s.path):
            info = f"sample path={s.path}"
        else:
            shown = min(rows, s.total_rows or 0)
            info = f"sample path={s.path} rows={shown} of {s.total_rows}"
        parts.append(f"```{info}\n{_truncate(s, rows)}```")
    parts.append(_grammar())
    if req.task == "infer":
        parts.append("Task: infer constraints that every row of the files above satisfies.")
    else:
        parts.append(f"Task: write constraints implementing this requirement.\nRequirement: {req.description}")
    parts.append(_FORMAT)
    return "\n\n".join(parts) + "\n"


def build_prompt(req: SuggestionRequest, limit: int = DEFAULT_PROMPT_LIMIT) -> str:
    """Deterministic prompt; samples shrink until it fits ``limit`` characters."""
    rows = req.sample_rows
    while True:
        prompt = _render_prompt(req, rows)
        if len(prompt) <= limit:
            return prompt
        if rows == 1:
            raise SampleTooLarge(f"prompt needs {len(prompt)} characters even at 1 row per file (limit {limit})")
        rows = max(1, rows // 2)


_SAMPLE_RE = re.compile(r"^```sample path=(\S+)[^\n]*\n(.*?)^```", re.DOTALL | re.MULTILINE)
_BLOCK_RE = re.compile(rf"^```{re.escape(FENCE_TAG)}[ \t]*\n(.*?)^```", re.DOTALL | re.MULTILINE)


def extract_samples(prompt: str) -> list[tuple[str, str]]:
    return [(m.group(1), m.group(2)) for m in _SAMPLE_RE.finditer(prompt)]


@dataclass(frozen=True)
class ParsedResponse:
    decls: tuple[ConstraintDecl, ...]
    diagnostics: tuple[str, ...]


def parse_response(text: str) -> ParsedResponse:
    """Turn every fenced constraint block into a ConstraintDecl.

    Malformed blocks become diagnostics; prose outside blocks is ignored.
    """
    decls: list[ConstraintDecl] = []
    diags: list[str] = []
    for n, m in enumerate(_BLOCK_RE.finditer(text), start=1):
        try:
            root = parse_document_text(m.group(1), f"<block {n}>").root
        except (DocumentSyntaxError, DuplicateKey) as exc:
            diags.append(f"block {n}: {exc}")
            continue
        entries = root if isinstance(root, list) else [root]
        for entry in entries:
            try:
                decls.append(constraint_from_dict(entry, n - 1, "."))
            except SpecError as exc:
                diags.append(f"block {n}: {exc}")
    return ParsedResponse(tuple(decls), tuple(diags))


def render_blocks(decls) -> str:
    return "".join(
        f"```{FENCE_TAG}\n{dump_yaml(constraint_to_dict(d), default_flow_style=None, width=100)}```\n\n" for d in decls
    )


# ---------------------------------------------------------------------------
# providers


class Provider(Protocol):
    def complete(self, prompt: str, timeout: float = 60.0) -> str: ...


_WORD_RE = re.compile(r"[A-Za-z0-9_]+")
_FILLER = frozenset(
    "the a an all of in each every sum total entries values value column columns row rows".split()
)


def _norm(name: str) -> str:
    return re.sub(r"[^a-z0-9]", "", name.lower())


def _stems(words) -> set[str]:
    out = set()
    for w in words:
        w = _norm(w)
        out.add(w)
        if w.endswith("s") and len(w) > 1:
            out.add(w[:-1])
    return out


def _number_after(text: str, phrase: str) -> float | None:
    m = re.search(phrase + r"\s+(-?\d+(?:\.\d+)?)", text)
    if not m:
        return None
    v = float(m.group(1))
    return int(v) if v.is_integer() else v


class MockProvider:
    """Offline provider.

    Infer tasks run the inference engine over the samples embedded in the
    prompt. Generate tasks apply a handful of phrase rules to the requirement
    text ("positive", "non-negative", "add up to N", "unique").
    """

    def __init__(self, options: InferenceOptions | None = None):
        self.options = options or InferenceOptions()

    def complete(self, prompt: str, timeout: float = 60.0) -> str:
        m = re.search(r"^Requirement: (.*)$", prompt, re.MULTILINE)
        samples = extract_samples(prompt)
        decls = self._generate(m.group(1), samples) if m else self._infer(samples)
        return "Suggested constraints:\n\n" + render_blocks(decls)

    def _infer(self, samples) -> list[ConstraintDecl]:
        out: list[ConstraintDecl] = []
        for path, text in samples:
            try:
                if _is_document(path):
                    schema = infer_document(parse_document_text(text, path))
                    raw = {"schema": schema.to_dict()}
                    kind = REGISTRY["document_schema"]
                    out.append(ConstraintDecl(
                        f"{logical_name(path)}.schema", path, kind.name, kind.parse(raw, "mock", "."), raw,
                    ))
                else:
                    out.extend(infer_tabular(parse_tabular_text(text, path), self.options, on=path))
            except (ParseError, DocumentSyntaxError, DuplicateKey):
                continue
        return out

    def _target(self, requirement: str, samples) -> tuple[str, str | None]:
        """Pick (file, column) the requirement talks about."""
        words = _WORD_RE.findall(requirement)
        # adjacent words may name one column ("forced redirection")
        joined = ["".join(words[i:i + n]) for n in (2, 3) for i in range(len(words) - n + 1)]
        stems = _stems(words + joined)
        best = None
        for path, text in samples:
            if _is_document(path):
                continue
            try:
                ds = parse_tabular_text(text, path)
            except ParseError:
                continue
            file_hit = _norm(PurePosixPath(path).stem) in stems
            for col in ds.column_names:
                if _norm(col) in stems:
                    score = (1 if file_hit else 0, 1)
                    if best is None or score > best[0]:
                        best = (score, path, col)
            if best is None and file_hit:
                best = ((1, 0), path, None)
        if best is not None:
            return best[1], best[2]
        # No samples to anchor on: "<File> <column>s must ..." style phrasing.
        head = re.split(r"\b(?:must|should|shall|are|is)\b", requirement, maxsplit=1)[0]
        names = [_norm(w) for w in _WORD_RE.findall(head)]
        names = [n for n in names if n not in _FILLER]
        column = names[-1].rstrip("s") if names else "value"
        file = f"{names[0]}s.csv" if len(names) > 1 else "input.csv"
        return file, column

    def _generate(self, requirement: str, samples) -> list[ConstraintDecl]:
        text = requirement.lower()
        on, column = self._target(requirement, samples)
        prefix = logical_name(on)
        raws: list[tuple[str, str, dict]] = []
        total = _number_after(text, r"(?:add up to|adds up to|sum to|sums to)")
        if total is not None:
            raws.append((f"{prefix}.sum", "summation", {
                "axis": "per_row" if "row" in text or "entries" in text else "per_column",
                "columns": "all_but_first",
                "target": total,
                "tolerance": 0.01,
            }))
        elif column is not None:
            params: dict = {"column": column}
            if re.search(r"\bnon-?negative\b", text):
                params["ge"] = 0
            elif re.search(r"\bpositive\b", text):
                params["gt"] = 0
            if "number" in text or "ge" in params or "gt" in params:
                params.setdefault("type", "real")
            if "unique" in text:
                params["unique"] = True
            if re.search(r"\bnot (?:be )?(?:empty|null|missing)\b|\brequired\b", text):
                params["nullable"] = False
            if len(params) > 1:
                raws.append((f"{prefix}.{column}", "column", params))
        out = []
        for cid, kind, raw in raws:
            out.append(ConstraintDecl(cid, on, kind, REGISTRY[kind].parse(raw, "mock", "."), raw))
        return out


class HttpProvider:
    """POSTs ``{"prompt": ...}`` as JSON; accepts a JSON ``{"text": ...}`` or plain-text reply."""

    def __init__(self, endpoint: str, auth: str | None = None):
        self.endpoint = endpoint
        self.auth = auth

    @classmethod
    def from_env(cls, env=None) -> HttpProvider:
        env = os.environ if env is None else env
        endpoint = env.get(ENDPOINT_ENV)
        if not endpoint:
            raise ProviderError(f"{ENDPOINT_ENV} is not set")
        return cls(endpoint, env.get(AUTH_ENV))

    def complete(self, prompt: str, timeout: float = 60.0) -> str:
        body = json.dumps({"prompt": prompt}).encode("utf-8")
        headers = {"Content-Type": "application/json"}
        if self.auth:
            name, sep, value = self.auth.partition(":")
            if sep and value and " " not in name:
                headers[name.strip()] = value.strip()
            else:
                headers["Authorization"] = self.auth
        req = urllib.request.Request(self.endpoint, data=body, headers=headers, method="POST")
        try:
            with urllib.request.urlopen(req, timeout=timeout) as resp:
                raw = resp.read().decode("utf-8", errors="replace")
        except (urllib.error.URLError, TimeoutError, OSError) as exc:
            raise ProviderError(f"provider request failed: {exc}") from None
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError:
            return raw
        if isinstance(doc, dict) and isinstance(doc.get("text"), str):
            return doc["text"]
        return raw


def make_provider(name: str, env=None):
    if name == "mock":
        return MockProvider()
    if name == "http":
        return HttpProvider.from_env(env)
    raise ProviderError(f"unknown provider {name!r}")


# ---------------------------------------------------------------------------
# comparison

EQUAL, STRONGER, WEAKER, INCOMPARABLE = "=", ">", "<", "?"

_TYPE_ADMITS = {
    None: {"integer", "real", "boolean", "text"},
    "text": {"integer", "real", "boolean", "text"},
    "real": {"integer", "real"},
    "integer": {"integer"},
    "boolean": {"boolean"},
}


def _by_subset(a: set | frozenset, b: set | frozenset, smaller_is_stronger: bool) -> str:
    if a == b:
        return EQUAL
    if a < b:
        return STRONGER if smaller_is_stronger else WEAKER
    if a > b:
        return WEAKER if smaller_is_stronger else STRONGER
    return INCOMPARABLE


def _order(a, b, higher_is_stronger: bool) -> str:
    if a == b:
        return EQUAL
    if (a > b) == higher_is_stronger:
        return STRONGER
    return WEAKER


def _lower(p: ColumnConstraintParams):
    """Effective lower bound as a comparable (value, strict) pair."""
    cands = []
    if p.ge is not None:
        cands.append((p.ge, 0))
    if p.gt is not None:
        cands.append((p.gt, 1))
    return max(cands) if cands else (float("-inf"), 0)


def _upper(p: ColumnConstraintParams):
    cands = []
    if p.le is not None:
        cands.append((p.le, 0))
    if p.lt is not None:
        cands.append((p.lt, -1))
    return min(cands) if cands else (float("inf"), 0)


def _members(p: ColumnConstraintParams):
    if p.isin is None or not isinstance(p.isin, tuple):
        return None
    return frozenset(cell_key(v) for v in p.isin)


def column_facets(s: ColumnConstraintParams, e: ColumnConstraintParams) -> list[str]:
    """Per-facet strength of suggestion ``s`` relative to existing ``e``.

    Bounds, type, nullability, uniqueness and regex count as stronger when
    they admit fewer values. Enumerations count as stronger when they list
    more members: a suggested enum missing members of the existing one is
    an incomplete reading of the domain.
    """
    facets = [
        _by_subset(_TYPE_ADMITS[s.expected_type], _TYPE_ADMITS[e.expected_type], True),
        _order(not s.nullable, not e.nullable, True),
        _order(s.unique, e.unique, True),
        _order(_lower(s), _lower(e), True),
        _order(_upper(s), _upper(e), False),
    ]
    ms, me = _members(s), _members(e)
    if s.isin != e.isin:
        if ms is None or me is None:
            if s.isin is not None and e.isin is not None:
                facets.append(INCOMPARABLE)
            else:
                facets.append(STRONGER if me is None else WEAKER)
        else:
            facets.append(_by_subset(ms, me, False))
    if s.regex != e.regex:
        if s.regex is None:
            facets.append(WEAKER)
        elif e.regex is None:
            facets.append(STRONGER)
        else:
            facets.append(INCOMPARABLE)
    return facets


def _verdict(facets: list[str]) -> str:
    kinds = set(facets) - {EQUAL}
    if not kinds:
        return "exact_match"
    if kinds == {STRONGER}:
        return "improved"
    if kinds == {WEAKER}:
        return "partial"
    return "requires_adjustment"


def _target_columns(decl: ConstraintDecl) -> tuple:
    p = decl.params
    if isinstance(p, ColumnConstraintParams):
        return (p.column,)
    if isinstance(p, ConditionalParams):
        return (p.then.column,)
    for attr in ("column", "columns", "node_column"):
        value = getattr(p, attr, None)
        if isinstance(value, str):
            return (value,)
        if isinstance(value, tuple):
            return value
    if isinstance(p, SummationParams):
        return (str(p.columns), p.axis)
    if decl.kind == "config_gate":
        return (decl.kind, repr(p.gate)) + _target_columns(
            ConstraintDecl(decl.id, decl.on, p.gated_kind, p.gated_params)
        )
    return (repr(p),)


def _same_params(a: ConstraintDecl, b: ConstraintDecl) -> bool:
    if isinstance(a.params, ColumnConstraintParams) and isinstance(b.params, ColumnConstraintParams):
        return _verdict(column_facets(a.params, b.params)) == "exact_match"
    return a.params == b.params


def compare_pair(s: ConstraintDecl, e: ConstraintDecl) -> str:
    """Label for suggestion ``s`` against an existing counterpart ``e``."""
    if s.kind != e.kind:
        return "requires_adjustment"
    if _same_params(s, e):
        return "exact_match"
    if isinstance(s.params, ColumnConstraintParams):
        return _verdict(column_facets(s.params, e.params))
    if isinstance(s.params, ConditionalParams):
        sp, ep = s.params, e.params
        if (
            sp.when == ep.when
            and isinstance(sp.then, ColumnConstraintParams)
            and isinstance(ep.then, ColumnConstraintParams)
        ):
            return _verdict(column_facets(sp.then, ep.then))
        return "requires_adjustment"
    if isinstance(s.params, SummationParams):
        sp, ep = s.params, e.params
        same_target = (sp.axis, sp.columns, sp.target) == (ep.axis, ep.columns, ep.target)
        numeric = all(isinstance(t, (int, float)) for t in (sp.tolerance, ep.tolerance))
        if same_target and numeric:
            return _verdict([_order(sp.tolerance, ep.tolerance, False)])
    return "requires_adjustment"


@dataclass(frozen=True)
class Comparison:
    suggestion: ConstraintDecl | None
    label: str
    counterpart: str | None = None


@dataclass(frozen=True)
class SuggestionOutcome:
    suggested: tuple[ConstraintDecl, ...]
    comparison: tuple[Comparison, ...] = ()
    diagnostics: tuple[str, ...] = ()
    prompt: str = ""

    def labels(self) -> list[str]:
        return [c.label for c in self.comparison]


def _file_of(decl: ConstraintDecl, spec: GuardSpec | None) -> str:
    on = decl.on if spec is None else spec.files.get(decl.on, decl.on)
    return on


def compare_with_spec(suggested, existing: GuardSpec | None) -> SuggestionOutcome:
    suggested = tuple(suggested)
    if existing is None:
        return SuggestionOutcome(suggested, tuple(Comparison(s, "new") for s in suggested))
    pool = list(existing.constraints)
    used: set[str] = set()
    out: list[Comparison] = []
    for s in suggested:
        s_file, s_cols = _file_of(s, existing), _target_columns(s)
        same = [
            e for e in pool
            if e.id not in used and _file_of(e, existing) == s_file
            and e.kind == s.kind and _target_columns(e) == s_cols
        ]
        overlap = [
            e for e in pool
            if e.id not in used and _file_of(e, existing) == s_file
            and set(_target_columns(e)) & set(s_cols)
        ]
        if same:
            e = same[0]
            out.append(Comparison(s, compare_pair(s, e), e.id))
            used.add(e.id)
        elif overlap:
            e = overlap[0]
            out.append(Comparison(s, "requires_adjustment", e.id))
            used.add(e.id)
        else:
            out.append(Comparison(s, "new"))
    for e in pool:
        if e.id not in used:
            out.append(Comparison(None, "not_inferred", e.id))
    return SuggestionOutcome(suggested, tuple(out))


def run_suggestion(req: SuggestionRequest, provider, timeout: float = 60.0, limit: int = DEFAULT_PROMPT_LIMIT) -> SuggestionOutcome:
    prompt = build_prompt(req, limit)
    text = provider.complete(prompt, timeout)
    parsed = parse_response(text)
    outcome = compare_with_spec(parsed.decls, req.existing_spec) if req.existing_spec else SuggestionOutcome(
        parsed.decls, tuple(Comparison(d, "new") for d in parsed.decls)
    )
    return SuggestionOutcome(outcome.suggested, outcome.comparison, parsed.diagnostics, prompt)


def render_outcome(outcome: SuggestionOutcome, with_labels: bool) -> str:
    lines = []
    if outcome.suggested:
        lines.append(dump_constraints(outcome.suggested).rstrip("\n"))
    else:
        lines.append("# no constraints suggested")
    if with_labels:
        lines.append("")
        lines.append("# comparison with existing spec")
        for c in outcome.comparison:
            subject = c.suggestion.id if c.suggestion is not None else "-"
            other = c.counterpart or "-"
            lines.append(f"{c.label:20s} {subject}  (existing: {other})")
    for d in outcome.diagnostics:
        lines.append(f"diagnostic: {d}")
    return "\n".join(lines) + "\n"


__all__ = [
    "LABELS",
    "FileSample",
    "HttpProvider",
    "MockProvider",
    "ParsedResponse",
    "SuggestionOutcome",
    "SuggestionRequest",
    "build_prompt",
    "compare_with_spec",
    "make_provider",
    "parse_response",
    "run_suggestion",
]
