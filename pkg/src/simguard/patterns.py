"""MIV pattern codes: ``<sources>.<template>.<target>``.

Sources are drawn from 1 (the target file itself), 2 (other input files),
3 (external reference tables) and 4 (simulation configuration). Templates
are A (static), B (parameters modified by criteria), C (conditionally
applied) and BC (both). Targets run i, ii, iii for single, fixed-multi and
dynamic columns and v..viii for whole-file checks; ``iv`` is undefined and
rejected.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import BadSource, BadTarget, BadTemplate, Unclassifiable

SOURCES = (1, 2, 3, 4)
TEMPLATES = ("A", "B", "C", "BC")
TARGETS = ("i", "ii", "iii", "v", "vi", "vii", "viii")


@dataclass(frozen=True, order=True)
class PatternCode:
    sources: tuple[int, ...]
    template: str
    target: str

    def __post_init__(self):
        if not self.sources:
            raise BadSource("pattern code needs at least one source")
        if any(s not in SOURCES for s in self.sources):
            raise BadSource(f"sources must be drawn from 1-4, got {self.sources}")
        if list(self.sources) != sorted(set(self.sources)):
            raise BadSource(f"sources must be strictly ascending, got {self.sources}")
        if self.template not in TEMPLATES:
            raise BadTemplate(f"unknown template type {self.template!r}")
        if self.target not in TARGETS:
            raise BadTarget(f"unknown target {self.target!r}")

    def __str__(self):
        return f"{''.join(map(str, self.sources))}.{self.template}.{self.target}"


def parse_code(text: str) -> PatternCode:
    if not isinstance(text, str):
        raise BadSource(f"pattern code must be text, got {type(text).__name__}")
    parts = text.strip().split(".")
    if len(parts) != 3:
        raise BadSource(f"pattern code {text!r} must have three dot-separated parts")
    src, template, target = parts
    if not src or not src.isdigit():
        raise BadSource(f"source component {src!r} must be digits 1-4")
    return PatternCode(tuple(int(ch) for ch in src), template, target)


def print_code(code: PatternCode) -> str:
    return str(code)


def enumerate_single_source_codes() -> list[PatternCode]:
    return [PatternCode((s,), t, g) for s, t, g in itertools.product(SOURCES, TEMPLATES, TARGETS)]


def enumerate_codes(max_sources: int = 4) -> list[PatternCode]:
    """Every code including multi-source combinations up to ``max_sources`` sources."""
    out = []
    for n in range(1, max_sources + 1):
        for combo in itertools.combinations(SOURCES, n):
            for t, g in itertools.product(TEMPLATES, TARGETS):
                out.append(PatternCode(combo, t, g))
    return out


def classify(constraint, spec=None) -> PatternCode | None:
    """Derive the pattern code of a constraint from its kind and parameters.

    Returns None for file-set meta-checks, which sit outside the taxonomy.
    An explicit ``pattern`` on the declaration is not consulted here; see
    :func:`effective_code`.
    """
    from .kinds import REGISTRY

    kind = REGISTRY.get(constraint.kind)
    if kind is None:
        raise Unclassifiable(f"constraint kind {constraint.kind!r} has no pattern mapping")
    if kind.meta:
        return None
    shape = kind.shape(constraint.params)
    if shape.target not in TARGETS:
        raise Unclassifiable(f"kind {constraint.kind!r} maps to unknown target {shape.target!r}")
    external = set(shape.sources) - {1}
    sources = set(external)
    if shape.self_template or not external:
        sources.add(1)
    if shape.modified and shape.conditional:
        template = "BC"
    elif shape.conditional:
        template = "C"
    elif shape.modified:
        template = "B"
    else:
        template = "A"
    return PatternCode(tuple(sorted(sources)), template, shape.target)


def effective_code(constraint, spec=None) -> PatternCode | None:
    if constraint.pattern is not None:
        return constraint.pattern
    return classify(constraint, spec)
