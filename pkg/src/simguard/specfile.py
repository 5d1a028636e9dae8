"""Guard-spec documents: loading, validation and emission.

A guard spec is a YAML (or JSON) document::

    name: flee-inputs
    files:                      # logical name -> glob, relative to the inputs dir
      locations: locations.csv
      routes: routes.csv
    config: simsettings.yml     # optional simulation configuration
    bindings:                   # symbolic name -> slash path into the config
      sim_period: simulation/period_length
    references:                 # external lookup tables
      calendar: {map: {"2023-01": 31}}
    constraints:
      - id: loc.population
        kind: column
        on: locations
        severity: error         # or warning
        pattern: 1.A.i          # optional; derived when absent
        params: {column: population, type: real, ge: 0, nullable: true}
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

import yaml

from .errors import BadPatternCode, DocumentSyntaxError, DuplicateKey, FileMissing, SpecError
from .kinds import REGISTRY
from .model import (
    SEVERITIES,
    ConfigRef,
    ConstraintDecl,
    GuardSpec,
    ReferenceRef,
    StrictLoader,
    ReferenceTable,
    load_document,
    load_tabular,
    parse_document_text,
    validate_path,
)
from .patterns import parse_code

_LINE_BREAKS = frozenset("\x85  ")


class _Dumper(yaml.SafeDumper):
    """Emitter whose quoting agrees with the loader's scalar resolution."""

    def choose_scalar_style(self):
        # unicode line breaks are folded inside single quotes; double quotes escape them
        if self.event.value and not _LINE_BREAKS.isdisjoint(self.event.value):
            return '"'
        return super().choose_scalar_style()


_Dumper.yaml_implicit_resolvers = StrictLoader.yaml_implicit_resolvers


def dump_yaml(obj, **kw) -> str:
    return yaml.dump(obj, Dumper=_Dumper, sort_keys=False, allow_unicode=True, **kw)


TOP_LEVEL_KEYS = {"name", "files", "config", "bindings", "references", "constraints"}
CONSTRAINT_KEYS = {"id", "kind", "on", "params", "severity", "pattern", "tolerance"}


def load_guard_spec(path) -> GuardSpec:
    path = Path(path)
    try:
        doc = load_document(path)
    except (FileMissing, DocumentSyntaxError, DuplicateKey) as exc:
        raise SpecError(f"cannot read guard spec: {exc}") from None
    return spec_from_dict(doc.root, base_dir=str(path.parent))


def parse_guard_spec(text: str, base_dir: str = ".") -> GuardSpec:
    try:
        doc = parse_document_text(text, "<spec>")
    except (DocumentSyntaxError, DuplicateKey) as exc:
        raise SpecError(f"cannot read guard spec: {exc}") from None
    return spec_from_dict(doc.root, base_dir=base_dir)


def _load_reference(name: str, raw, base_dir: str) -> ReferenceTable:
    if not isinstance(raw, dict) or len(set(raw) & {"values", "map", "file"}) != 1:
        raise SpecError(f"reference '{name}': give exactly one of values / map / file")
    if "values" in raw:
        values = raw["values"]
        if not isinstance(values, list):
            raise SpecError(f"reference '{name}': values must be a list")
        return ReferenceTable(name, frozenset(v for v in values if v is not None))
    if "map" in raw:
        if not isinstance(raw["map"], dict):
            raise SpecError(f"reference '{name}': map must be a mapping")
        return ReferenceTable(name, dict(raw["map"]))
    try:
        ds = load_tabular(Path(base_dir) / raw["file"])
    except FileMissing as exc:
        raise SpecError(f"reference '{name}': {exc}") from None
    if "column" in raw:
        if not ds.has_column(raw["column"]):
            raise SpecError(f"reference '{name}': column {raw['column']!r} not in {raw['file']}")
        return ReferenceTable(name, frozenset(v for v in ds.column(raw["column"]) if v is not None))
    if "key" in raw and "value" in raw:
        for col in (raw["key"], raw["value"]):
            if not ds.has_column(col):
                raise SpecError(f"reference '{name}': column {col!r} not in {raw['file']}")
        keys, vals = ds.column(raw["key"]), ds.column(raw["value"])
        return ReferenceTable(name, {k: v for k, v in zip(keys, vals) if k is not None})
    raise SpecError(f"reference '{name}': file references need 'column' or 'key'+'value'")


def _collect_refs(obj, found: list):
    if isinstance(obj, (ConfigRef, ReferenceRef)):
        found.append(obj)
    elif hasattr(obj, "__dataclass_fields__"):
        for name in obj.__dataclass_fields__:
            _collect_refs(getattr(obj, name), found)
    elif isinstance(obj, (tuple, list)):
        for v in obj:
            _collect_refs(v, found)


def spec_from_dict(raw: Any, base_dir: str = ".") -> GuardSpec:
    if not isinstance(raw, dict):
        raise SpecError("guard spec must be a mapping")
    unknown = set(raw) - TOP_LEVEL_KEYS
    if unknown:
        raise SpecError(f"guard spec: unknown top-level key(s) {sorted(unknown)}")
    name = str(raw.get("name", "unnamed"))
    files = raw.get("files") or {}
    if not isinstance(files, dict) or not all(isinstance(v, str) for v in files.values()):
        raise SpecError("guard spec: 'files' must map logical names to globs")
    bindings = raw.get("bindings") or {}
    if not isinstance(bindings, dict):
        raise SpecError("guard spec: 'bindings' must be a mapping")
    for key, path in bindings.items():
        try:
            validate_path(path)
        except ValueError as exc:
            raise SpecError(f"binding '{key}': {exc}") from None
    config = raw.get("config")
    if config is not None and not isinstance(config, str):
        raise SpecError("guard spec: 'config' must be a path")
    if bindings and config is None:
        raise SpecError("guard spec: bindings declared without a config file")
    references = {
        str(k): _load_reference(str(k), v, base_dir) for k, v in (raw.get("references") or {}).items()
    }
    entries = raw.get("constraints") or []
    if not isinstance(entries, list):
        raise SpecError("guard spec: 'constraints' must be a list")
    constraints = []
    seen: set[str] = set()
    for i, entry in enumerate(entries):
        decl = constraint_from_dict(entry, i, base_dir)
        if decl.id in seen:
            raise SpecError(f"duplicate constraint id '{decl.id}'")
        seen.add(decl.id)
        refs: list = []
        _collect_refs(decl.params, refs)
        for ref in refs:
            if isinstance(ref, ConfigRef) and ref.name not in bindings:
                raise SpecError(f"constraint '{decl.id}': unknown config binding '{ref.name}'")
            if isinstance(ref, ReferenceRef) and ref.name not in references:
                raise SpecError(f"constraint '{decl.id}': unknown reference table '{ref.name}'")
        if decl.kind == "config_gate" and config is None:
            raise SpecError(f"constraint '{decl.id}': config_gate needs a config file")
        constraints.append(decl)
    return GuardSpec(
        name=name,
        constraints=tuple(constraints),
        files=dict(files),
        config=config,
        config_bindings=dict(bindings),
        references=references,
        base_dir=base_dir,
    )


def constraint_from_dict(entry, index: int, base_dir: str) -> ConstraintDecl:
    where = f"constraint #{index}"
    if not isinstance(entry, dict):
        raise SpecError(f"{where}: expected a mapping")
    unknown = set(entry) - CONSTRAINT_KEYS
    if unknown:
        raise SpecError(f"{where}: unknown key(s) {sorted(unknown)}")
    for key in ("id", "kind", "on"):
        if not isinstance(entry.get(key), str) or not entry[key]:
            raise SpecError(f"{where}: '{key}' is required")
    cid = entry["id"]
    kind = REGISTRY.get(entry["kind"])
    if kind is None:
        raise SpecError(f"constraint '{cid}': unknown kind {entry['kind']!r}")
    severity = entry.get("severity", "error")
    if severity not in SEVERITIES:
        raise SpecError(f"constraint '{cid}': severity must be error or warning")
    raw_params = entry.get("params") or {}
    tolerance = entry.get("tolerance")
    if tolerance is not None:
        if kind.name != "summation":
            raise SpecError(f"constraint '{cid}': tolerance only applies to summation")
        raw_params = {**raw_params, "tolerance": raw_params.get("tolerance", tolerance)}
    params = kind.parse(raw_params, f"constraint '{cid}'", base_dir)
    pattern = None
    if entry.get("pattern") is not None:
        if kind.meta:
            raise SpecError(f"constraint '{cid}': file-set checks carry no pattern code")
        try:
            pattern = parse_code(str(entry["pattern"]))
        except BadPatternCode as exc:
            raise SpecError(f"constraint '{cid}': {exc}") from None
    return ConstraintDecl(
        id=cid,
        on=entry["on"],
        kind=kind.name,
        params=params,
        raw_params=raw_params,
        severity=severity,
        pattern=pattern,
        tolerance=tolerance,
    )


def constraint_to_dict(decl: ConstraintDecl) -> dict:
    out: dict[str, Any] = {"id": decl.id, "kind": decl.kind, "on": decl.on}
    if decl.severity != "error":
        out["severity"] = decl.severity
    if decl.pattern is not None:
        out["pattern"] = str(decl.pattern)
    out["params"] = _plain(dict(decl.raw_params))
    return out


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted(_plain(v) for v in obj)
    return obj


def dump_constraints(decls, comment: str | None = None) -> str:
    """YAML for a constraint list, one block per constraint, stable ordering."""
    chunks = []
    for decl in decls:
        text = dump_yaml([constraint_to_dict(decl)], default_flow_style=None, width=100)
        body = "".join("  " + line + "\n" for line in text.splitlines())
        if comment:
            body = f"  # {comment}\n" + body
        chunks.append(body)
    return "".join(chunks)


def dump_guard_spec(spec_header: dict, decls, comment: str | None = None) -> str:
    header = dump_yaml(_plain(spec_header), default_flow_style=False)
    body = dump_constraints(decls, comment)
    return header + "constraints:\n" + (body if body else "  []\n")
