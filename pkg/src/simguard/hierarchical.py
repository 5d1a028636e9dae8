"""Schema validation for nested documents.

Supports the keyword subset ``type``, ``properties``, ``required``,
``additionalProperties``, ``minimum``, ``maximum``, ``enum`` and ``items``.
Nothing else (no ``$ref``, no composition keywords).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import DocumentSyntaxError, DuplicateKey, FileMissing, SpecError
from .model import (
    MISSING,
    DocumentTree,
    Locus,
    Violation,
    is_numeric,
    join_path,
    load_document,
    render_cell,
    resolve_path,
    split_path,
)

NODE_TYPES = ("object", "array", "number", "integer", "string", "boolean")
_KEYWORDS = {"type", "properties", "required", "additionalProperties", "minimum", "maximum", "enum", "items",
             "description", "title", "$schema"}


@dataclass(frozen=True)
class NodeSchema:
    type: str | None = None
    properties: dict[str, NodeSchema] = field(default_factory=dict)
    required: tuple[str, ...] = ()
    additional_properties: bool = True
    minimum: float | None = None
    maximum: float | None = None
    enum: tuple | None = None
    items: NodeSchema | None = None

    def __post_init__(self):
        if self.type is not None and self.type not in NODE_TYPES:
            raise SpecError(f"schema: unknown type {self.type!r}")
        if (self.properties or self.required) and self.type not in (None, "object"):
            raise SpecError("schema: properties/required only apply to objects")
        if self.items is not None and self.type not in (None, "array"):
            raise SpecError("schema: items only applies to arrays")
        if self.minimum is not None and self.maximum is not None and self.minimum > self.maximum:
            raise SpecError("schema: minimum exceeds maximum")

    @classmethod
    def from_dict(cls, raw: dict, where: str = "") -> NodeSchema:
        if not isinstance(raw, dict):
            raise SpecError(f"schema{where}: expected a mapping")
        unknown = set(raw) - _KEYWORDS
        if unknown:
            raise SpecError(f"schema{where}: unsupported keyword(s) {sorted(unknown)}")
        props = raw.get("properties", {})
        if not isinstance(props, dict):
            raise SpecError(f"schema{where}: properties must be a mapping")
        required = raw.get("required", [])
        if not isinstance(required, list) or not all(isinstance(r, str) for r in required):
            raise SpecError(f"schema{where}: required must be a list of names")
        for bound in ("minimum", "maximum"):
            if bound in raw and not is_numeric(raw[bound]):
                raise SpecError(f"schema{where}: {bound} must be a number")
        enum = raw.get("enum")
        if enum is not None and (not isinstance(enum, list) or not enum):
            raise SpecError(f"schema{where}: enum must be a non-empty list")
        additional = raw.get("additionalProperties", True)
        if not isinstance(additional, bool):
            raise SpecError(f"schema{where}: additionalProperties must be a boolean")
        items = raw.get("items")
        return cls(
            type=raw.get("type"),
            properties={k: cls.from_dict(v, f"{where}/{k}") for k, v in props.items()},
            required=tuple(required),
            additional_properties=additional,
            minimum=raw.get("minimum"),
            maximum=raw.get("maximum"),
            enum=tuple(enum) if enum is not None else None,
            items=cls.from_dict(items, f"{where}[]") if items is not None else None,
        )

    def to_dict(self) -> dict:
        out: dict[str, Any] = {}
        if self.type is not None:
            out["type"] = self.type
        if self.properties:
            out["properties"] = {k: v.to_dict() for k, v in self.properties.items()}
        if self.required:
            out["required"] = list(self.required)
        if not self.additional_properties:
            out["additionalProperties"] = False
        if self.minimum is not None:
            out["minimum"] = self.minimum
        if self.maximum is not None:
            out["maximum"] = self.maximum
        if self.enum is not None:
            out["enum"] = list(self.enum)
        if self.items is not None:
            out["items"] = self.items.to_dict()
        return out


def node_type(value) -> str:
    if isinstance(value, dict):
        return "object"
    if isinstance(value, list):
        return "array"
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, int):
        return "integer"
    if isinstance(value, float):
        return "number"
    if value is None:
        return "null"
    return "string"


def _matches_type(value, expected: str) -> bool:
    actual = node_type(value)
    if expected == "number":
        return actual in ("number", "integer")
    if expected == "integer":
        return actual == "integer" or (actual == "number" and float(value).is_integer())
    return actual == expected


def _enum_equal(a, b) -> bool:
    if isinstance(a, bool) or isinstance(b, bool):
        return type(a) is type(b) and a == b
    if is_numeric(a) and is_numeric(b):
        return a == b
    return type(a) is type(b) and a == b


def _render(value) -> str:
    if isinstance(value, (dict, list)):
        return node_type(value)
    return render_cell(value)


def _walk(node, schema: NodeSchema, trail: list, source: str, out: list[Violation]) -> None:
    path = join_path(trail)

    def flag(message: str, at: str = path, offending=node):
        out.append(Violation(Locus.at_path(at), message, None if offending is None else _render(offending), source))

    if schema.type is not None and not _matches_type(node, schema.type):
        flag(f"expected {schema.type}, got {node_type(node)}")
        return
    if schema.enum is not None and not any(_enum_equal(node, e) for e in schema.enum):
        flag(f"value not in enum {list(schema.enum)}")
    if is_numeric(node):
        if schema.minimum is not None and node < schema.minimum:
            flag(f"value below minimum {schema.minimum}")
        if schema.maximum is not None and node > schema.maximum:
            flag(f"value above maximum {schema.maximum}")
    if isinstance(node, dict):
        for name in schema.required:
            if name not in node:
                flag(f"missing required property '{name}'", offending=None)
        for key in sorted(node):
            child = schema.properties.get(key)
            if child is not None:
                _walk(node[key], child, [*trail, key], source, out)
            elif not schema.additional_properties:
                out.append(Violation(
                    Locus.at_path(join_path([*trail, key])), f"unexpected property '{key}'", key, source,
                ))
    elif isinstance(node, list) and schema.items is not None:
        for i, item in enumerate(node):
            _walk(item, schema.items, [*trail, str(i)], source, out)


def check_document(doc: DocumentTree, schema: NodeSchema, at: str | None = None) -> list[Violation]:
    """Validate ``doc`` (or the subtree at ``at``) against ``schema``."""
    root = doc.root
    trail: list = []
    if at:
        root = resolve_path(doc.root, at)
        trail = split_path(at)
        if root is MISSING:
            return [Violation(Locus.whole_file(), f"section '{at}' not found", None, doc.source_path)]
    out: list[Violation] = []
    _walk(root, schema, trail, doc.source_path, out)
    return out


def check_syntax(path) -> list[Violation]:
    try:
        load_document(path)
    except (DocumentSyntaxError, DuplicateKey) as exc:
        return [Violation(Locus.whole_file(), str(exc), None, str(path))]
    except FileMissing as exc:
        return [Violation(Locus.whole_file(), str(exc), None, str(path))]
    return []


def load_schema(raw_or_path, base_dir: str = ".") -> NodeSchema:
    if isinstance(raw_or_path, dict):
        return NodeSchema.from_dict(raw_or_path)
    path = Path(base_dir) / raw_or_path
    try:
        doc = load_document(path)
    except (FileMissing, DocumentSyntaxError, DuplicateKey) as exc:
        raise SpecError(f"cannot load schema {path}: {exc}") from None
    return NodeSchema.from_dict(doc.root)
