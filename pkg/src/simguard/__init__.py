"""Model-input verification for simulation input files."""

from __future__ import annotations

from .errors import RunConfigurationError, SimguardError
from .model import GuardSpec, TabularDataset, DocumentTree, Violation, load_document, load_tabular
from .patterns import PatternCode, classify, parse_code
from .specfile import load_guard_spec, parse_guard_spec

__version__ = "0.1.0"

__all__ = [
    "DocumentTree",
    "GuardSpec",
    "PatternCode",
    "RunConfigurationError",
    "SimguardError",
    "TabularDataset",
    "Violation",
    "classify",
    "load_document",
    "load_guard_spec",
    "load_tabular",
    "parse_code",
    "parse_guard_spec",
]
