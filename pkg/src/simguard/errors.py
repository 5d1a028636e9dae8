"""Exception hierarchy.

Errors deriving from :class:`RunConfigurationError` signal a broken run
(missing sibling files, bad spec, unresolvable bindings) and map to exit
code 2. Data defects are never raised; they are reported as violations.
"""

from __future__ import annotations


class SimguardError(Exception):
    """Base class for every error raised by simguard."""


class RunConfigurationError(SimguardError):
    """The run itself is misconfigured; maps to exit code 2."""


class FileMissing(RunConfigurationError, FileNotFoundError):
    def __init__(self, path):
        super().__init__(f"file not found: {path}")
        self.path = str(path)


class ParseError(SimguardError):
    """A delimited file could not be parsed."""

    def __init__(self, line: int, reason: str, path: str = ""):
        where = f"{path}:" if path else ""
        super().__init__(f"{where}line {line}: {reason}")
        self.line = line
        self.reason = reason
        self.path = path


class DocumentSyntaxError(SimguardError):
    def __init__(self, line: int, col: int, reason: str, path: str = ""):
        where = f"{path}:" if path else ""
        super().__init__(f"{where}{line}:{col}: {reason}")
        self.line = line
        self.col = col
        self.reason = reason
        self.path = path


class DuplicateKey(SimguardError):
    def __init__(self, path: str, line: int = 0, source: str = ""):
        where = f"{source}:" if source else ""
        super().__init__(f"{where}line {line}: duplicate key at '{path}'")
        self.path = path
        self.line = line


class SpecError(RunConfigurationError):
    """Guard spec or constraint parameters are invalid."""


class BadPatternCode(SimguardError, ValueError):
    pass


class BadSource(BadPatternCode):
    pass


class BadTemplate(BadPatternCode):
    pass


class BadTarget(BadPatternCode):
    pass


class Unclassifiable(SimguardError):
    pass


class ConfigBindingMissing(RunConfigurationError):
    def __init__(self, name: str, path: str = ""):
        detail = f" (path '{path}')" if path else ""
        super().__init__(f"config binding '{name}' cannot be resolved{detail}")
        self.name = name
        self.path = path


class ReferenceMissing(RunConfigurationError):
    def __init__(self, name: str, key: str | None = None):
        detail = f" key '{key}'" if key is not None else ""
        super().__init__(f"reference table '{name}'{detail} not found")
        self.name = name
        self.key = key


class SiblingFileMissing(RunConfigurationError):
    def __init__(self, name: str, detail: str = ""):
        super().__init__(f"sibling file '{name}' is not available{': ' + detail if detail else ''}")
        self.name = name


class SelectorEmpty(SimguardError):
    def __init__(self, selector: str):
        super().__init__(f"column selector {selector} matched no column")
        self.selector = selector


class SampleTooLarge(SimguardError):
    pass


class ProviderError(SimguardError):
    pass


class LocusConflict(SimguardError):
    pass
