"""Exception hierarchy for the platform.

Every domain failure derives from CdpError so callers (CLI, API) can map
them uniformly to exit codes / status codes. I/O problems use StorageError;
plain OSError from outside the store is left alone.
"""

from __future__ import annotations


class CdpError(Exception):
    """Base class for all domain errors."""


class InvariantViolation(CdpError):
    """A value breaks a structural invariant (bad digest, NaN, bad name...)."""


class ParseError(CdpError):
    """Malformed input bytes. Carries the byte offset where parsing failed."""

    def __init__(self, message: str, offset: int = -1, line: int = -1, column: int = -1):
        super().__init__(message)
        self.offset = offset
        self.line = line
        self.column = column


class PathSyntaxError(CdpError):
    """A field path has empty segments or malformed numeric indices."""


class MalformedId(CdpError):
    """An id is not a 64-char lowercase hex digest."""


class StorageError(CdpError):
    """An I/O failure inside the store."""


class MissingHeader(ParseError):
    """Delimited input has no header row."""

    def __init__(self, message: str = "empty input: no header row"):
        super().__init__(message, offset=0)


class RaggedRow(ParseError):
    """A delimited row's field count differs from the header's."""

    def __init__(self, line_no: int, expected: int, got: int):
        super().__init__(
            f"row at line {line_no} has {got} fields, header has {expected}",
            line=line_no,
        )
        self.line_no = line_no
        self.expected = expected
        self.got = got


class MappingError(CdpError):
    """A mapping spec could not be applied. Lists every missing required source path."""

    def __init__(self, message: str, missing: list[str] | None = None):
        super().__init__(message)
        self.missing = missing or []


class CoercionError(CdpError):
    """A source value cannot be coerced to the requested kind."""

    def __init__(self, path: str, value: object, target: str):
        super().__init__(f"cannot coerce {value!r} at {path!r} to {target}")
        self.path = path
        self.value = value
        self.target = target


class RuleError(CdpError):
    """A cleaning or categorization rule is malformed or misapplied."""

    def __init__(self, rule_id: str, message: str):
        super().__init__(f"rule {rule_id!r}: {message}")
        self.rule_id = rule_id


class UnknownDataset(CdpError):
    """No materialized dataset with that id."""


class ReplayError(CdpError):
    """Replay cannot proceed at a lineage event (missing input/config or mismatch)."""

    def __init__(self, seq: int, message: str):
        super().__init__(f"replay failed at event seq {seq}: {message}")
        self.seq = seq


class PolicyError(CdpError):
    """The anonymisation policy is malformed."""


class DimensionMismatch(CdpError):
    """Strain profiles disagree on feature dimensions."""


class ValidationFailed(CdpError):
    """A record was rejected by schema validation. Carries the issues."""

    def __init__(self, issues):
        detail = "; ".join(i.describe() for i in issues) or "validation failed"
        super().__init__(detail)
        self.issues = list(issues)


class Forbidden(CdpError):
    """The caller is not allowed to perform this operation."""


class Unauthorized(CdpError):
    """Missing or invalid credentials/token."""

    def __init__(self, message: str = "invalid credentials", code: str = "unauthorized"):
        super().__init__(message)
        self.code = code


class DuplicateUsername(CdpError):
    """Registration with a username that is already taken."""


class WeakPassword(CdpError):
    """Password shorter than the minimum length."""


class RoleNotGrantable(CdpError):
    """Researcher role cannot be requested at registration."""


class InvalidTransition(CdpError):
    """Illegal researcher-request state machine transition."""


class UnknownResource(CdpError):
    """Referenced user/case/form/assignment/record does not exist."""


class EmptyAnnotation(CdpError):
    """Case annotations must have non-empty text."""


class ConfigError(CdpError):
    """A configuration file is malformed or references unknown ids."""
