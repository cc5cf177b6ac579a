"""Schema validation: syntactic (kinds) and semantic (ranges, cross-field).

Severity policy: missing_required and wrong_kind are always errors and
reject a record at ingest. out_of_range and cross_field are errors for
hospital schemas (clinical data is strict) and warnings everywhere else,
so research and grower imports land with warnings.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

from ..errors import ConfigError
from ..fields import MISSING, field_get, kind_of, parse_path

KINDS = {"null", "boolean", "integer", "decimal", "text", "list", "map"}


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


class IssueKind(str, Enum):
    MISSING_REQUIRED = "missing_required"
    WRONG_KIND = "wrong_kind"
    OUT_OF_RANGE = "out_of_range"
    CROSS_FIELD = "cross_field"
    ENCODING = "encoding"


@dataclass(frozen=True)
class ValidationIssue:
    severity: Severity
    kind: IssueKind
    path: Optional[str]
    message: str

    def describe(self) -> str:
        where = f" at {self.path}" if self.path else ""
        return f"{self.kind.value}{where}: {self.message}"

    def to_value(self) -> dict:
        return {
            "kind": self.kind.value,
            "message": self.message,
            "path": self.path,
            "severity": self.severity.value,
        }


@dataclass(frozen=True)
class SchemaConstraint:
    schema_ref: str
    required_paths: tuple[tuple[str, str], ...] = ()          # (path, expected kind)
    range_checks: tuple[tuple[str, float, float], ...] = ()   # (path, min, max)
    cross_field_checks: tuple[tuple[str, str, str], ...] = () # (path_a, relation, path_b)

    def validate_shape(self) -> None:
        for path, kind in self.required_paths:
            parse_path(path)
            if kind not in KINDS:
                raise ConfigError(f"schema {self.schema_ref}: unknown kind {kind!r}")
        for path, lo, hi in self.range_checks:
            parse_path(path)
            if lo > hi:
                raise ConfigError(f"schema {self.schema_ref}: range min {lo} > max {hi}")
        for path_a, relation, path_b in self.cross_field_checks:
            parse_path(path_a)
            parse_path(path_b)
            if relation not in ("<=", "<", "=="):
                raise ConfigError(f"schema {self.schema_ref}: unknown relation {relation!r}")

    def to_value(self) -> dict:
        return {
            "cross_field_checks": [list(c) for c in self.cross_field_checks],
            "kind": "schema",
            "range_checks": [[p, lo, hi] for p, lo, hi in self.range_checks],
            "required_paths": [list(r) for r in self.required_paths],
            "schema_ref": self.schema_ref,
        }

    @staticmethod
    def from_value(value: dict) -> "SchemaConstraint":
        try:
            schema = SchemaConstraint(
                schema_ref=value["schema_ref"],
                required_paths=tuple((p, k) for p, k in value.get("required_paths", [])),
                range_checks=tuple((p, lo, hi) for p, lo, hi in value.get("range_checks", [])),
                cross_field_checks=tuple(
                    (a, rel, b) for a, rel, b in value.get("cross_field_checks", [])
                ),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad schema config: {exc}") from None
        schema.validate_shape()
        return schema

    @staticmethod
    def empty(schema_ref: str) -> "SchemaConstraint":
        return SchemaConstraint(schema_ref=schema_ref)


def _semantic_severity(schema_ref: str) -> Severity:
    return Severity.ERROR if schema_ref.startswith("hospital/") else Severity.WARNING


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def validate(record_fields: dict, schema: SchemaConstraint) -> list[ValidationIssue]:
    """Pure check of a field tree against one schema; one issue per violation."""
    issues: list[ValidationIssue] = []
    semantic = _semantic_severity(schema.schema_ref)

    for path, expected_kind in schema.required_paths:
        value = field_get(record_fields, path)
        if value is MISSING:
            issues.append(ValidationIssue(
                Severity.ERROR, IssueKind.MISSING_REQUIRED, path,
                f"required field is missing (expected {expected_kind})",
            ))
        elif kind_of(value) != expected_kind:
            issues.append(ValidationIssue(
                Severity.ERROR, IssueKind.WRONG_KIND, path,
                f"expected {expected_kind}, got {kind_of(value)}",
            ))

    for path, lo, hi in schema.range_checks:
        value = field_get(record_fields, path)
        if value is MISSING or not _is_number(value):
            continue  # absence/kind problems are the checks above
        if not (lo <= value <= hi):
            issues.append(ValidationIssue(
                semantic, IssueKind.OUT_OF_RANGE, path,
                f"value {value!r} outside [{lo}, {hi}]",
            ))

    for path_a, relation, path_b in schema.cross_field_checks:
        a = field_get(record_fields, path_a)
        b = field_get(record_fields, path_b)
        if a is MISSING or b is MISSING:
            continue
        if relation == "==":
            if kind_of(a) != kind_of(b) or a != b:
                issues.append(ValidationIssue(
                    semantic, IssueKind.CROSS_FIELD, path_a,
                    f"{path_a} must equal {path_b}",
                ))
            continue
        if not (_is_number(a) and _is_number(b)):
            continue
        ok = a <= b if relation == "<=" else a < b
        if not ok:
            issues.append(ValidationIssue(
                semantic, IssueKind.CROSS_FIELD, path_a,
                f"{path_a} must be {relation} {path_b} ({a!r} vs {b!r})",
            ))

    return issues


def has_errors(issues: list[ValidationIssue]) -> bool:
    return any(i.severity == Severity.ERROR for i in issues)
