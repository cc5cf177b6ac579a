"""Cleaning and correction rules.

Three rule kinds: drop a useless field, trim text, or normalize a
"number + unit" text into a decimal plus a sibling unit field. Every
mutation lands in the change log (with the removed value for drops), so
cleaning is auditable and, for trim/unit rules, invertible from the log.
"""

from __future__ import annotations

import fnmatch
import re
from dataclasses import dataclass
from typing import Any, Optional

from ..errors import RuleError
from ..fields import MISSING, field_delete, field_get, field_set, parse_path
from ..records import MetaRecord, rebuild

RULE_KINDS = {"drop_field", "unit_normalize", "trim_text"}


@dataclass(frozen=True)
class CleaningRule:
    rule_id: str
    kind: str
    path: str
    applies_to: str = "*"          # schema_ref glob
    pattern: Optional[str] = None  # unit_normalize: regex, group 1 = number
    target_unit: Optional[str] = None

    def validate_shape(self) -> None:
        if self.kind not in RULE_KINDS:
            raise RuleError(self.rule_id, f"unknown kind {self.kind!r}")
        parse_path(self.path)
        if self.kind == "unit_normalize":
            if not self.pattern or self.target_unit is None:
                raise RuleError(self.rule_id, "unit_normalize needs pattern and target_unit")
            try:
                compiled = re.compile(self.pattern)
            except re.error as exc:
                raise RuleError(self.rule_id, f"bad pattern: {exc}") from None
            if compiled.groups < 1:
                raise RuleError(self.rule_id, "pattern must capture the numeric part as group 1")

    def to_value(self) -> dict:
        return {
            "applies_to": self.applies_to,
            "kind": self.kind,
            "path": self.path,
            "pattern": self.pattern,
            "rule_id": self.rule_id,
            "target_unit": self.target_unit,
        }

    @staticmethod
    def from_value(value: dict) -> "CleaningRule":
        try:
            rule = CleaningRule(
                rule_id=value["rule_id"],
                kind=value["kind"],
                path=value["path"],
                applies_to=value.get("applies_to", "*"),
                pattern=value.get("pattern"),
                target_unit=value.get("target_unit"),
            )
        except (KeyError, TypeError) as exc:
            raise RuleError(str(value.get("rule_id", "?")), f"bad rule: {exc}") from None
        rule.validate_shape()
        return rule

    def applies(self, schema_ref: Optional[str]) -> bool:
        return fnmatch.fnmatchcase(schema_ref or "", self.applies_to)


ChangeLogEntry = tuple[str, str, Any, Any]  # (rule_id, path, before, after)


def clean(record: MetaRecord, rules: list[CleaningRule]) -> tuple[MetaRecord, list[ChangeLogEntry]]:
    """Apply rules in order; returns the (re-identified) record and change log.

    A record untouched by every rule is returned as-is with an empty log.
    """
    for rule in rules:
        rule.validate_shape()
    tree = record.fields
    change_log: list[ChangeLogEntry] = []
    for rule in rules:
        if not rule.applies(record.schema_ref):
            continue
        value = field_get(tree, rule.path)
        if value is MISSING:
            continue
        if rule.kind == "drop_field":
            tree, removed = field_delete(tree, rule.path)
            change_log.append((rule.rule_id, rule.path, removed, None))
        elif rule.kind == "trim_text":
            if isinstance(value, str):
                trimmed = value.strip()
                if trimmed != value:
                    tree = field_set(tree, rule.path, trimmed)
                    change_log.append((rule.rule_id, rule.path, value, trimmed))
        elif rule.kind == "unit_normalize":
            if not isinstance(value, str):
                continue
            match = re.match(rule.pattern, value)
            if not match:
                continue
            try:
                number = float(match.group(1))
            except (ValueError, IndexError) as exc:
                raise RuleError(rule.rule_id, f"pattern produced no number: {exc}") from None
            tree = field_set(tree, rule.path, number)
            unit_path = rule.path + "_unit"
            tree = field_set(tree, unit_path, rule.target_unit)
            change_log.append((rule.rule_id, rule.path, value, number))

    if not change_log:
        return record, []
    return rebuild(record, fields=tree), change_log
