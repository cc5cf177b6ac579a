"""Rule-based categorization: condition -> tag.

Tags of all satisfied conditions are deduplicated and sorted; materialize
stores them under the record's "tags" field. `contains` is case-insensitive
(casefold); lt/gt require numeric literals and numeric field values.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any

from ..errors import RuleError
from ..fields import MISSING, field_get, kind_of, parse_path
from ..records import MetaRecord, rebuild

OPERATORS = {"contains", "equals", "lt", "gt"}
_TAG = re.compile(r"^[a-z0-9]+(-[a-z0-9]+)*$")


@dataclass(frozen=True)
class CategoryRule:
    rule_id: str
    path: str
    operator: str
    literal: Any
    tag: str

    def validate_shape(self) -> None:
        parse_path(self.path)
        if self.operator not in OPERATORS:
            raise RuleError(self.rule_id, f"unknown operator {self.operator!r}")
        if not _TAG.match(self.tag):
            raise RuleError(self.rule_id, f"tag {self.tag!r} is not lowercase kebab-case")
        if self.operator == "contains" and not isinstance(self.literal, str):
            raise RuleError(self.rule_id, "contains needs a text literal")
        if self.operator in ("lt", "gt"):
            if isinstance(self.literal, bool) or not isinstance(self.literal, (int, float)):
                raise RuleError(self.rule_id, f"{self.operator} needs a numeric literal")

    def to_value(self) -> dict:
        return {
            "literal": self.literal,
            "operator": self.operator,
            "path": self.path,
            "rule_id": self.rule_id,
            "tag": self.tag,
        }

    @staticmethod
    def from_value(value: dict) -> "CategoryRule":
        try:
            rule = CategoryRule(
                rule_id=value["rule_id"],
                path=value["path"],
                operator=value["operator"],
                literal=value["literal"],
                tag=value["tag"],
            )
        except (KeyError, TypeError) as exc:
            raise RuleError(str(value.get("rule_id", "?")), f"bad rule: {exc}") from None
        rule.validate_shape()
        return rule

    def matches(self, tree: dict) -> bool:
        value = field_get(tree, self.path)
        if value is MISSING:
            return False
        if self.operator == "contains":
            if not isinstance(value, str):
                return False
            return self.literal.casefold() in value.casefold()
        if self.operator == "equals":
            return kind_of(value) == kind_of(self.literal) and value == self.literal
        # lt / gt
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise RuleError(
                self.rule_id,
                f"{self.operator} applied to {kind_of(value)} value at {self.path!r}",
            )
        return value < self.literal if self.operator == "lt" else value > self.literal


def categorize(record: MetaRecord, rules: list[CategoryRule]) -> list[str]:
    """Sorted, deduplicated tags of all satisfied rule conditions."""
    for rule in rules:
        rule.validate_shape()
    tags = {rule.tag for rule in rules if rule.matches(record.fields)}
    return sorted(tags)


def apply_categorize(record: MetaRecord, rules: list[CategoryRule]) -> tuple[MetaRecord, list[str]]:
    """Categorize and store the tags under the "tags" field (re-identified)."""
    tags = categorize(record, rules)
    if not rules:
        return record, tags
    fields = dict(record.fields)
    fields["tags"] = tags
    return rebuild(record, fields=fields), tags
