"""Anonymisation for researcher access: suppression, keyed pseudonyms,
date generalization.

* remove_paths are deleted outright (a trailing wildcard segment removes
  every child at that depth);
* pseudonym_paths get a stable keyed digest: "anon-" + HMAC-SHA256(key,
  value)[:32] — the prefix marks already-pseudonymized values, which makes
  the operation idempotent;
* generalize_year_paths replace a date-leading text ("1984-03-12") with a
  sibling `<name>_year` integer field, dropping the original.

Everything else is preserved; the output record is re-identified.
"""

from __future__ import annotations

import hashlib
import hmac
import re
from dataclasses import dataclass

from ..errors import PolicyError
from ..fields import MISSING, field_delete, field_get, field_set, parse_path
from ..records import MetaRecord, rebuild

PSEUDONYM_PREFIX = "anon-"
_YEAR_LEAD = r"^\d{4}-"


@dataclass(frozen=True)
class AnonymisationPolicy:
    remove_paths: tuple[str, ...]
    pseudonym_paths: tuple[str, ...]
    generalize_year_paths: tuple[str, ...]

    def validate_shape(self) -> None:
        for path in self.remove_paths + self.pseudonym_paths + self.generalize_year_paths:
            if not isinstance(path, str) or not path:
                raise PolicyError(f"bad policy path {path!r}")
            for seg in path.split("."):
                if seg == "*":
                    continue
                try:
                    parse_path(seg)
                except Exception as exc:
                    raise PolicyError(f"bad policy path {path!r}: {exc}") from None

    def to_value(self) -> dict:
        return {
            "generalize_year_paths": list(self.generalize_year_paths),
            "kind": "anonymise_policy",
            "pseudonym_paths": list(self.pseudonym_paths),
            "remove_paths": list(self.remove_paths),
        }

    @staticmethod
    def from_value(value: dict) -> "AnonymisationPolicy":
        try:
            policy = AnonymisationPolicy(
                remove_paths=tuple(value.get("remove_paths", [])),
                pseudonym_paths=tuple(value.get("pseudonym_paths", [])),
                generalize_year_paths=tuple(value.get("generalize_year_paths", [])),
            )
        except TypeError as exc:
            raise PolicyError(f"bad policy: {exc}") from None
        policy.validate_shape()
        return policy

    @staticmethod
    def default() -> "AnonymisationPolicy":
        return AnonymisationPolicy(
            remove_paths=(
                "free_notes",
                "password_digest",
                "password_salt",
                "profile.contact",
                "profile.name",
                "username",
            ),
            pseudonym_paths=(
                "annotations.*.author_id",
                "assigned_by",
                "assigned_doctors.*",
                "author_id",
                "created_by",
                "patient_id",
                "user_id",
            ),
            generalize_year_paths=("profile.birth_date",),
        )


def pseudonym(key: bytes, value: str) -> str:
    digest = hmac.new(key, value.encode("utf-8"), hashlib.sha256).hexdigest()
    return PSEUDONYM_PREFIX + digest[:32]


def _expand_wildcards(tree, path: str) -> list[str]:
    """Concrete paths for a policy path, resolving '*' against the tree."""
    segments = path.split(".")
    paths = [""]
    node_stack = [(tree, "")]
    for seg in segments:
        next_stack = []
        for node, prefix in node_stack:
            if seg == "*":
                if isinstance(node, dict):
                    keys = sorted(node.keys())
                elif isinstance(node, list):
                    keys = [str(i) for i in range(len(node))]
                else:
                    continue
            else:
                keys = [seg]
            for key in keys:
                child = field_get(node, key) if isinstance(node, (dict, list)) else MISSING
                if child is MISSING:
                    continue
                next_stack.append((child, f"{prefix}.{key}" if prefix else key))
        node_stack = next_stack
    return [prefix for _, prefix in node_stack]


def anonymise(record: MetaRecord, policy: AnonymisationPolicy, key: bytes) -> MetaRecord:
    """Anonymised copy of a hospital record; idempotent and pseudonym-stable."""
    policy.validate_shape()
    tree = record.fields

    for path in policy.remove_paths:
        for concrete in _expand_wildcards(tree, path):
            tree, _ = field_delete(tree, concrete)

    for path in policy.pseudonym_paths:
        for concrete in _expand_wildcards(tree, path):
            value = field_get(tree, concrete)
            if isinstance(value, str) and not value.startswith(PSEUDONYM_PREFIX):
                tree = field_set(tree, concrete, pseudonym(key, value))

    for path in policy.generalize_year_paths:
        for concrete in _expand_wildcards(tree, path):
            value = field_get(tree, concrete)
            if isinstance(value, str) and re.match(_YEAR_LEAD, value):
                tree, _ = field_delete(tree, concrete)
                tree = field_set(tree, concrete + "_year", int(value[:4]))

    if tree is record.fields:
        return record
    return rebuild(record, fields=tree)
