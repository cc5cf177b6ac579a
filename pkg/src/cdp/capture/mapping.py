"""Declarative source-to-meta-format mapping.

A spec is an ordered rule list: copy source_path -> target_path with an
optional coercion. A spec with no rules is the identity mapping: the whole
parsed unit becomes the record's field tree (used by workflow objects whose
shape is open-ended). Specs serialize canonically; their digest feeds the
lineage log.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional

from ..canonical import digest_value
from ..errors import CoercionError, ConfigError, MappingError
from ..fields import MISSING, field_get, field_set, parse_path, validate_field_tree
from ..records import (
    MetaRecord,
    SourceDescriptor,
    StructureClass,
    SubDomain,
    build_record,
)
from ..store import RawDocument

COERCIONS = {"none", "to_integer", "to_decimal", "to_boolean", "trim_text"}

_TRUE_WORDS = {"true", "1", "yes"}
_FALSE_WORDS = {"false", "0", "no"}


@dataclass(frozen=True)
class MappingRule:
    source_path: str
    target_path: str
    coercion: str = "none"
    required: bool = False


@dataclass(frozen=True)
class MappingSpec:
    spec_id: str
    source_format: str  # "delimited" | "tree"
    rules: tuple[MappingRule, ...]
    target_sub_domain: SubDomain
    schema_ref: str

    def validate_shape(self) -> None:
        if self.source_format not in ("delimited", "tree"):
            raise ConfigError(f"spec {self.spec_id}: bad source_format {self.source_format!r}")
        targets = set()
        for rule in self.rules:
            if rule.coercion not in COERCIONS:
                raise ConfigError(f"spec {self.spec_id}: unknown coercion {rule.coercion!r}")
            segments = parse_path(rule.target_path)
            if any(seg[0].isdigit() for seg in segments):
                raise ConfigError(
                    f"spec {self.spec_id}: target path {rule.target_path!r} may not index lists"
                )
            if rule.target_path in targets:
                raise ConfigError(f"spec {self.spec_id}: duplicate target {rule.target_path!r}")
            targets.add(rule.target_path)

    def to_value(self) -> dict:
        return {
            "kind": "mapping_spec",
            "rules": [
                {
                    "coercion": r.coercion,
                    "required": r.required,
                    "source_path": r.source_path,
                    "target_path": r.target_path,
                }
                for r in self.rules
            ],
            "schema_ref": self.schema_ref,
            "source_format": self.source_format,
            "spec_id": self.spec_id,
            "target_sub_domain": self.target_sub_domain.value,
        }

    def digest(self) -> str:
        return digest_value(self.to_value())

    @staticmethod
    def from_value(value: dict) -> "MappingSpec":
        try:
            spec = MappingSpec(
                spec_id=value["spec_id"],
                source_format=value["source_format"],
                rules=tuple(
                    MappingRule(
                        source_path=r["source_path"],
                        target_path=r["target_path"],
                        coercion=r.get("coercion", "none"),
                        required=bool(r.get("required", False)),
                    )
                    for r in value.get("rules", [])
                ),
                target_sub_domain=SubDomain(value["target_sub_domain"]),
                schema_ref=value["schema_ref"],
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad mapping spec: {exc}") from None
        spec.validate_shape()
        return spec


def _lookup(parsed: Any, source_path: str, is_row: bool) -> Any:
    if is_row:
        value = parsed.get(source_path, MISSING)
        # delimited cells are text; an empty cell counts as missing
        if value == "":
            return MISSING
        return value
    return field_get(parsed, source_path)


def coerce(value: Any, coercion: str, path: str) -> Any:
    if coercion == "none":
        return value
    if value is None:
        raise CoercionError(path, value, coercion)
    if coercion == "trim_text":
        if not isinstance(value, str):
            raise CoercionError(path, value, coercion)
        return value.strip()
    if coercion == "to_integer":
        if isinstance(value, bool):
            raise CoercionError(path, value, coercion)
        if isinstance(value, int):
            return value
        if isinstance(value, float) and value.is_integer():
            return int(value)
        if isinstance(value, str):
            try:
                return int(value.strip())
            except ValueError:
                raise CoercionError(path, value, coercion) from None
        raise CoercionError(path, value, coercion)
    if coercion == "to_decimal":
        if isinstance(value, bool):
            raise CoercionError(path, value, coercion)
        if isinstance(value, float):
            return value
        if isinstance(value, int):
            return float(value)
        if isinstance(value, str):
            try:
                number = float(value.strip())
            except ValueError:
                raise CoercionError(path, value, coercion) from None
            if number != number or number in (float("inf"), float("-inf")):
                raise CoercionError(path, value, coercion)
            return number
        raise CoercionError(path, value, coercion)
    if coercion == "to_boolean":
        if isinstance(value, bool):
            return value
        if isinstance(value, str):
            word = value.strip().lower()
            if word in _TRUE_WORDS:
                return True
            if word in _FALSE_WORDS:
                return False
        raise CoercionError(path, value, coercion)
    raise CoercionError(path, value, coercion)


def apply_mapping(
    parsed: Any,
    spec: MappingSpec,
    doc: RawDocument,
    structure_class: StructureClass,
) -> MetaRecord:
    """Build one MetaRecord from one logical unit (row or tree root)."""
    is_row = spec.source_format == "delimited"
    if not spec.rules:
        # identity mapping: the unit is the field tree
        if is_row:
            tree: dict = dict(parsed)
        elif isinstance(parsed, dict):
            tree = parsed
        else:
            raise MappingError(
                f"spec {spec.spec_id}: identity mapping needs a map root, got {type(parsed).__name__}"
            )
        validate_field_tree(tree)
    else:
        missing_required = [
            rule.source_path
            for rule in spec.rules
            if rule.required and _lookup(parsed, rule.source_path, is_row) is MISSING
        ]
        if missing_required:
            raise MappingError(
                f"spec {spec.spec_id}: missing required source paths: "
                + ", ".join(repr(p) for p in missing_required),
                missing=missing_required,
            )
        tree = {}
        for rule in spec.rules:
            value = _lookup(parsed, rule.source_path, is_row)
            if value is MISSING:
                continue
            try:
                tree = field_set(tree, rule.target_path, coerce(value, rule.coercion, rule.source_path))
            except CoercionError:
                raise
            except Exception as exc:
                raise MappingError(f"spec {spec.spec_id}: cannot set {rule.target_path!r}: {exc}") from None

    return build_record(
        source=SourceDescriptor(provider=doc.provider, raw_ref=doc.raw_id),
        sub_domain=spec.target_sub_domain,
        structure_class=structure_class,
        schema_ref=spec.schema_ref,
        created_at=doc.received_at,
        fields=tree,
    )
