"""Canonical meta-format record: the envelope every captured datum lives in.

A record's id is the SHA-256 of its canonical serialization minus the id
key itself, so identity is content identity. Records are immutable values;
"changing" one means building a new record with a new id.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

from . import clock as clockmod
from .canonical import canonical_dumps, canonical_loads, is_hex_digest, sha256_hex
from .errors import InvariantViolation, MalformedId
from .fields import normalize, validate_field_tree

_PROVIDER = re.compile(r"^(hospital|grower|research):[A-Za-z0-9_.\-]+$")

ENVELOPE_KEYS = {
    "created_at",
    "fields",
    "id",
    "schema_ref",
    "source",
    "structure_class",
    "sub_domain",
}


class SubDomain(str, Enum):
    HOSPITAL = "hospital"
    GROWER = "grower"
    RESEARCH = "research"


class StructureClass(str, Enum):
    STRUCTURED = "structured"
    SEMI_STRUCTURED = "semi_structured"
    UNSTRUCTURED = "unstructured"


class Stage(str, Enum):
    CAPTURE = "capture"
    MAP = "map"
    VALIDATE = "validate"
    CLEAN = "clean"
    CATEGORIZE = "categorize"
    INDEX = "index"
    MATERIALIZE = "materialize"
    ANONYMISE = "anonymise"
    STORE = "store"


@dataclass(frozen=True)
class SourceDescriptor:
    provider: str
    raw_ref: Optional[str] = None

    def validate(self) -> None:
        if not _PROVIDER.match(self.provider):
            raise InvariantViolation(f"provider {self.provider!r} must match '<sub-domain>:<name>'")
        if self.raw_ref is not None and not is_hex_digest(self.raw_ref):
            raise MalformedId(f"raw_ref {self.raw_ref!r} is not a 64-char hex digest")


@dataclass(frozen=True, eq=False)
class MetaRecord:
    id: str
    source: SourceDescriptor
    sub_domain: SubDomain
    structure_class: StructureClass
    schema_ref: Optional[str]
    created_at: str
    fields: dict = field(default_factory=dict)

    def __eq__(self, other: object) -> bool:
        # ids digest the full content, so id equality is structural equality
        return isinstance(other, MetaRecord) and self.id == other.id

    def __hash__(self) -> int:
        return hash(self.id)

    def digest_basis(self) -> dict:
        """Envelope as a plain value tree, without the id."""
        return {
            "created_at": self.created_at,
            "fields": self.fields,
            "schema_ref": self.schema_ref,
            "source": {"provider": self.source.provider, "raw_ref": self.source.raw_ref},
            "structure_class": self.structure_class.value,
            "sub_domain": self.sub_domain.value,
        }

    def validate(self) -> None:
        self.source.validate()
        if self.schema_ref is not None and not isinstance(self.schema_ref, str):
            raise InvariantViolation("schema_ref must be text or null")
        clockmod.parse_timestamp(self.created_at)
        validate_field_tree(self.fields)
        expected = record_id_of(self)
        if self.id != expected:
            raise InvariantViolation(
                f"record id {self.id} does not match content digest {expected}"
            )


def record_id_of(record: MetaRecord) -> str:
    """Content digest over the canonical serialization of everything but id."""
    return sha256_hex(canonical_dumps(record.digest_basis()))


def build_record(
    *,
    source: SourceDescriptor,
    sub_domain: SubDomain,
    structure_class: StructureClass,
    schema_ref: Optional[str],
    created_at: str,
    fields: dict,
) -> MetaRecord:
    """Normalize, validate and content-address a new record."""
    record = MetaRecord(
        id="0" * 64,
        source=SourceDescriptor(normalize(source.provider), source.raw_ref),
        sub_domain=sub_domain,
        structure_class=structure_class,
        schema_ref=normalize(schema_ref) if schema_ref is not None else None,
        created_at=created_at,
        fields=normalize(fields),
    )
    record = MetaRecord(
        id=record_id_of(record),
        source=record.source,
        sub_domain=record.sub_domain,
        structure_class=record.structure_class,
        schema_ref=record.schema_ref,
        created_at=record.created_at,
        fields=record.fields,
    )
    record.validate()
    return record


def rebuild(record: MetaRecord, **changes: Any) -> MetaRecord:
    """New record derived from `record` with `changes` applied and id recomputed."""
    return build_record(
        source=changes.get("source", record.source),
        sub_domain=changes.get("sub_domain", record.sub_domain),
        structure_class=changes.get("structure_class", record.structure_class),
        schema_ref=changes.get("schema_ref", record.schema_ref),
        created_at=changes.get("created_at", record.created_at),
        fields=changes.get("fields", record.fields),
    )


def canonical_serialize(record: MetaRecord) -> bytes:
    """Deterministic byte form of a record (envelope including id)."""
    record.validate()
    basis = record.digest_basis()
    basis["id"] = record.id
    return canonical_dumps(basis)


def canonical_parse(data: bytes) -> MetaRecord:
    """Parse canonical record bytes; inverse of canonical_serialize."""
    value = canonical_loads(data)
    if not isinstance(value, dict):
        raise InvariantViolation("record must be a map")
    if set(value.keys()) != ENVELOPE_KEYS:
        missing = ENVELOPE_KEYS - set(value.keys())
        extra = set(value.keys()) - ENVELOPE_KEYS
        raise InvariantViolation(f"bad record envelope (missing {sorted(missing)}, extra {sorted(extra)})")
    source = value["source"]
    if not isinstance(source, dict) or set(source.keys()) != {"provider", "raw_ref"}:
        raise InvariantViolation("bad source descriptor")
    try:
        sub_domain = SubDomain(value["sub_domain"])
        structure_class = StructureClass(value["structure_class"])
    except ValueError as exc:
        raise InvariantViolation(str(exc)) from None
    record = MetaRecord(
        id=value["id"],
        source=SourceDescriptor(source["provider"], source["raw_ref"]),
        sub_domain=sub_domain,
        structure_class=structure_class,
        schema_ref=value["schema_ref"],
        created_at=value["created_at"],
        fields=value["fields"],
    )
    record.validate()
    return record


@dataclass(frozen=True)
class LineageEvent:
    seq: int
    stage: Stage
    input_ids: tuple[str, ...]
    output_ids: tuple[str, ...]
    config_digest: str
    timestamp: str

    def to_value(self) -> dict:
        return {
            "config_digest": self.config_digest,
            "input_ids": list(self.input_ids),
            "output_ids": list(self.output_ids),
            "seq": self.seq,
            "stage": self.stage.value,
            "timestamp": self.timestamp,
        }

    @staticmethod
    def from_value(value: dict) -> "LineageEvent":
        try:
            return LineageEvent(
                seq=value["seq"],
                stage=Stage(value["stage"]),
                input_ids=tuple(value["input_ids"]),
                output_ids=tuple(value["output_ids"]),
                config_digest=value["config_digest"],
                timestamp=value["timestamp"],
            )
        except (KeyError, ValueError) as exc:
            raise InvariantViolation(f"bad lineage event: {exc}") from None


def event(
    stage: Stage,
    input_ids: list[str] | tuple[str, ...] = (),
    output_ids: list[str] | tuple[str, ...] = (),
    config_digest: str = "",
    timestamp: str = "1970-01-01T00:00:00Z",
) -> LineageEvent:
    """Lineage event with seq=0; the store assigns the real seq on append."""
    return LineageEvent(
        seq=0,
        stage=stage,
        input_ids=tuple(input_ids),
        output_ids=tuple(output_ids),
        config_digest=config_digest,
        timestamp=timestamp,
    )
