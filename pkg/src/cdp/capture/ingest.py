"""End-to-end ingest: raw storage, sniffing, parsing, mapping, validation.

The pipeline never throws for bad content: failures land in the report's
issue list with status `rejected`, and a rejected document leaves nothing
behind but its raw entry and the lineage trail. Rejection is per document —
if any produced record carries an error-severity issue the whole document
is rejected, so the typed zone is never partially written.

Every stage appends a lineage event; record timestamps come from the
document's received_at (persisted in the raw zone), which is what makes a
later replay byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Optional

from ..errors import CdpError, CoercionError, MappingError, ParseError
from ..quality.schema import (
    IssueKind,
    SchemaConstraint,
    Severity,
    ValidationIssue,
    has_errors,
    validate,
)
from ..records import MetaRecord, Stage, StructureClass, event
from ..store import RawDocument, Store
from .delimited import parse_delimited
from .detect import sniff
from .mapping import MappingSpec, apply_mapping
from .tree import parse_tree

if TYPE_CHECKING:
    from ..configs import ConfigRegistry


class IngestStatus(str, Enum):
    STORED = "stored"
    RAW_ONLY = "raw_only"
    DUPLICATE = "duplicate"
    REJECTED = "rejected"


@dataclass
class IngestReport:
    raw_id: str
    structure_class: StructureClass
    records_produced: int
    issues: list[ValidationIssue] = field(default_factory=list)
    status: IngestStatus = IngestStatus.RAW_ONLY
    record_ids: list[str] = field(default_factory=list)

    def to_value(self) -> dict:
        return {
            "issues": [i.to_value() for i in self.issues],
            "raw_id": self.raw_id,
            "record_ids": self.record_ids,
            "records_produced": self.records_produced,
            "status": self.status.value,
            "structure_class": self.structure_class.value,
        }


def _issue(kind: IssueKind, message: str, path: Optional[str] = None) -> ValidationIssue:
    return ValidationIssue(Severity.ERROR, kind, path, message)


class Ingestor:
    def __init__(self, store: Store, registry: "ConfigRegistry"):
        self.store = store
        self.registry = registry

    def logical_units(self, doc: RawDocument, spec: MappingSpec, label: str, delimiter):
        """Split a parsed document into mapping units (rows or tree roots)."""
        if label == "delimited":
            if spec.source_format != "delimited":
                raise MappingError(
                    f"spec {spec.spec_id} expects {spec.source_format} input, got delimited"
                )
            return parse_delimited(doc.data, delimiter or ",")
        if spec.source_format != "tree":
            raise MappingError(f"spec {spec.spec_id} expects {spec.source_format} input, got tree")
        root = parse_tree(doc.data, label)
        if isinstance(root, list):
            units = []
            for i, element in enumerate(root):
                if not isinstance(element, dict):
                    raise MappingError(f"tree element {i} is not a map")
                units.append(element)
            return units
        return [root]

    def ingest(self, doc: RawDocument, spec: Optional[MappingSpec] = None) -> IngestReport:
        structure_class, label, delimiter = sniff(doc)

        if self.store.has_raw(doc.raw_id):
            self.store.append_lineage(event(
                Stage.CAPTURE, output_ids=[doc.raw_id], timestamp=doc.received_at,
            ))
            return IngestReport(
                raw_id=doc.raw_id,
                structure_class=structure_class,
                records_produced=0,
                status=IngestStatus.DUPLICATE,
            )

        self.store.put_raw(doc)
        self.store.append_lineage(event(
            Stage.CAPTURE, output_ids=[doc.raw_id], timestamp=doc.received_at,
        ))

        if structure_class == StructureClass.UNSTRUCTURED or spec is None:
            return IngestReport(
                raw_id=doc.raw_id,
                structure_class=structure_class,
                records_produced=0,
                status=IngestStatus.RAW_ONLY,
            )

        report = IngestReport(
            raw_id=doc.raw_id,
            structure_class=structure_class,
            records_produced=0,
            status=IngestStatus.REJECTED,
        )
        spec_digest = self.registry.register_value(spec.to_value())

        # map: parse into logical units and apply the spec to each
        records: list[MetaRecord] = []
        try:
            units = self.logical_units(doc, spec, label, delimiter)
            for unit in units:
                records.append(apply_mapping(unit, spec, doc, structure_class))
        except ParseError as exc:
            report.issues.append(_issue(IssueKind.ENCODING, f"parse failed: {exc}"))
        except (MappingError, CoercionError) as exc:
            path = getattr(exc, "path", None)
            report.issues.append(_issue(IssueKind.MISSING_REQUIRED, str(exc), path))
        except CdpError as exc:
            report.issues.append(_issue(IssueKind.ENCODING, str(exc)))

        mapped_ids = [r.id for r in records]
        self.store.append_lineage(event(
            Stage.MAP,
            input_ids=[doc.raw_id],
            output_ids=mapped_ids,
            config_digest=spec_digest,
            timestamp=doc.received_at,
        ))
        if report.issues:
            return report

        # validate: per-record schema check; any error rejects the document
        schema: SchemaConstraint = self.registry.schema_for(spec.schema_ref)
        schema_digest = self.registry.register_value(schema.to_value())
        rejected = False
        for record in records:
            issues = validate(record.fields, schema)
            report.issues.extend(issues)
            if has_errors(issues):
                rejected = True
        accepted_ids = [] if rejected else mapped_ids
        self.store.append_lineage(event(
            Stage.VALIDATE,
            input_ids=mapped_ids,
            output_ids=accepted_ids,
            config_digest=schema_digest,
            timestamp=doc.received_at,
        ))
        if rejected:
            return report

        # store
        for record in records:
            self.store.put_record(record)
        self.store.append_lineage(event(
            Stage.STORE,
            input_ids=accepted_ids,
            output_ids=accepted_ids,
            timestamp=doc.received_at,
        ))
        report.records_produced = len(records)
        report.record_ids = mapped_ids
        report.status = IngestStatus.STORED
        return report
