"""Dataset-level quality reporting.

Completeness is the fraction of filled required fields over all required
fields across the dataset's records (1.0 when nothing is required).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

from ..errors import UnknownDataset
from ..fields import MISSING, field_get
from ..store import Store
from .schema import SchemaConstraint, validate

if TYPE_CHECKING:
    from ..configs import ConfigRegistry


@dataclass
class QualityReport:
    dataset_id: str
    record_count: int
    completeness: float
    issue_counts: dict[str, int] = field(default_factory=dict)

    def to_value(self) -> dict:
        return {
            "completeness": self.completeness,
            "dataset_id": self.dataset_id,
            "issue_counts": dict(sorted(self.issue_counts.items())),
            "record_count": self.record_count,
        }


def quality_report(
    dataset_id: str,
    store: Store,
    schema: Optional[SchemaConstraint] = None,
    registry: Optional["ConfigRegistry"] = None,
) -> QualityReport:
    """Aggregate validate() over every record of a materialized dataset.

    With an explicit schema, every record is checked against it; otherwise
    each record is checked against the registered schema for its own
    schema_ref (registry required).
    """
    manifest = store.load_dataset_manifest(dataset_id)
    issue_counts: dict[str, int] = {}
    required_total = 0
    required_filled = 0
    count = 0
    for record_id in manifest["member_ids"]:
        record = store.get_record(record_id)
        if record is None:
            raise UnknownDataset(f"dataset {dataset_id}: member {record_id} missing from store")
        count += 1
        if schema is not None:
            record_schema = schema
        elif registry is not None:
            record_schema = registry.schema_for(record.schema_ref or "")
        else:
            record_schema = SchemaConstraint.empty(record.schema_ref or "")
        for path, _ in record_schema.required_paths:
            required_total += 1
            if field_get(record.fields, path) is not MISSING:
                required_filled += 1
        for issue in validate(record.fields, record_schema):
            issue_counts[issue.kind.value] = issue_counts.get(issue.kind.value, 0) + 1
    completeness = 1.0 if required_total == 0 else required_filled / required_total
    return QualityReport(
        dataset_id=dataset_id,
        record_count=count,
        completeness=completeness,
        issue_counts=issue_counts,
    )
