"""Dataset materialization: filter -> clean -> categorize -> store.

A materialization is a pure function of (dataset spec, store snapshot):
the returned materialization id digests the spec digest plus the sorted
member ids, so re-running on an unchanged store reproduces it exactly.
Each run appends clean, categorize and materialize lineage events carrying
the digests of the exact configurations applied.
"""

from __future__ import annotations

import fnmatch
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

from ..canonical import digest_value
from ..errors import ConfigError
from ..records import MetaRecord, Stage, event
from ..store import Store
from .categorize import CategoryRule, apply_categorize
from .cleaning import CleaningRule, clean

if TYPE_CHECKING:
    from ..configs import ConfigRegistry


@dataclass(frozen=True)
class RecordFilter:
    """Declarative predicate over (sub_domain, schema_ref, provider).

    Each set field must match (schema_ref and provider support globs);
    unset fields match everything.
    """

    sub_domain: Optional[str] = None
    schema_ref: Optional[str] = None
    provider: Optional[str] = None

    def __call__(self, record: MetaRecord) -> bool:
        if self.sub_domain is not None and record.sub_domain.value != self.sub_domain:
            return False
        if self.schema_ref is not None and not fnmatch.fnmatchcase(
            record.schema_ref or "", self.schema_ref
        ):
            return False
        if self.provider is not None and not fnmatch.fnmatchcase(
            record.source.provider, self.provider
        ):
            return False
        return True

    def to_value(self) -> dict:
        return {
            "provider": self.provider,
            "schema_ref": self.schema_ref,
            "sub_domain": self.sub_domain,
        }

    @staticmethod
    def from_value(value: dict) -> "RecordFilter":
        return RecordFilter(
            sub_domain=value.get("sub_domain"),
            schema_ref=value.get("schema_ref"),
            provider=value.get("provider"),
        )


@dataclass(frozen=True)
class DatasetSpec:
    dataset_id: str
    filter: RecordFilter
    cleaning: tuple[str, ...] = ()
    categorization: tuple[str, ...] = ()

    def to_value(self) -> dict:
        return {
            "categorization": list(self.categorization),
            "cleaning": list(self.cleaning),
            "dataset_id": self.dataset_id,
            "filter": self.filter.to_value(),
            "kind": "dataset",
        }

    def digest(self) -> str:
        return digest_value(self.to_value())

    @staticmethod
    def from_value(value: dict) -> "DatasetSpec":
        try:
            return DatasetSpec(
                dataset_id=value["dataset_id"],
                filter=RecordFilter.from_value(value.get("filter", {})),
                cleaning=tuple(value.get("cleaning", [])),
                categorization=tuple(value.get("categorization", [])),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad dataset spec: {exc}") from None


def run_processing(
    records: list[MetaRecord],
    cleaning_rules: list[CleaningRule],
    category_rules: list[CategoryRule],
) -> tuple[list[MetaRecord], list[MetaRecord]]:
    """(cleaned, categorized) record lists, in input order. Shared by
    materialize and replay so both derive byte-identical outputs."""
    cleaned = [clean(record, cleaning_rules)[0] for record in records]
    categorized = [apply_categorize(record, category_rules)[0] for record in cleaned]
    return cleaned, categorized


def materialize_dataset(
    spec: DatasetSpec,
    store: Store,
    registry: "ConfigRegistry",
    timestamp: str,
) -> tuple[str, list[str]]:
    """Materialize one dataset; returns (materialization id, member ids)."""
    cleaning_rules = registry.resolve_cleaning(spec.cleaning)
    category_rules = registry.resolve_categories(spec.categorization)
    cleaning_digest = registry.register_value([r.to_value() for r in cleaning_rules])
    category_digest = registry.register_value([r.to_value() for r in category_rules])
    spec_digest = registry.register_value(spec.to_value())

    source = list(store.scan(spec.filter))
    source_ids = [r.id for r in source]
    cleaned, categorized = run_processing(source, cleaning_rules, category_rules)

    store.append_lineage(event(
        Stage.CLEAN,
        input_ids=source_ids,
        output_ids=[r.id for r in cleaned],
        config_digest=cleaning_digest,
        timestamp=timestamp,
    ))
    store.append_lineage(event(
        Stage.CATEGORIZE,
        input_ids=[r.id for r in cleaned],
        output_ids=[r.id for r in categorized],
        config_digest=category_digest,
        timestamp=timestamp,
    ))

    for record in categorized:
        store.put_record(record)
    member_ids = [r.id for r in categorized]

    store.append_lineage(event(
        Stage.MATERIALIZE,
        input_ids=source_ids,
        output_ids=member_ids,
        config_digest=spec_digest,
        timestamp=timestamp,
    ))

    materialization_id = digest_value(
        {"config": spec_digest, "dataset": spec.dataset_id, "members": sorted(member_ids)}
    )
    store.save_dataset_manifest({
        "dataset_id": spec.dataset_id,
        "materialization_id": materialization_id,
        "member_ids": member_ids,
        "spec_digest": spec_digest,
        "materialized_at": timestamp,
    })
    return materialization_id, member_ids
