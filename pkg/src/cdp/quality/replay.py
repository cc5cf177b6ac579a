"""Deterministic replay: rebuild the typed zone from raw bytes + lineage +
pinned configurations, then compare byte-for-byte.

Every logged stage is re-executed in seq order against a fresh zone.
Configurations resolve by digest only — if a config file was edited after
the run, its digest no longer matches the log and replay stops with
ReplayError at the first affected event. Records produced mid-pipeline
(map/validate/clean/categorize outputs) wait in a pending pool keyed by id
until a store/materialize event persists them, which keeps interleaved
pipeline runs replayable.
"""

from __future__ import annotations

import os
from typing import TYPE_CHECKING, Optional

from ..capture.mapping import MappingSpec, apply_mapping
from ..errors import CdpError, ReplayError
from ..records import LineageEvent, MetaRecord, Stage
from ..store import Store
from .schema import SchemaConstraint, has_errors, validate

if TYPE_CHECKING:
    from ..configs import ConfigRegistry


def _resolve(registry: "ConfigRegistry", event: LineageEvent) -> object:
    value = registry.by_digest(event.config_digest)
    if value is None:
        raise ReplayError(
            event.seq,
            f"{event.stage.value} config with digest {event.config_digest[:12]}... "
            "is not resolvable (missing or tampered configuration)",
        )
    return value


def _expect(event: LineageEvent, got_ids: list[str]) -> None:
    if tuple(got_ids) != event.output_ids:
        raise ReplayError(
            event.seq,
            f"recomputed {event.stage.value} outputs differ from the log "
            f"({len(got_ids)} vs {len(event.output_ids)} records)",
        )


def replay(
    source: Store,
    registry: "ConfigRegistry",
    target: Store,
    pseudonym_key: Optional[bytes] = None,
) -> Store:
    """Re-execute the lineage log of `source` into the fresh store `target`."""
    from ..capture.detect import sniff
    from ..capture.ingest import Ingestor
    from ..hospital.anonymise import AnonymisationPolicy, anonymise
    from ..processing.categorize import CategoryRule, apply_categorize
    from ..processing.cleaning import CleaningRule, clean
    from ..processing.datasets import DatasetSpec, run_processing

    pending: dict[str, MetaRecord] = {}
    ingestor = Ingestor(target, registry)

    for event in source.read_lineage():
        stage = event.stage

        if stage == Stage.CAPTURE:
            for raw_id in event.output_ids:
                if not source.has_raw(raw_id):
                    raise ReplayError(event.seq, f"raw entry {raw_id[:12]}... is missing")

        elif stage == Stage.MAP:
            spec_value = _resolve(registry, event)
            try:
                spec = MappingSpec.from_value(spec_value)
            except CdpError as exc:
                raise ReplayError(event.seq, f"bad mapping spec: {exc}") from None
            doc = source.get_raw(event.input_ids[0]) if event.input_ids else None
            if doc is None:
                raise ReplayError(event.seq, "map input raw entry is missing")
            structure_class, label, delimiter = sniff(doc)
            records: list[MetaRecord] = []
            try:
                for unit in ingestor.logical_units(doc, spec, label, delimiter):
                    records.append(apply_mapping(unit, spec, doc, structure_class))
            except CdpError:
                records = []  # the original run failed here too; outputs must be empty
            _expect(event, [r.id for r in records])
            for record in records:
                pending[record.id] = record

        elif stage == Stage.VALIDATE:
            schema_value = _resolve(registry, event)
            try:
                schema = SchemaConstraint.from_value(schema_value)
            except CdpError as exc:
                raise ReplayError(event.seq, f"bad schema: {exc}") from None
            rejected = False
            for record_id in event.input_ids:
                record = pending.get(record_id)
                if record is None:
                    raise ReplayError(event.seq, f"validate input {record_id[:12]}... not pending")
                if has_errors(validate(record.fields, schema)):
                    rejected = True
            _expect(event, [] if rejected else list(event.input_ids))

        elif stage == Stage.STORE:
            for record_id in event.output_ids:
                record = pending.get(record_id)
                if record is None:
                    raise ReplayError(event.seq, f"store input {record_id[:12]}... not pending")
                target.put_record(record)

        elif stage == Stage.CLEAN:
            rules_value = _resolve(registry, event)
            try:
                rules = [CleaningRule.from_value(v) for v in rules_value]
            except CdpError as exc:
                raise ReplayError(event.seq, f"bad cleaning rules: {exc}") from None
            outputs = []
            for record_id in event.input_ids:
                record = pending.get(record_id) or target.get_record(record_id)
                if record is None:
                    raise ReplayError(event.seq, f"clean input {record_id[:12]}... unavailable")
                cleaned, _ = clean(record, rules)
                outputs.append(cleaned)
            _expect(event, [r.id for r in outputs])
            for record in outputs:
                pending[record.id] = record

        elif stage == Stage.CATEGORIZE:
            rules_value = _resolve(registry, event)
            try:
                rules = [CategoryRule.from_value(v) for v in rules_value]
            except CdpError as exc:
                raise ReplayError(event.seq, f"bad category rules: {exc}") from None
            outputs = []
            for record_id in event.input_ids:
                record = pending.get(record_id) or target.get_record(record_id)
                if record is None:
                    raise ReplayError(event.seq, f"categorize input {record_id[:12]}... unavailable")
                tagged, _ = apply_categorize(record, rules)
                outputs.append(tagged)
            _expect(event, [r.id for r in outputs])
            for record in outputs:
                pending[record.id] = record

        elif stage == Stage.MATERIALIZE:
            spec_value = _resolve(registry, event)
            try:
                DatasetSpec.from_value(spec_value)
            except CdpError as exc:
                raise ReplayError(event.seq, f"bad dataset spec: {exc}") from None
            for record_id in event.output_ids:
                record = pending.get(record_id) or target.get_record(record_id)
                if record is None:
                    raise ReplayError(event.seq, f"materialize output {record_id[:12]}... unavailable")
                target.put_record(record)

        elif stage == Stage.INDEX:
            _resolve(registry, event)  # index carries no zone writes

        elif stage == Stage.ANONYMISE:
            policy_value = _resolve(registry, event)
            try:
                policy = AnonymisationPolicy.from_value(policy_value)
            except CdpError as exc:
                raise ReplayError(event.seq, f"bad anonymise policy: {exc}") from None
            key = pseudonym_key or os.environ.get("CDP_PSEUDONYM_KEY", "").encode()
            if not key:
                raise ReplayError(event.seq, "anonymise replay needs CDP_PSEUDONYM_KEY")
            outputs = []
            for record_id in event.input_ids:
                record = pending.get(record_id) or target.get_record(record_id)
                if record is None:
                    raise ReplayError(event.seq, f"anonymise input {record_id[:12]}... unavailable")
                outputs.append(anonymise(record, policy, key))
            _expect(event, [r.id for r in outputs])
            for record in outputs:
                pending[record.id] = record

        else:  # pragma: no cover - Stage is a closed enum
            raise ReplayError(event.seq, f"unknown stage {stage!r}")

    return target


def verify_replay(source: Store, target: Store) -> tuple[bool, str]:
    """Byte-compare the typed zones; (ok, human-readable detail)."""
    original = source.typed_zone_bytes()
    rebuilt = target.typed_zone_bytes()
    if original == rebuilt:
        total = sum(len(v) for v in original.values())
        return True, f"typed zone identical: {len(original)} segment(s), {total} bytes"
    names = sorted(set(original) | set(rebuilt))
    for name in names:
        a, b = original.get(name), rebuilt.get(name)
        if a != b:
            if a is None or b is None:
                return False, f"segment {name} exists on one side only"
            offset = next((i for i, (x, y) in enumerate(zip(a, b)) if x != y), min(len(a), len(b)))
            return False, f"segment {name} differs at byte {offset}"
    return False, "zones differ"
