"""Dual-zone persistent store: content-addressed raw zone (the data lake)
plus a typed record zone and the append-only lineage log.

On-disk layout, pinned byte-exactly:

    raw/ab/cd/<digest>        raw bytes, fan-out on the first four hex chars
    raw/ab/cd/<digest>.meta   canonical sidecar {declared_name, provider, received_at}
    records/segment-%06d.log  canonical records, one per line, 256 per segment
    lineage/lineage.log       canonical lineage events, one per line
    datasets/<id>.json        materialized-dataset manifests (derived metadata)
    index/index.json          persisted inverted index (derived metadata)

Writes serialize through one lock (single logical writer); readers iterate
a snapshot captured at scan start, so concurrent appends are invisible to
a running scan.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable, Iterator, Optional

from .canonical import canonical_dumps, canonical_loads, is_hex_digest, sha256_hex
from .errors import InvariantViolation, MalformedId, StorageError, UnknownDataset
from .records import LineageEvent, MetaRecord, canonical_parse, canonical_serialize

RECORDS_PER_SEGMENT = 256


@dataclass(frozen=True)
class RawDocument:
    """An uploaded byte payload before any interpretation."""

    raw_id: str
    data: bytes
    declared_name: Optional[str]
    provider: str
    received_at: str

    @staticmethod
    def from_bytes(
        data: bytes,
        *,
        provider: str,
        received_at: str,
        declared_name: Optional[str] = None,
    ) -> "RawDocument":
        return RawDocument(
            raw_id=sha256_hex(data),
            data=data,
            declared_name=declared_name,
            provider=provider,
            received_at=received_at,
        )


@dataclass(frozen=True)
class StoreStats:
    raw_count: int
    record_count: int
    lineage_count: int
    bytes_on_disk: int

    def to_value(self) -> dict:
        return {
            "bytes_on_disk": self.bytes_on_disk,
            "lineage_count": self.lineage_count,
            "raw_count": self.raw_count,
            "record_count": self.record_count,
        }


def _check_id(record_id: str) -> None:
    if not is_hex_digest(record_id):
        raise MalformedId(f"{record_id!r} is not a 64-char lowercase hex digest")


class Store:
    """One store root. Safe for one writer and many readers."""

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self._lock = threading.Lock()
        try:
            for sub in ("raw", "records", "lineage", "datasets", "index"):
                (self.root / sub).mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StorageError(f"cannot initialise store at {self.root}: {exc}") from None
        # id -> (segment_no, line_no); rebuilt by scanning segments on open
        self._record_index: dict[str, tuple[int, int]] = {}
        self._segments: list[int] = []
        self._lineage_count = 0
        self._load()

    # ------------------------------------------------------------------
    # startup scan
    # ------------------------------------------------------------------

    def _segment_path(self, segment_no: int) -> Path:
        return self.root / "records" / ("segment-%06d.log" % segment_no)

    def _lineage_path(self) -> Path:
        return self.root / "lineage" / "lineage.log"

    def _load(self) -> None:
        seg_dir = self.root / "records"
        numbers = sorted(
            int(p.name[len("segment-"):-len(".log")])
            for p in seg_dir.glob("segment-*.log")
        )
        self._segments = numbers
        for seg_no in numbers:
            with open(self._segment_path(seg_no), "rb") as fh:
                for line_no, line in enumerate(fh):
                    record = canonical_parse(line.rstrip(b"\n"))
                    self._record_index[record.id] = (seg_no, line_no)
        path = self._lineage_path()
        if path.exists():
            with open(path, "rb") as fh:
                self._lineage_count = sum(1 for _ in fh)

    # ------------------------------------------------------------------
    # raw zone
    # ------------------------------------------------------------------

    def _raw_path(self, raw_id: str) -> Path:
        return self.root / "raw" / raw_id[0:2] / raw_id[2:4] / raw_id

    def put_raw(self, doc: RawDocument) -> tuple[str, bool]:
        if doc.raw_id != sha256_hex(doc.data):
            raise InvariantViolation("raw_id does not match the digest of the bytes")
        path = self._raw_path(doc.raw_id)
        with self._lock:
            if path.exists():
                return doc.raw_id, False
            meta = {
                "declared_name": doc.declared_name,
                "provider": doc.provider,
                "received_at": doc.received_at,
            }
            try:
                path.parent.mkdir(parents=True, exist_ok=True)
                tmp = path.with_suffix(".tmp")
                tmp.write_bytes(doc.data)
                os.replace(tmp, path)
                path.with_name(path.name + ".meta").write_bytes(canonical_dumps(meta))
            except OSError as exc:
                raise StorageError(f"raw write failed: {exc}") from None
        return doc.raw_id, True

    def has_raw(self, raw_id: str) -> bool:
        _check_id(raw_id)
        return self._raw_path(raw_id).exists()

    def get_raw(self, raw_id: str) -> Optional[RawDocument]:
        _check_id(raw_id)
        path = self._raw_path(raw_id)
        if not path.exists():
            return None
        try:
            data = path.read_bytes()
            meta = canonical_loads(path.with_name(path.name + ".meta").read_bytes())
        except OSError as exc:
            raise StorageError(f"raw read failed: {exc}") from None
        return RawDocument(
            raw_id=raw_id,
            data=data,
            declared_name=meta["declared_name"],
            provider=meta["provider"],
            received_at=meta["received_at"],
        )

    def iter_raw_ids(self) -> Iterator[str]:
        for path in sorted((self.root / "raw").glob("*/*/*")):
            if not path.name.endswith(".meta") and not path.name.endswith(".tmp"):
                yield path.name

    # ------------------------------------------------------------------
    # typed record zone
    # ------------------------------------------------------------------

    def put_record(self, record: MetaRecord) -> tuple[str, bool]:
        data = canonical_serialize(record)  # validates invariants
        with self._lock:
            if record.id in self._record_index:
                return record.id, False
            total = len(self._record_index)
            seg_no = total // RECORDS_PER_SEGMENT
            line_no = total % RECORDS_PER_SEGMENT
            try:
                with open(self._segment_path(seg_no), "ab") as fh:
                    fh.write(data + b"\n")
            except OSError as exc:
                raise StorageError(f"record write failed: {exc}") from None
            if seg_no not in self._segments:
                self._segments.append(seg_no)
            self._record_index[record.id] = (seg_no, line_no)
        return record.id, True

    def has_record(self, record_id: str) -> bool:
        _check_id(record_id)
        return record_id in self._record_index

    def get_record(self, record_id: str) -> Optional[MetaRecord]:
        _check_id(record_id)
        loc = self._record_index.get(record_id)
        if loc is None:
            return None
        seg_no, line_no = loc
        try:
            with open(self._segment_path(seg_no), "rb") as fh:
                for i, line in enumerate(fh):
                    if i == line_no:
                        return canonical_parse(line.rstrip(b"\n"))
        except OSError as exc:
            raise StorageError(f"record read failed: {exc}") from None
        raise StorageError(f"record {record_id} missing from segment {seg_no}")

    def scan(self, predicate: Callable[[MetaRecord], bool] | None = None) -> Iterator[MetaRecord]:
        """Yield records matching `predicate`, in append order.

        The iteration covers the store as of the call (snapshot isolation):
        records appended afterwards are not yielded.
        """
        with self._lock:
            total = len(self._record_index)
            segments = list(self._segments)
        yielded = 0
        for seg_no in segments:
            if yielded >= total:
                break
            path = self._segment_path(seg_no)
            if not path.exists():
                continue
            try:
                with open(path, "rb") as fh:
                    for line in fh:
                        if yielded >= total:
                            break
                        record = canonical_parse(line.rstrip(b"\n"))
                        yielded += 1
                        if predicate is None or predicate(record):
                            yield record
            except OSError as exc:
                raise StorageError(f"scan failed: {exc}") from None

    def record_count(self) -> int:
        return len(self._record_index)

    def snapshot_marker(self) -> str:
        return f"records:{len(self._record_index)}"

    # ------------------------------------------------------------------
    # lineage log
    # ------------------------------------------------------------------

    def append_lineage(self, event: LineageEvent) -> int:
        with self._lock:
            seq = self._lineage_count + 1
            if event.seq not in (0, seq):
                raise InvariantViolation(
                    f"event seq {event.seq} does not follow the log (next is {seq})"
                )
            assigned = replace(event, seq=seq)
            try:
                with open(self._lineage_path(), "ab") as fh:
                    fh.write(canonical_dumps(assigned.to_value()) + b"\n")
            except OSError as exc:
                raise StorageError(f"lineage write failed: {exc}") from None
            self._lineage_count = seq
        return seq

    def read_lineage(self) -> list[LineageEvent]:
        path = self._lineage_path()
        if not path.exists():
            return []
        events = []
        with open(path, "rb") as fh:
            for line in fh:
                events.append(LineageEvent.from_value(canonical_loads(line.rstrip(b"\n"))))
        return events

    def lineage_count(self) -> int:
        return self._lineage_count

    # ------------------------------------------------------------------
    # derived metadata: dataset manifests and the persisted index
    # ------------------------------------------------------------------

    def save_dataset_manifest(self, manifest: dict) -> None:
        dataset_id = manifest["dataset_id"]
        path = self.root / "datasets" / f"{dataset_id}.json"
        try:
            path.write_bytes(canonical_dumps(manifest))
        except OSError as exc:
            raise StorageError(f"manifest write failed: {exc}") from None

    def load_dataset_manifest(self, dataset_id: str) -> dict:
        path = self.root / "datasets" / f"{dataset_id}.json"
        if not path.exists():
            raise UnknownDataset(f"no materialized dataset {dataset_id!r}")
        return canonical_loads(path.read_bytes())

    def list_dataset_ids(self) -> list[str]:
        return sorted(p.stem for p in (self.root / "datasets").glob("*.json"))

    def save_index_blob(self, blob: dict) -> None:
        try:
            (self.root / "index" / "index.json").write_bytes(canonical_dumps(blob))
        except OSError as exc:
            raise StorageError(f"index write failed: {exc}") from None

    def load_index_blob(self) -> Optional[dict]:
        path = self.root / "index" / "index.json"
        if not path.exists():
            return None
        return canonical_loads(path.read_bytes())

    # ------------------------------------------------------------------

    def stats(self) -> StoreStats:
        raw_count = sum(1 for _ in self.iter_raw_ids())
        size = 0
        for path in self.root.rglob("*"):
            if path.is_file():
                size += path.stat().st_size
        return StoreStats(
            raw_count=raw_count,
            record_count=len(self._record_index),
            lineage_count=self._lineage_count,
            bytes_on_disk=size,
        )

    def typed_zone_bytes(self) -> dict[str, bytes]:
        """Segment file name -> bytes; the unit replay compares byte-for-byte."""
        out = {}
        for path in sorted((self.root / "records").glob("segment-*.log")):
            out[path.name] = path.read_bytes()
        return out
