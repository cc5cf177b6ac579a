"""Strain similarity over feature vectors, and the name-consistency report.

Strain names are unreliable labels, so analysis runs on measured feature
vectors (cannabinoid concentrations or whatever a dataset provides).
Similarity is cosine, computed in one canonical evaluation order
(math.fsum over pairwise products) so similarity(a,b) == similarity(b,a)
exactly, not just approximately. Ties everywhere break by ascending
sample id, so rankings are reproducible.

The consistency score is the fraction of samples (among names with at
least two samples) whose nearest neighbor shares their name; singleton
names are excluded and reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from ..errors import DimensionMismatch, InvariantViolation
from ..fields import MISSING, field_get
from ..records import MetaRecord


@dataclass(frozen=True)
class StrainProfile:
    sample_id: str
    strain_name: str
    features: tuple[float, ...]
    feature_names: tuple[str, ...]

    def validate(self) -> None:
        if len(self.features) != len(self.feature_names) or not self.features:
            raise InvariantViolation("features and feature_names must align and be non-empty")
        for value in self.features:
            if value != value or value in (float("inf"), float("-inf")) or value < 0:
                raise InvariantViolation("features must be finite and non-negative")
        if all(value == 0 for value in self.features):
            raise InvariantViolation(f"profile {self.sample_id}: all-zero feature vector")

    def to_value(self) -> dict:
        return {
            "feature_names": list(self.feature_names),
            "features": list(self.features),
            "sample_id": self.sample_id,
            "strain_name": self.strain_name,
        }


def profile_from_record(record: MetaRecord) -> Optional[StrainProfile]:
    """Read a profile from a strain record: features are the `cannabinoids`
    map in sorted-name order."""
    sample_id = field_get(record.fields, "sample_id")
    strain_name = field_get(record.fields, "strain_name")
    cannabinoids = field_get(record.fields, "cannabinoids")
    if sample_id is MISSING or strain_name is MISSING or not isinstance(cannabinoids, dict):
        return None
    names = sorted(cannabinoids)
    values = []
    for name in names:
        value = cannabinoids[name]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return None
        values.append(float(value))
    profile = StrainProfile(
        sample_id=str(sample_id),
        strain_name=str(strain_name),
        features=tuple(values),
        feature_names=tuple(names),
    )
    profile.validate()
    return profile


def profiles_from_store(store, dataset_id: Optional[str] = None) -> list[StrainProfile]:
    """Strain profiles from a store, either a materialized dataset's members
    or every strain/profile record. Duplicate sample_ids keep the version
    appended last (a materialized copy supersedes its source)."""
    if dataset_id:
        manifest = store.load_dataset_manifest(dataset_id)
        records = (store.get_record(record_id) for record_id in manifest["member_ids"])
    else:
        records = store.scan(lambda r: r.schema_ref == "strain/profile")
    by_sample: dict[str, StrainProfile] = {}
    for record in records:
        if record is None:
            continue
        profile = profile_from_record(record)
        if profile is not None:
            by_sample[profile.sample_id] = profile
    return [by_sample[k] for k in sorted(by_sample)]


def _check_dimensions(a: StrainProfile, b: StrainProfile) -> None:
    if a.feature_names != b.feature_names:
        raise DimensionMismatch(
            f"{a.sample_id} and {b.sample_id} disagree on feature dimensions"
        )


def similarity(a: StrainProfile, b: StrainProfile) -> float:
    """Cosine similarity in [0, 1] (features are non-negative)."""
    a.validate()
    b.validate()
    _check_dimensions(a, b)
    dot = math.fsum(x * y for x, y in zip(a.features, b.features))
    norm_a = math.sqrt(math.fsum(x * x for x in a.features))
    norm_b = math.sqrt(math.fsum(y * y for y in b.features))
    return dot / (norm_a * norm_b)


def nearest(
    query: StrainProfile,
    corpus: list[StrainProfile],
    k: int = 5,
) -> list[tuple[str, float]]:
    """Top-k (sample_id, similarity), descending, ties by ascending id.
    The query itself (same sample_id) is excluded."""
    if k < 1:
        raise InvariantViolation("k must be >= 1")
    if not corpus:
        raise InvariantViolation("corpus must be non-empty")
    scored = [
        (profile.sample_id, similarity(query, profile))
        for profile in corpus
        if profile.sample_id != query.sample_id
    ]
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored[:k]


@dataclass
class ConsistencyReport:
    consistency_score: float
    evaluated: int
    consistent: int
    inconsistent_pairs: list[tuple[str, str, str, str]] = field(default_factory=list)
    excluded_singletons: list[str] = field(default_factory=list)

    def to_value(self) -> dict:
        return {
            "consistency_score": self.consistency_score,
            "consistent": self.consistent,
            "evaluated": self.evaluated,
            "excluded_singletons": list(self.excluded_singletons),
            "inconsistent_pairs": [list(p) for p in self.inconsistent_pairs],
        }


def name_consistency(corpus: list[StrainProfile]) -> ConsistencyReport:
    """Nearest-neighbor name agreement over names with >= 2 samples.

    An empty denominator (all singletons) reports score 1.0 explicitly,
    with every sample listed as excluded.
    """
    if len(corpus) < 2:
        raise InvariantViolation("consistency needs at least 2 samples")
    by_name: dict[str, int] = {}
    for profile in corpus:
        by_name[profile.strain_name] = by_name.get(profile.strain_name, 0) + 1

    excluded = sorted(p.sample_id for p in corpus if by_name[p.strain_name] < 2)
    evaluated = 0
    consistent = 0
    inconsistent: list[tuple[str, str, str, str]] = []
    by_id = {p.sample_id: p for p in corpus}
    for profile in sorted(corpus, key=lambda p: p.sample_id):
        if by_name[profile.strain_name] < 2:
            continue
        neighbor_id, _ = nearest(profile, corpus, k=1)[0]
        neighbor = by_id[neighbor_id]
        evaluated += 1
        if neighbor.strain_name == profile.strain_name:
            consistent += 1
        else:
            inconsistent.append(
                (profile.sample_id, neighbor_id, profile.strain_name, neighbor.strain_name)
            )
    score = 1.0 if evaluated == 0 else consistent / evaluated
    return ConsistencyReport(
        consistency_score=score,
        evaluated=evaluated,
        consistent=consistent,
        inconsistent_pairs=inconsistent,
        excluded_singletons=excluded,
    )
