"""Configuration registry: mapping specs, rules, schemas, datasets, policy.

Configs live as canonical text files under a config directory:

    config/specs/*.json      mapping specs           {"kind":"mapping_spec",...}
    config/rules/*.json      rule sets               {"kind":"cleaning_rules"|"category_rules",...}
    config/schemas/*.json    schema constraints      {"kind":"schema",...}
    config/datasets/*.json   dataset specs           {"kind":"dataset",...}
    config/anonymise.policy  anonymisation policy    {"kind":"anonymise_policy",...}

Every config is digest-addressable (SHA-256 of its canonical value), which
is what lineage events record and what replay resolves against. Rule lists
resolved for each dataset are digest-registered too, as are synthesized
empty schemas for specs whose schema_ref has no schema file.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Optional

from .canonical import canonical_dumps, canonical_loads, digest_value
from .capture.mapping import MappingSpec
from .errors import ConfigError
from .hospital.anonymise import AnonymisationPolicy
from .processing.categorize import CategoryRule
from .processing.cleaning import CleaningRule
from .processing.datasets import DatasetSpec
from .processing.indexing import TOKENIZER_CONFIG
from .quality.schema import SchemaConstraint

KNOWN_KINDS = {
    "mapping_spec",
    "cleaning_rules",
    "category_rules",
    "schema",
    "dataset",
    "anonymise_policy",
}


class ConfigRegistry:
    def __init__(self) -> None:
        self.specs: dict[str, MappingSpec] = {}
        self.schemas: dict[str, SchemaConstraint] = {}
        self.cleaning_rules: dict[str, CleaningRule] = {}
        self.category_rules: dict[str, CategoryRule] = {}
        self.datasets: dict[str, DatasetSpec] = {}
        self.policy: Optional[AnonymisationPolicy] = None
        self._by_digest: dict[str, Any] = {}
        self.register_value(TOKENIZER_CONFIG)

    # ------------------------------------------------------------------

    @staticmethod
    def load(config_dir: Path | str) -> "ConfigRegistry":
        registry = ConfigRegistry()
        root = Path(config_dir)
        if not root.exists():
            raise ConfigError(f"config directory {root} does not exist")
        paths = sorted(root.rglob("*.json")) + sorted(root.glob("*.policy"))
        for path in paths:
            try:
                value = canonical_loads(path.read_bytes())
            except Exception as exc:
                raise ConfigError(f"{path}: {exc}") from None
            registry.add(value, origin=str(path))
        registry.finalize()
        return registry

    def add(self, value: dict, origin: str = "<memory>") -> None:
        if not isinstance(value, dict) or value.get("kind") not in KNOWN_KINDS:
            raise ConfigError(f"{origin}: missing or unknown config kind")
        kind = value["kind"]
        if kind == "mapping_spec":
            spec = MappingSpec.from_value(value)
            if spec.spec_id in self.specs:
                raise ConfigError(f"{origin}: duplicate spec id {spec.spec_id!r}")
            self.specs[spec.spec_id] = spec
            self.register_value(spec.to_value())
        elif kind == "schema":
            schema = SchemaConstraint.from_value(value)
            if schema.schema_ref in self.schemas:
                raise ConfigError(f"{origin}: duplicate schema {schema.schema_ref!r}")
            self.schemas[schema.schema_ref] = schema
            self.register_value(schema.to_value())
        elif kind == "cleaning_rules":
            for rule_value in value.get("rules", []):
                rule = CleaningRule.from_value(rule_value)
                if rule.rule_id in self.cleaning_rules:
                    raise ConfigError(f"{origin}: duplicate cleaning rule {rule.rule_id!r}")
                self.cleaning_rules[rule.rule_id] = rule
        elif kind == "category_rules":
            for rule_value in value.get("rules", []):
                rule = CategoryRule.from_value(rule_value)
                if rule.rule_id in self.category_rules:
                    raise ConfigError(f"{origin}: duplicate category rule {rule.rule_id!r}")
                self.category_rules[rule.rule_id] = rule
        elif kind == "dataset":
            dataset = DatasetSpec.from_value(value)
            if dataset.dataset_id in self.datasets:
                raise ConfigError(f"{origin}: duplicate dataset {dataset.dataset_id!r}")
            self.datasets[dataset.dataset_id] = dataset
            self.register_value(dataset.to_value())
        elif kind == "anonymise_policy":
            if self.policy is not None:
                raise ConfigError(f"{origin}: more than one anonymisation policy")
            self.policy = AnonymisationPolicy.from_value(value)
            self.register_value(self.policy.to_value())

    def finalize(self) -> None:
        """Synthesize empty schemas and pre-register per-dataset rule lists."""
        for spec in self.specs.values():
            if spec.schema_ref not in self.schemas:
                empty = SchemaConstraint.empty(spec.schema_ref)
                self.schemas[spec.schema_ref] = empty
            self.register_value(self.schemas[spec.schema_ref].to_value())
        for schema in self.schemas.values():
            self.register_value(schema.to_value())
        for dataset in self.datasets.values():
            cleaning = self.resolve_cleaning(dataset.cleaning)
            category = self.resolve_categories(dataset.categorization)
            self.register_value([rule.to_value() for rule in cleaning])
            self.register_value([rule.to_value() for rule in category])

    # ------------------------------------------------------------------

    def register_value(self, value: Any) -> str:
        digest = digest_value(value)
        self._by_digest[digest] = value
        return digest

    def by_digest(self, digest: str) -> Optional[Any]:
        return self._by_digest.get(digest)

    def spec(self, spec_id: str) -> MappingSpec:
        if spec_id not in self.specs:
            raise ConfigError(f"unknown mapping spec {spec_id!r}")
        return self.specs[spec_id]

    def schema_for(self, schema_ref: str) -> SchemaConstraint:
        schema = self.schemas.get(schema_ref)
        if schema is None:
            schema = SchemaConstraint.empty(schema_ref)
            self.schemas[schema_ref] = schema
            self.register_value(schema.to_value())
        return schema

    def dataset(self, dataset_id: str) -> DatasetSpec:
        if dataset_id not in self.datasets:
            raise ConfigError(f"unknown dataset spec {dataset_id!r}")
        return self.datasets[dataset_id]

    def resolve_cleaning(self, rule_ids: tuple[str, ...] | list[str]) -> list[CleaningRule]:
        missing = [r for r in rule_ids if r not in self.cleaning_rules]
        if missing:
            raise ConfigError(f"unknown cleaning rules: {missing}")
        return [self.cleaning_rules[r] for r in rule_ids]

    def resolve_categories(self, rule_ids: tuple[str, ...] | list[str]) -> list[CategoryRule]:
        missing = [r for r in rule_ids if r not in self.category_rules]
        if missing:
            raise ConfigError(f"unknown category rules: {missing}")
        return [self.category_rules[r] for r in rule_ids]

    def anonymise_policy(self) -> AnonymisationPolicy:
        if self.policy is None:
            raise ConfigError("no anonymisation policy configured")
        return self.policy


def write_config(path: Path, value: dict) -> None:
    """Write one config file in canonical form (no trailing newline)."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(canonical_dumps(value))


def _identity_spec(schema_ref: str) -> dict:
    return {
        "kind": "mapping_spec",
        "rules": [],
        "schema_ref": schema_ref,
        "source_format": "tree",
        "spec_id": schema_ref,
        "target_sub_domain": "hospital",
    }


def builtin_configs() -> dict[str, dict]:
    """The shipped configuration set, keyed by relative config-dir path."""
    from .hospital.anonymise import AnonymisationPolicy

    configs: dict[str, dict] = {}

    configs["specs/strain-profile-delimited.json"] = {
        "kind": "mapping_spec",
        "rules": [
            {"coercion": "trim_text", "required": True,
             "source_path": "sample_id", "target_path": "sample_id"},
            {"coercion": "trim_text", "required": True,
             "source_path": "strain_name", "target_path": "strain_name"},
            {"coercion": "to_decimal", "required": True,
             "source_path": "THC%", "target_path": "cannabinoids.thc_pct"},
            {"coercion": "to_decimal", "required": False,
             "source_path": "CBD%", "target_path": "cannabinoids.cbd_pct"},
            {"coercion": "to_decimal", "required": False,
             "source_path": "CBN%", "target_path": "cannabinoids.cbn_pct"},
        ],
        "schema_ref": "strain/profile",
        "source_format": "delimited",
        "spec_id": "strain/profile",
        "target_sub_domain": "grower",
    }
    configs["specs/strain-profile-tree.json"] = {
        "kind": "mapping_spec",
        "rules": [
            {"coercion": "trim_text", "required": True,
             "source_path": "sample_id", "target_path": "sample_id"},
            {"coercion": "trim_text", "required": True,
             "source_path": "strain_name", "target_path": "strain_name"},
            {"coercion": "to_decimal", "required": True,
             "source_path": "thc", "target_path": "cannabinoids.thc_pct"},
            {"coercion": "to_decimal", "required": False,
             "source_path": "cbd", "target_path": "cannabinoids.cbd_pct"},
            {"coercion": "to_decimal", "required": False,
             "source_path": "cbn", "target_path": "cannabinoids.cbn_pct"},
        ],
        "schema_ref": "strain/profile",
        "source_format": "tree",
        "spec_id": "strain/profile-tree",
        "target_sub_domain": "grower",
    }
    configs["specs/research-notes.json"] = {
        "kind": "mapping_spec",
        "rules": [],
        "schema_ref": "research/notes",
        "source_format": "tree",
        "spec_id": "research/notes",
        "target_sub_domain": "research",
    }
    for ref in (
        "hospital/user",
        "hospital/form",
        "hospital/assignment",
        "hospital/treatment",
        "hospital/case",
        "hospital/subscription",
        "hospital/alert",
    ):
        configs[f"specs/{ref.replace('/', '-')}.json"] = _identity_spec(ref)

    configs["schemas/strain-profile.json"] = {
        "kind": "schema",
        "schema_ref": "strain/profile",
        "required_paths": [["sample_id", "text"], ["strain_name", "text"],
                           ["cannabinoids", "map"]],
        "range_checks": [["cannabinoids.thc_pct", 0, 100],
                         ["cannabinoids.cbd_pct", 0, 100],
                         ["cannabinoids.cbn_pct", 0, 100]],
        "cross_field_checks": [],
    }
    configs["schemas/hospital-treatment.json"] = {
        "kind": "schema",
        "schema_ref": "hospital/treatment",
        "required_paths": [["entry_id", "text"], ["patient_id", "text"],
                           ["formulation", "text"], ["dose", "decimal"],
                           ["dose_unit", "text"], ["severity", "integer"],
                           ["effectiveness", "integer"], ["noted_at", "text"]],
        "range_checks": [["severity", 0, 10], ["effectiveness", 0, 10],
                         ["dose", 0, 100000]],
        "cross_field_checks": [],
    }
    configs["schemas/hospital-user.json"] = {
        "kind": "schema",
        "schema_ref": "hospital/user",
        "required_paths": [["user_id", "text"], ["username", "text"],
                           ["role", "text"], ["researcher_request", "text"],
                           ["version", "integer"]],
        "range_checks": [["version", 1, 1000000000]],
        "cross_field_checks": [],
    }
    configs["schemas/hospital-case.json"] = {
        "kind": "schema",
        "schema_ref": "hospital/case",
        "required_paths": [["case_id", "text"], ["patient_id", "text"],
                           ["assigned_doctors", "list"], ["annotations", "list"],
                           ["treatments", "list"], ["version", "integer"]],
        "range_checks": [],
        "cross_field_checks": [],
    }
    configs["schemas/hospital-form.json"] = {
        "kind": "schema",
        "schema_ref": "hospital/form",
        "required_paths": [["form_id", "text"], ["title", "text"],
                           ["questions", "list"], ["created_by", "text"]],
        "range_checks": [],
        "cross_field_checks": [],
    }
    configs["schemas/hospital-assignment.json"] = {
        "kind": "schema",
        "schema_ref": "hospital/assignment",
        "required_paths": [["assignment_id", "text"], ["form_id", "text"],
                           ["patient_id", "text"], ["recurrence", "text"],
                           ["assigned_by", "text"], ["status", "text"],
                           ["due_at", "text"]],
        "range_checks": [],
        "cross_field_checks": [],
    }
    configs["schemas/hospital-subscription.json"] = {
        "kind": "schema",
        "schema_ref": "hospital/subscription",
        "required_paths": [["sub_id", "text"], ["user_id", "text"],
                           ["topic_kind", "text"], ["topic_key", "text"]],
        "range_checks": [],
        "cross_field_checks": [],
    }
    configs["schemas/hospital-alert.json"] = {
        "kind": "schema",
        "schema_ref": "hospital/alert",
        "required_paths": [["alert_id", "text"], ["sub_id", "text"],
                           ["event_ref", "text"], ["created_at", "text"],
                           ["delivered", "boolean"]],
        "range_checks": [],
        "cross_field_checks": [],
    }

    configs["rules/cleaning-default.json"] = {
        "kind": "cleaning_rules",
        "rules": [
            {"applies_to": "*", "kind": "trim_text", "path": "strain_name",
             "pattern": None, "rule_id": "trim-strain-name", "target_unit": None},
            {"applies_to": "hospital/treatment", "kind": "unit_normalize",
             "path": "dose", "pattern": "^(\\d+(\\.\\d+)?) ?mg$",
             "rule_id": "dose-mg", "target_unit": "mg"},
            {"applies_to": "*", "kind": "drop_field", "path": "internal_notes",
             "pattern": None, "rule_id": "drop-internal-notes", "target_unit": None},
        ],
    }
    configs["rules/categories-default.json"] = {
        "kind": "category_rules",
        "rules": [
            {"literal": "pain", "operator": "contains", "path": "free_notes",
             "rule_id": "notes-pain", "tag": "chronic-pain"},
            {"literal": 15.0, "operator": "gt", "path": "cannabinoids.thc_pct",
             "rule_id": "thc-high", "tag": "high-thc"},
            {"literal": 1.0, "operator": "gt", "path": "cannabinoids.cbd_pct",
             "rule_id": "cbd-rich", "tag": "cbd-rich"},
        ],
    }

    configs["datasets/strain-profiles.json"] = {
        "kind": "dataset",
        "dataset_id": "strain-profiles",
        "filter": {"provider": None, "schema_ref": "strain/profile", "sub_domain": None},
        "cleaning": ["trim-strain-name"],
        "categorization": ["thc-high", "cbd-rich"],
    }
    configs["datasets/hospital-treatments.json"] = {
        "kind": "dataset",
        "dataset_id": "hospital-treatments",
        "filter": {"provider": None, "schema_ref": "hospital/treatment",
                   "sub_domain": "hospital"},
        "cleaning": ["drop-internal-notes"],
        "categorization": ["notes-pain"],
    }

    configs["anonymise.policy"] = AnonymisationPolicy.default().to_value()
    return configs


def write_builtin_configs(config_dir: Path | str) -> None:
    root = Path(config_dir)
    for rel_path, value in builtin_configs().items():
        write_config(root / rel_path, value)


def builtin_registry() -> ConfigRegistry:
    registry = ConfigRegistry()
    for value in builtin_configs().values():
        registry.add(value)
    registry.finalize()
    return registry
