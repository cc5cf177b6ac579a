from .schema import SchemaConstraint, Severity, ValidationIssue, validate  # noqa: F401
from .report import QualityReport, quality_report  # noqa: F401
from .replay import replay, verify_replay  # noqa: F401
