from .detect import detect_structure  # noqa: F401
from .delimited import parse_delimited  # noqa: F401
from .tree import parse_tree  # noqa: F401
from .mapping import MappingRule, MappingSpec, apply_mapping  # noqa: F401
from .ingest import IngestReport, IngestStatus, Ingestor  # noqa: F401
