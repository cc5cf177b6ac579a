"""Cannabinoids Data Platform.

Layered platform for heterogeneous data: capture into a canonical
meta-format, dual-zone storage with append-only lineage, processing
(cleaning, categorization, indexed search, dataset materialization),
quality enforcement with byte-exact replay, clinical workflows with
anonymised research access, and strain similarity analytics.
"""

__version__ = "0.1.0"

from .records import (  # noqa: F401
    LineageEvent,
    MetaRecord,
    SourceDescriptor,
    Stage,
    StructureClass,
    SubDomain,
    build_record,
    canonical_parse,
    canonical_serialize,
    record_id_of,
)
from .store import RawDocument, Store, StoreStats  # noqa: F401
