"""Structure-class sniffing for incoming documents.

Order is fixed (first match wins): tree (JSON, then XML) -> delimited ->
opaque. Known binary magics short-circuit straight to unstructured, which
is also the fallback for anything unrecognised — the function is total.
"""

from __future__ import annotations

import csv
import io
import json
import xml.etree.ElementTree as ET
from typing import Optional

from ..records import StructureClass
from ..store import RawDocument

# magics for formats the platform deliberately stores raw (PDF, office, images)
_BINARY_MAGICS = (
    b"%PDF",
    b"PK\x03\x04",          # zip-based office formats
    b"\xd0\xcf\x11\xe0",    # OLE2 (legacy .doc/.xls)
    b"\x89PNG",
    b"\xff\xd8\xff",        # jpeg
    b"GIF87a",
    b"GIF89a",
    b"BM",
)

DELIMITERS = (",", ";", "\t", "|")
_SNIFF_BYTES = 65536
_SNIFF_ROWS = 20


def _sniff_delimiter(text: str) -> Optional[str]:
    """First candidate delimiter yielding a consistent table, else None."""
    sample = text[:_SNIFF_BYTES]
    for delimiter in DELIMITERS:
        try:
            rows = []
            for row in csv.reader(io.StringIO(sample), delimiter=delimiter):
                if row:
                    rows.append(row)
                if len(rows) >= _SNIFF_ROWS:
                    break
        except csv.Error:
            continue
        if len(rows) < 2:
            continue
        width = len(rows[0])
        if width < 2:
            continue
        if any(len(row) != width for row in rows):
            continue
        if any(cell.strip() == "" for cell in rows[0]):
            continue  # header cells must be non-empty
        return delimiter
    return None


def sniff(doc: RawDocument) -> tuple[StructureClass, str, Optional[str]]:
    """(structure class, format label, delimiter if delimited)."""
    data = doc.data
    for magic in _BINARY_MAGICS:
        if data.startswith(magic):
            return StructureClass.UNSTRUCTURED, "opaque", None
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        return StructureClass.UNSTRUCTURED, "opaque", None

    stripped = text.lstrip()
    if stripped.startswith(("{", "[")):
        try:
            json.loads(text)
            return StructureClass.SEMI_STRUCTURED, "tree-json", None
        except json.JSONDecodeError:
            pass
    if stripped.startswith("<"):
        try:
            ET.fromstring(text)
            return StructureClass.SEMI_STRUCTURED, "tree-xml", None
        except ET.ParseError:
            pass

    delimiter = _sniff_delimiter(text)
    if delimiter is not None:
        return StructureClass.STRUCTURED, "delimited", delimiter

    return StructureClass.UNSTRUCTURED, "opaque", None


def detect_structure(doc: RawDocument) -> tuple[StructureClass, str]:
    structure_class, label, _ = sniff(doc)
    return structure_class, label
