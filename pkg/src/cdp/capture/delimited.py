"""Delimited-text parsing with RFC-4180-style double-quote conventions."""

from __future__ import annotations

import csv
import io

from ..errors import MissingHeader, ParseError, RaggedRow


def parse_delimited(data: bytes, delimiter: str = ",") -> list[dict[str, str]]:
    """Rows as header->text maps. Quoted fields may embed the delimiter and
    newlines; doubled quotes escape a quote.
    """
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"input is not valid UTF-8: {exc.reason}", offset=exc.start) from None

    reader = csv.reader(io.StringIO(text), delimiter=delimiter, strict=True)
    try:
        header = next(reader, None)
    except csv.Error as exc:
        raise ParseError(f"bad delimited header: {exc}") from None
    if header is None or header == []:
        raise MissingHeader()
    if len(set(header)) != len(header):
        raise ParseError(f"duplicate header names in {header!r}")

    rows: list[dict[str, str]] = []
    try:
        for row in reader:
            if not row:
                continue  # tolerate blank separator lines between records
            if len(row) != len(header):
                raise RaggedRow(reader.line_num, expected=len(header), got=len(row))
            rows.append(dict(zip(header, row)))
    except csv.Error as exc:
        raise ParseError(f"bad delimited row at line {reader.line_num}: {exc}") from None
    return rows
