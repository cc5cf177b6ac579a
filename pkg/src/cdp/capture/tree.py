"""Tree-format parsing (JSON and XML) into field value trees.

XML mapping is lossless and conventional: attributes become "@name" keys,
repeated child element names become lists, and an element with attributes
or children keeps its own text under "#text". A pure text element maps to
its text directly, so all XML leaf values are text.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from typing import Any

from ..canonical import canonical_loads
from ..errors import ParseError


def parse_tree(data: bytes, format_label: str) -> Any:
    if format_label == "tree-json":
        return canonical_loads(data)
    if format_label == "tree-xml":
        return _parse_xml(data)
    raise ParseError(f"unknown tree format {format_label!r}")


def _parse_xml(data: bytes) -> dict:
    try:
        root = ET.fromstring(data.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise ParseError(f"input is not valid UTF-8: {exc.reason}", offset=exc.start) from None
    except ET.ParseError as exc:
        line, column = exc.position
        raise ParseError(str(exc), line=line, column=column) from None
    return {root.tag: _element_value(root)}


def _element_value(element: ET.Element) -> Any:
    children = list(element)
    pieces = [element.text or ""] + [child.tail or "" for child in children]
    text = "".join(pieces).strip()
    if not element.attrib and not children:
        return text
    value: dict[str, Any] = {f"@{k}": v for k, v in element.attrib.items()}
    by_tag: dict[str, list] = {}
    for child in children:
        by_tag.setdefault(child.tag, []).append(_element_value(child))
    for tag, values in by_tag.items():
        value[tag] = values[0] if len(values) == 1 else values
    if text:
        value["#text"] = text
    return value
