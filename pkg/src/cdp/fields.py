"""Field value model: the typed tree every record's content lives in.

Values are plain Python objects — None, bool, int (64-bit signed), float
(finite), str (NFC), list, dict — validated rather than wrapped. Field
names are non-empty and contain no '.', which keeps dot-paths unambiguous.
"""

from __future__ import annotations

import re
import unicodedata
from typing import Any, Iterator

from .errors import InvariantViolation, PathSyntaxError

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1

# Sentinel distinguishing "path absent" from a stored null.
MISSING = object()

_NUMERIC_SEGMENT = re.compile(r"^(0|[1-9][0-9]*)$")


def validate_field_name(name: Any) -> None:
    if not isinstance(name, str):
        raise InvariantViolation(f"field name must be text, got {type(name).__name__}")
    if name == "":
        raise InvariantViolation("field name must be non-empty")
    if "." in name:
        raise InvariantViolation(f"field name {name!r} contains '.'")


def validate_value(value: Any) -> None:
    """Check one field value (recursively) against the model invariants."""
    if value is None or isinstance(value, bool) or isinstance(value, str):
        return
    if isinstance(value, int):
        if not INT64_MIN <= value <= INT64_MAX:
            raise InvariantViolation(f"integer {value} outside 64-bit signed range")
        return
    if isinstance(value, float):
        if value != value or value in (float("inf"), float("-inf")):
            raise InvariantViolation("decimal values must be finite")
        return
    if isinstance(value, list):
        for item in value:
            validate_value(item)
        return
    if isinstance(value, dict):
        for name, item in value.items():
            validate_field_name(name)
            validate_value(item)
        return
    raise InvariantViolation(f"unsupported field value type {type(value).__name__}")


def validate_field_tree(tree: Any) -> None:
    if not isinstance(tree, dict):
        raise InvariantViolation("record fields must be a map")
    validate_value(tree)


def normalize(value: Any) -> Any:
    """Return a copy with all text (keys and values) normalized to NFC."""
    if isinstance(value, str):
        return unicodedata.normalize("NFC", value)
    if isinstance(value, list):
        return [normalize(item) for item in value]
    if isinstance(value, dict):
        return {unicodedata.normalize("NFC", k) if isinstance(k, str) else k: normalize(v)
                for k, v in value.items()}
    return value


def kind_of(value: Any) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, int):
        return "integer"
    if isinstance(value, float):
        return "decimal"
    if isinstance(value, str):
        return "text"
    if isinstance(value, list):
        return "list"
    if isinstance(value, dict):
        return "map"
    raise InvariantViolation(f"unsupported field value type {type(value).__name__}")


def structurally_equal(a: Any, b: Any) -> bool:
    """Kind-aware deep equality.

    Stricter than Python ==: booleans never equal integers, and decimals
    compare by rendered form so 0.0 != -0.0 (their serializations differ).
    """
    ka, kb = kind_of(a), kind_of(b)
    if ka != kb:
        return False
    if ka == "decimal":
        return repr(a) == repr(b)
    if ka == "list":
        return len(a) == len(b) and all(structurally_equal(x, y) for x, y in zip(a, b))
    if ka == "map":
        return a.keys() == b.keys() and all(structurally_equal(v, b[k]) for k, v in a.items())
    return a == b


def parse_path(path: str) -> list[str]:
    """Split a dot-path into validated segments.

    Digit-leading segments must be canonical non-negative integers (list
    indices); anything else digit-leading is a malformed numeric index.
    """
    if not isinstance(path, str) or path == "":
        raise PathSyntaxError("path must be a non-empty string")
    segments = path.split(".")
    for seg in segments:
        if seg == "":
            raise PathSyntaxError(f"path {path!r} has an empty segment")
        if seg[0].isdigit() and not _NUMERIC_SEGMENT.match(seg):
            raise PathSyntaxError(f"path {path!r}: malformed numeric index {seg!r}")
    return segments


def field_get(tree: Any, path: str) -> Any:
    """Value at `path`, or MISSING. Never errors on syntactically valid paths."""
    current = tree
    for seg in parse_path(path):
        if isinstance(current, dict):
            if seg not in current:
                return MISSING
            current = current[seg]
        elif isinstance(current, list):
            if not _NUMERIC_SEGMENT.match(seg):
                return MISSING
            idx = int(seg)
            if idx >= len(current):
                return MISSING
            current = current[idx]
        else:
            return MISSING
    return current


def field_set(tree: dict, path: str, value: Any) -> dict:
    """Copy of `tree` with `value` at `path`.

    Missing intermediate maps are created; existing lists are traversed by
    numeric segments (in range only — lists are never grown). Writing
    through any other value raises InvariantViolation.
    """
    segments = parse_path(path)
    return _set(tree, segments, value, path)


def _set(node: Any, segments: list[str], value: Any, full: str) -> Any:
    head = segments[0]
    if isinstance(node, list):
        if not _NUMERIC_SEGMENT.match(head) or int(head) >= len(node):
            raise InvariantViolation(f"path {full!r} indexes outside a list")
        idx = int(head)
        out_list = list(node)
        out_list[idx] = value if len(segments) == 1 else _set(node[idx], segments[1:], value, full)
        return out_list
    if not isinstance(node, dict):
        raise InvariantViolation(f"path {full!r} crosses a non-map value")
    out = dict(node)
    if len(segments) == 1:
        out[head] = value
    else:
        child = node.get(head, {})
        out[head] = _set(child, segments[1:], value, full)
    return out


def field_delete(tree: dict, path: str) -> tuple[dict, Any]:
    """Copy of `tree` without `path`. Returns (new_tree, removed or MISSING)."""
    segments = parse_path(path)
    return _delete(tree, segments)


def _delete(node: Any, segments: list[str]) -> tuple[Any, Any]:
    head = segments[0]
    if isinstance(node, dict):
        if head not in node:
            return node, MISSING
        if len(segments) == 1:
            out = dict(node)
            removed = out.pop(head)
            return out, removed
        child, removed = _delete(node[head], segments[1:])
        if removed is MISSING:
            return node, MISSING
        out = dict(node)
        out[head] = child
        return out, removed
    if isinstance(node, list) and _NUMERIC_SEGMENT.match(head):
        idx = int(head)
        if idx >= len(node):
            return node, MISSING
        if len(segments) == 1:
            out_list = node[:idx] + node[idx + 1:]
            return out_list, node[idx]
        child, removed = _delete(node[idx], segments[1:])
        if removed is MISSING:
            return node, MISSING
        out_list = list(node)
        out_list[idx] = child
        return out_list, removed
    return node, MISSING


def iter_text_leaves(value: Any, prefix: str = "") -> Iterator[tuple[str, str]]:
    """Yield (path, text) for every text leaf, in deterministic order."""
    if isinstance(value, str):
        yield prefix, value
    elif isinstance(value, list):
        for i, item in enumerate(value):
            yield from iter_text_leaves(item, f"{prefix}.{i}" if prefix else str(i))
    elif isinstance(value, dict):
        for key in sorted(value):
            yield from iter_text_leaves(value[key], f"{prefix}.{key}" if prefix else key)


def iter_leaves(value: Any, prefix: str = "") -> Iterator[tuple[str, Any]]:
    """Yield (path, value) for every scalar leaf, in deterministic order."""
    if isinstance(value, list):
        for i, item in enumerate(value):
            yield from iter_leaves(item, f"{prefix}.{i}" if prefix else str(i))
    elif isinstance(value, dict):
        for key in sorted(value):
            yield from iter_leaves(value[key], f"{prefix}.{key}" if prefix else key)
    else:
        yield prefix, value
