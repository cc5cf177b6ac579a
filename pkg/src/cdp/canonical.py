"""Canonical text serialization: the platform's on-disk and wire format.

The format is a strict JSON subset, pinned byte-exactly:

* map keys sorted lexicographically by code point, unique
* no insignificant whitespace (separators `,` and `:`)
* text NFC-normalized; escapes limited to `\\"`, `\\\\`, the short forms
  `\\b \\t \\n \\f \\r`, and `\\u00xx` (lowercase hex) for other control
  characters below 0x20; everything else is literal UTF-8
* integers in plain decimal; decimals in the shortest form that round-trips
  to the same double (Python repr), so `250.0`, `12.5`, `1e+16`
* booleans `true`/`false`, null `null`

Because control characters are always escaped, a canonical document never
contains a raw newline — store segments and logs frame records by line.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any

from .errors import InvariantViolation, ParseError
from .fields import INT64_MAX, INT64_MIN

HEX_DIGEST_LEN = 64


def canonical_dumps(value: Any) -> bytes:
    """Serialize a value tree to canonical bytes.

    Values must already satisfy the field model (validated at record
    construction); this re-checks what json would silently mangle.
    """
    _check_serializable(value)
    try:
        text = json.dumps(
            value,
            ensure_ascii=False,
            allow_nan=False,
            sort_keys=True,
            separators=(",", ":"),
        )
    except ValueError as exc:
        raise InvariantViolation(str(exc)) from None
    return text.encode("utf-8")


def _check_serializable(value: Any) -> None:
    if value is None or isinstance(value, (bool, str)):
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
            _check_serializable(item)
        return
    if isinstance(value, dict):
        for key, item in value.items():
            if not isinstance(key, str):
                raise InvariantViolation(f"map key {key!r} is not text")
            _check_serializable(item)
        return
    raise InvariantViolation(f"unsupported value type {type(value).__name__}")


def _reject_constant(token: str) -> Any:
    raise InvariantViolation(f"non-finite decimal {token} is not allowed")


def _unique_pairs(pairs: list[tuple[str, Any]]) -> dict:
    obj: dict = {}
    for key, value in pairs:
        if key in obj:
            raise InvariantViolation(f"duplicate map key {key!r}")
        obj[key] = value
    return obj


def canonical_loads(data: bytes) -> Any:
    """Parse canonical (or merely well-formed) JSON bytes into a value tree.

    ParseError carries the byte offset of the failure. Well-formed input
    that breaks invariants (NaN, duplicate keys, out-of-range integers)
    raises InvariantViolation instead.
    """
    if isinstance(data, str):
        data = data.encode("utf-8")
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"input is not valid UTF-8: {exc.reason}", offset=exc.start) from None
    try:
        value = json.loads(
            text,
            parse_constant=_reject_constant,
            object_pairs_hook=_unique_pairs,
        )
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise ParseError(exc.msg, offset=offset, line=exc.lineno, column=exc.colno) from None
    _check_serializable(value)
    return value


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def digest_value(value: Any) -> str:
    """Content digest of a value tree: SHA-256 over its canonical bytes."""
    return sha256_hex(canonical_dumps(value))


def is_hex_digest(text: Any) -> bool:
    return (
        isinstance(text, str)
        and len(text) == HEX_DIGEST_LEN
        and all(c in "0123456789abcdef" for c in text)
    )
