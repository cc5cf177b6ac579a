"""UTC clock with second precision, injectable for deterministic tests.

All timestamps in the platform are RFC 3339 strings in the canonical
`YYYY-MM-DDTHH:MM:SSZ` form: UTC only, second precision, no offsets.
"""

from __future__ import annotations

import re
from datetime import datetime, timedelta, timezone

from .errors import InvariantViolation

_RFC3339 = re.compile(r"^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}Z$")


def format_timestamp(dt: datetime) -> str:
    """Render a datetime as a canonical RFC 3339 UTC string (seconds)."""
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    dt = dt.astimezone(timezone.utc).replace(microsecond=0)
    return dt.strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_timestamp(text: str) -> datetime:
    """Parse a canonical RFC 3339 UTC string; reject anything else."""
    if not isinstance(text, str) or not _RFC3339.match(text):
        raise InvariantViolation(f"not a canonical RFC 3339 UTC timestamp: {text!r}")
    try:
        dt = datetime.strptime(text, "%Y-%m-%dT%H:%M:%SZ")
    except ValueError as exc:
        raise InvariantViolation(f"invalid timestamp {text!r}: {exc}") from None
    return dt.replace(tzinfo=timezone.utc)


def is_timestamp(text: str) -> bool:
    try:
        parse_timestamp(text)
        return True
    except InvariantViolation:
        return False


def add_days(timestamp: str, days: int) -> str:
    return format_timestamp(parse_timestamp(timestamp) + timedelta(days=days))


class Clock:
    """Wall clock, truncated to seconds."""

    def now(self) -> datetime:
        return datetime.now(timezone.utc).replace(microsecond=0)

    def now_text(self) -> str:
        return format_timestamp(self.now())

    def epoch(self) -> float:
        return self.now().timestamp()


class ManualClock(Clock):
    """Settable clock for tests (token TTLs, recurrence arithmetic)."""

    def __init__(self, start: str = "2019-03-27T09:00:00Z"):
        self._now = parse_timestamp(start)

    def now(self) -> datetime:
        return self._now

    def set(self, text: str) -> None:
        self._now = parse_timestamp(text)

    def advance(self, seconds: int = 0, days: int = 0) -> None:
        self._now = self._now + timedelta(seconds=seconds, days=days)
