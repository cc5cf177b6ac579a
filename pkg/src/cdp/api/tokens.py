"""Opaque bearer tokens with refresh rotation.

Tokens are 256-bit random strings stored server-side (revocable, no
self-encoded claims). Access tokens live 15 minutes, refresh tokens 14
days and are single-use: consuming one issues a fresh pair and invalidates
the old refresh token atomically, so a replayed refresh always fails and
each session chain has at most one live refresh token. The clock is
injected so TTLs are testable.
"""

from __future__ import annotations

import secrets
import threading
from dataclasses import dataclass
from typing import Callable, Optional

from ..clock import Clock
from ..errors import Unauthorized

ACCESS_TTL_SECONDS = 15 * 60
REFRESH_TTL_SECONDS = 14 * 24 * 3600


@dataclass(frozen=True)
class Principal:
    user_id: str
    role: str
    is_admin: bool


@dataclass(frozen=True)
class TokenPair:
    access_token: str
    refresh_token: str
    subject: str
    role: str
    access_expires_at: float
    refresh_expires_at: float

    def to_value(self) -> dict:
        return {
            "access_token": self.access_token,
            "expires_in": ACCESS_TTL_SECONDS,
            "refresh_token": self.refresh_token,
            "role": self.role,
            "token_type": "bearer",
            "user_id": self.subject,
        }


@dataclass
class _AccessEntry:
    principal: Principal
    expires_at: float


@dataclass
class _RefreshEntry:
    user_id: str
    expires_at: float
    consumed: bool = False


class TokenStore:
    def __init__(self, clock: Optional[Clock] = None):
        self.clock = clock or Clock()
        self._lock = threading.Lock()
        self._access: dict[str, _AccessEntry] = {}
        self._refresh: dict[str, _RefreshEntry] = {}

    def issue(self, principal: Principal) -> TokenPair:
        now = self.clock.epoch()
        pair = TokenPair(
            access_token=secrets.token_hex(32),
            refresh_token=secrets.token_hex(32),
            subject=principal.user_id,
            role=principal.role,
            access_expires_at=now + ACCESS_TTL_SECONDS,
            refresh_expires_at=now + REFRESH_TTL_SECONDS,
        )
        with self._lock:
            self._access[pair.access_token] = _AccessEntry(principal, pair.access_expires_at)
            self._refresh[pair.refresh_token] = _RefreshEntry(
                principal.user_id, pair.refresh_expires_at
            )
        return pair

    def validate_access(self, token: str) -> Principal:
        with self._lock:
            entry = self._access.get(token)
            if entry is None:
                raise Unauthorized("invalid or unknown access token")
            if self.clock.epoch() >= entry.expires_at:
                del self._access[token]
                raise Unauthorized("access token expired", code="token_expired")
            return entry.principal

    def refresh(self, refresh_token: str, resolve: Callable[[str], Principal]) -> TokenPair:
        """Rotate: consume the old refresh token, re-snapshot the user's
        current role, issue a new pair. Replays and expired tokens get the
        same uniform rejection."""
        with self._lock:
            entry = self._refresh.get(refresh_token)
            if entry is None or entry.consumed or self.clock.epoch() >= entry.expires_at:
                raise Unauthorized("invalid refresh token")
            entry.consumed = True
            user_id = entry.user_id
        principal = resolve(user_id)
        return self.issue(principal)
