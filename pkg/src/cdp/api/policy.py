"""Role-based access policy: the route table IS the matrix.

Every endpoint names the roles allowed to call it; anything absent is
denied (403 for an authenticated caller, 401 without a valid token).
"anonymous" rows skip authentication entirely. "admin" is not a role but
the coordinator flag on a doctor account — rows carrying it admit flagged
users only. Resource-level rules (case assignment, ownership) are enforced
by the handlers after this matrix.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

ROLES = ("patient", "doctor", "grower", "researcher")
ANY_AUTHENTICATED = frozenset(ROLES)


@dataclass(frozen=True)
class Route:
    method: str
    pattern: str  # /cases/{id} style
    name: str
    roles: frozenset[str]

    def regex(self) -> re.Pattern:
        parts = []
        for piece in self.pattern.strip("/").split("/"):
            if piece.startswith("{") and piece.endswith("}"):
                parts.append(f"(?P<{piece[1:-1]}>[^/]+)")
            else:
                parts.append(re.escape(piece))
        return re.compile("^/" + "/".join(parts) + "$")


def _route(method: str, pattern: str, name: str, *roles: str) -> Route:
    return Route(method, pattern, name, frozenset(roles))


ROUTES: tuple[Route, ...] = (
    _route("GET", "/health", "health", "anonymous"),
    _route("POST", "/auth/register", "register", "anonymous"),
    _route("POST", "/auth/login", "login", "anonymous"),
    _route("POST", "/auth/refresh", "refresh", "anonymous"),
    _route("GET", "/users/me", "whoami", *ROLES),
    _route("POST", "/users/{user_id}/researcher-request", "researcher_request",
           "patient", "doctor"),
    _route("POST", "/users/{user_id}/researcher-decision", "researcher_decision", "admin"),
    _route("GET", "/forms", "list_forms", "doctor"),
    _route("POST", "/forms", "create_form", "doctor"),
    _route("GET", "/forms/{form_id}", "get_form", "patient", "doctor"),
    _route("POST", "/forms/{form_id}/assignments", "assign_form", "doctor"),
    _route("GET", "/assignments", "list_assignments", "patient", "doctor"),
    _route("POST", "/assignments/{assignment_id}/submission", "submit_assignment", "patient"),
    _route("DELETE", "/assignments/{assignment_id}", "withdraw_assignment", "doctor"),
    _route("GET", "/patients", "list_patients", "doctor"),
    _route("GET", "/patients/{patient_id}/treatments", "list_treatments",
           "patient", "doctor"),
    _route("POST", "/patients/{patient_id}/treatments", "add_treatment",
           "patient", "doctor"),
    _route("DELETE", "/patients/{patient_id}/treatments/{entry_id}", "remove_treatment",
           "doctor"),
    _route("GET", "/cases", "list_cases", "patient", "doctor"),
    _route("GET", "/cases/{case_id}", "get_case", "patient", "doctor"),
    _route("POST", "/cases/{case_id}/annotations", "annotate_case", "doctor"),
    _route("POST", "/cases/{case_id}/doctors", "assign_doctor", "doctor"),
    _route("GET", "/research/cases", "research_cases", "researcher"),
    _route("GET", "/research/records/{record_id}", "research_record", "researcher"),
    _route("GET", "/search", "search", "researcher"),
    _route("POST", "/ingest", "ingest", "doctor", "grower", "researcher"),
    _route("POST", "/reindex", "reindex", "admin"),
    _route("GET", "/strains", "list_strains", "grower", "researcher"),
    _route("GET", "/strains/{sample_id}/similar", "similar_strains", "grower", "researcher"),
    _route("GET", "/strains/consistency", "strain_consistency", "grower", "researcher"),
    _route("GET", "/alerts", "list_alerts", *ROLES),
    _route("GET", "/subscriptions", "list_subscriptions", *ROLES),
    _route("POST", "/subscriptions", "subscribe", *ROLES),
)


class AccessPolicy:
    """Deny-by-default matcher over the route table."""

    def __init__(self, routes: tuple[Route, ...] = ROUTES):
        self.routes = routes
        self._compiled = [(route, route.regex()) for route in routes]

    def match(self, method: str, path: str) -> tuple[Optional[Route], Optional[dict], bool]:
        """(route, path params, path_known). route is None when denied."""
        path_known = False
        for route, regex in self._compiled:
            found = regex.match(path)
            if found:
                path_known = True
                if route.method == method:
                    return route, found.groupdict(), True
        return None, None, path_known

    def allows(self, route: Route, role: str, is_admin: bool) -> bool:
        if role in route.roles:
            return True
        return is_admin and "admin" in route.roles
