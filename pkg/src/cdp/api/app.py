"""HTTP API over the platform: canonical JSON wire format, bearer auth,
deny-by-default role policy, resource-level rules in handlers.

The app core is transport-free — handle(Request) -> Response — so the
whole surface is testable in-process; serve() binds it to a threading
stdlib HTTP server with permissive CORS for the companion browser UI.
Errors use one body shape everywhere: {"error": code, "detail": text}.
"""

from __future__ import annotations

import email.parser
import email.policy
import threading
from dataclasses import dataclass, field as dataclass_field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any, Optional
from urllib.parse import parse_qs, urlsplit

from ..analytics.strain import name_consistency, nearest, profiles_from_store
from ..canonical import canonical_dumps, canonical_loads
from ..capture.ingest import Ingestor
from ..clock import Clock
from ..configs import ConfigRegistry
from ..errors import (
    CdpError,
    CoercionError,
    ConfigError,
    DimensionMismatch,
    DuplicateUsername,
    EmptyAnnotation,
    Forbidden,
    InvalidTransition,
    InvariantViolation,
    MalformedId,
    MappingError,
    ParseError,
    PathSyntaxError,
    RoleNotGrantable,
    RuleError,
    StorageError,
    Unauthorized,
    UnknownDataset,
    UnknownResource,
    ValidationFailed,
    WeakPassword,
)
from ..hospital.service import RESEARCHABLE_SCHEMAS, HospitalService
from ..processing.indexing import InvertedIndex, rebuild_search_index, search
from ..records import SubDomain
from ..store import RawDocument, Store
from .policy import AccessPolicy, Route
from .tokens import Principal, TokenStore

DEFAULT_LIMIT = 50
MAX_LIMIT = 500


@dataclass
class Request:
    method: str
    path: str
    query: dict[str, list[str]] = dataclass_field(default_factory=dict)
    headers: dict[str, str] = dataclass_field(default_factory=dict)
    body: bytes = b""

    @staticmethod
    def make(method: str, target: str, headers: Optional[dict] = None, body: bytes = b"") -> "Request":
        split = urlsplit(target)
        return Request(
            method=method.upper(),
            path=split.path or "/",
            query=parse_qs(split.query),
            headers={k.lower(): v for k, v in (headers or {}).items()},
            body=body,
        )

    def param(self, name: str, default: Optional[str] = None) -> Optional[str]:
        values = self.query.get(name)
        return values[0] if values else default


@dataclass
class Response:
    status: int
    body: bytes
    content_type: str = "application/json"


def json_response(value: Any, status: int = 200) -> Response:
    return Response(status=status, body=canonical_dumps(value))


def error_response(status: int, code: str, detail: str) -> Response:
    return json_response({"detail": detail, "error": code}, status=status)


_ERROR_MAP: list[tuple[type, int, str]] = [
    (Unauthorized, 401, "unauthorized"),
    (Forbidden, 403, "forbidden"),
    (UnknownResource, 404, "not_found"),
    (UnknownDataset, 404, "unknown_dataset"),
    (DuplicateUsername, 409, "duplicate_username"),
    (InvalidTransition, 409, "invalid_transition"),
    (WeakPassword, 422, "weak_password"),
    (RoleNotGrantable, 422, "role_not_grantable"),
    (ValidationFailed, 422, "validation_failed"),
    (EmptyAnnotation, 422, "empty_annotation"),
    (DimensionMismatch, 422, "dimension_mismatch"),
    (RuleError, 422, "rule_error"),
    (ParseError, 400, "bad_request"),
    (MappingError, 400, "bad_request"),
    (CoercionError, 400, "bad_request"),
    (PathSyntaxError, 400, "bad_request"),
    (MalformedId, 400, "bad_request"),
    (InvariantViolation, 400, "bad_request"),
    (ConfigError, 500, "config_error"),
    (StorageError, 500, "storage_error"),
]


def map_error(exc: CdpError) -> Response:
    for exc_type, status, code in _ERROR_MAP:
        if isinstance(exc, exc_type):
            code = getattr(exc, "code", code) if isinstance(exc, Unauthorized) else code
            return error_response(status, code, str(exc))
    return error_response(500, "internal_error", str(exc))


def parse_multipart(content_type: str, body: bytes) -> dict[str, tuple[Optional[str], bytes]]:
    """form field name -> (filename, bytes) via the stdlib email parser."""
    message = email.parser.BytesParser(policy=email.policy.HTTP).parsebytes(
        b"Content-Type: " + content_type.encode("latin-1") + b"\r\nMIME-Version: 1.0\r\n\r\n" + body
    )
    if not message.is_multipart():
        raise ParseError("expected multipart/form-data")
    fields: dict[str, tuple[Optional[str], bytes]] = {}
    for part in message.iter_parts():
        name = part.get_param("name", header="content-disposition")
        if not name:
            continue
        payload = part.get_payload(decode=True) or b""
        fields[name] = (part.get_filename(), payload)
    return fields


class App:
    def __init__(
        self,
        store: Store,
        registry: ConfigRegistry,
        clock: Optional[Clock] = None,
        pseudonym_key: bytes = b"",
        admin_username: str = "admin",
        admin_password: Optional[str] = None,
        pbkdf2_iterations: Optional[int] = None,
    ):
        self.clock = clock or Clock()
        self.store = store
        self.registry = registry
        kwargs = {"pbkdf2_iterations": pbkdf2_iterations} if pbkdf2_iterations else {}
        self.hospital = HospitalService(store, registry, self.clock, **kwargs)
        self.tokens = TokenStore(self.clock)
        self.policy = AccessPolicy()
        self.ingestor = Ingestor(store, registry)
        self.pseudonym_key = pseudonym_key
        self._index_lock = threading.Lock()
        blob = store.load_index_blob()
        self.index: InvertedIndex = InvertedIndex.from_value(blob) if blob else InvertedIndex()
        if admin_password:
            self.hospital.ensure_admin(admin_username, admin_password)

    # ------------------------------------------------------------------

    def handle(self, request: Request) -> Response:
        route, params, path_known = self.policy.match(request.method, request.path)
        if route is None:
            if path_known:
                return error_response(405, "method_not_allowed", "method not allowed here")
            return error_response(404, "not_found", "no such endpoint")
        try:
            if "anonymous" in route.roles:
                principal = None
            else:
                principal = self._authenticate(request)
                if not self.policy.allows(route, principal.role, principal.is_admin):
                    return error_response(403, "forbidden", "role not allowed on this endpoint")
            handler = getattr(self, f"handle_{route.name}")
            return handler(request, principal, params or {})
        except CdpError as exc:
            return map_error(exc)

    def _authenticate(self, request: Request) -> Principal:
        header = request.headers.get("authorization", "")
        if not header.startswith("Bearer "):
            raise Unauthorized("missing bearer token")
        principal = self.tokens.validate_access(header[len("Bearer "):].strip())
        # authorize with the live role so an approved researcher upgrade
        # takes effect without waiting out the access-token TTL
        return self._principal_for(principal.user_id)

    def _principal_for(self, user_id: str) -> Principal:
        user = self.hospital.state["hospital/user"].get(user_id)
        if user is None:
            raise Unauthorized("unknown subject")
        return Principal(
            user_id=user_id,
            role=user["role"],
            is_admin=self.hospital.is_coordinator(user_id),
        )

    def _body_value(self, request: Request) -> Any:
        if not request.body:
            return {}
        return canonical_loads(request.body)

    def _page(self, request: Request, items: list) -> dict:
        try:
            offset = max(0, int(request.param("offset", "0")))
            limit = int(request.param("limit", str(DEFAULT_LIMIT)))
        except ValueError:
            raise ParseError("offset/limit must be integers") from None
        limit = max(1, min(limit, MAX_LIMIT))
        return {
            "items": items[offset: offset + limit],
            "limit": limit,
            "offset": offset,
            "total": len(items),
        }

    def _need_key(self) -> bytes:
        if not self.pseudonym_key:
            raise ConfigError("CDP_PSEUDONYM_KEY is not configured on this server")
        return self.pseudonym_key

    # ------------------------------------------------------------------
    # auth
    # ------------------------------------------------------------------

    def handle_health(self, request, principal, params) -> Response:
        return json_response({"status": "ok"})

    def handle_register(self, request, principal, params) -> Response:
        value = self._body_value(request)
        user = self.hospital.register_user(
            username=value.get("username", ""),
            password=value.get("password", ""),
            requested_role=value.get("role", ""),
            profile=value.get("profile") or {},
        )
        return json_response(user, status=201)

    def handle_login(self, request, principal, params) -> Response:
        value = self._body_value(request)
        user = self.hospital.verify_credentials(
            value.get("username", ""), value.get("password", "")
        )
        if user is None:
            # uniform body: unknown user and wrong password are identical
            return error_response(401, "unauthorized", "invalid username or password")
        pair = self.tokens.issue(self._principal_for(user["user_id"]))
        return json_response(pair.to_value())

    def handle_refresh(self, request, principal, params) -> Response:
        value = self._body_value(request)
        token = value.get("refresh_token", "")
        pair = self.tokens.refresh(token, self._principal_for)
        return json_response(pair.to_value())

    def handle_whoami(self, request, principal, params) -> Response:
        user = self.hospital.state["hospital/user"][principal.user_id]
        view = self.hospital.public_user(user)
        view["coordinator"] = principal.is_admin
        return json_response(view)

    # ------------------------------------------------------------------
    # researcher role workflow
    # ------------------------------------------------------------------

    def handle_researcher_request(self, request, principal, params) -> Response:
        if params["user_id"] != principal.user_id:
            raise Forbidden("researcher upgrades can only be requested for yourself")
        return json_response(self.hospital.request_researcher(principal.user_id))

    def handle_researcher_decision(self, request, principal, params) -> Response:
        value = self._body_value(request)
        return json_response(self.hospital.resolve_researcher(
            principal.user_id, params["user_id"], value.get("decision", "")
        ))

    # ------------------------------------------------------------------
    # forms and assignments
    # ------------------------------------------------------------------

    def handle_list_forms(self, request, principal, params) -> Response:
        return json_response(self._page(request, self.hospital.forms_for(principal.user_id)))

    def handle_create_form(self, request, principal, params) -> Response:
        value = self._body_value(request)
        form = self.hospital.create_form(
            principal.user_id, value.get("title", ""), value.get("questions", [])
        )
        return json_response(form, status=201)

    def handle_get_form(self, request, principal, params) -> Response:
        form = self.hospital._form(params["form_id"])
        if principal.role == "patient":
            # patients may read only forms that were assigned to them
            assigned = any(
                a["form_id"] == form["form_id"]
                for a in self.hospital.assignments_for(principal.user_id)
            )
            if not assigned:
                raise Forbidden("this form is not assigned to you")
        return json_response(form)

    def handle_assign_form(self, request, principal, params) -> Response:
        value = self._body_value(request)
        assignment = self.hospital.assign_form(
            principal.user_id,
            params["form_id"],
            value.get("patient_id", ""),
            value.get("recurrence", "once"),
        )
        return json_response(assignment, status=201)

    def handle_list_assignments(self, request, principal, params) -> Response:
        assignments = self.hospital.assignments_for(principal.user_id)
        status = request.param("status")
        if status:
            assignments = [a for a in assignments if a["status"] == status]
        return json_response(self._page(request, assignments))

    def handle_submit_assignment(self, request, principal, params) -> Response:
        value = self._body_value(request)
        submitted = self.hospital.submit_assignment(
            principal.user_id, params["assignment_id"], value.get("answers", {})
        )
        return json_response(submitted)

    def handle_withdraw_assignment(self, request, principal, params) -> Response:
        return json_response(
            self.hospital.withdraw_assignment(principal.user_id, params["assignment_id"])
        )

    # ------------------------------------------------------------------
    # patients, treatments, cases
    # ------------------------------------------------------------------

    def handle_list_patients(self, request, principal, params) -> Response:
        patients = [
            self.hospital.public_user(user)
            for user in self.hospital.state["hospital/user"].values()
            if user["role"] == "patient"
        ]
        patients.sort(key=lambda u: u["username"])
        return json_response(self._page(request, patients))

    def _check_patient_access(self, principal: Principal, patient_id: str) -> None:
        if not self.hospital.can_read_patient_data(principal.user_id, patient_id):
            raise Forbidden("no access to this patient's data")

    def handle_list_treatments(self, request, principal, params) -> Response:
        patient_id = params["patient_id"]
        self.hospital._user(patient_id)
        self._check_patient_access(principal, patient_id)
        return json_response(self._page(request, self.hospital.treatments_of_patient(patient_id)))

    def handle_add_treatment(self, request, principal, params) -> Response:
        value = self._body_value(request)
        entry = self.hospital.submit_treatment_entry(
            principal.user_id,
            params["patient_id"],
            formulation=value.get("formulation", ""),
            dose=value.get("dose", 0.0),
            dose_unit=value.get("dose_unit", ""),
            severity=value.get("severity"),
            effectiveness=value.get("effectiveness"),
            noted_at=value.get("noted_at"),
            free_notes=value.get("free_notes", ""),
        )
        return json_response(entry, status=201)

    def handle_remove_treatment(self, request, principal, params) -> Response:
        case = self.hospital.remove_treatment(
            principal.user_id, params["patient_id"], params["entry_id"]
        )
        return json_response(case)

    def handle_list_cases(self, request, principal, params) -> Response:
        return json_response(self._page(request, self.hospital.cases_for(principal.user_id)))

    def handle_get_case(self, request, principal, params) -> Response:
        case = self.hospital._case(params["case_id"])
        self._check_patient_access(principal, case["patient_id"])
        view = dict(case)
        view["treatment_entries"] = [
            self.hospital.treatment(entry_id) for entry_id in case["treatments"]
        ]
        return json_response(view)

    def handle_annotate_case(self, request, principal, params) -> Response:
        value = self._body_value(request)
        annotation = self.hospital.annotate_case(
            principal.user_id, params["case_id"], value.get("text", "")
        )
        return json_response(annotation, status=201)

    def handle_assign_doctor(self, request, principal, params) -> Response:
        value = self._body_value(request)
        case = self.hospital.assign_doctor(
            principal.user_id, params["case_id"], value.get("doctor_id", principal.user_id)
        )
        return json_response(case)

    # ------------------------------------------------------------------
    # research surface (anonymised only)
    # ------------------------------------------------------------------

    def handle_research_cases(self, request, principal, params) -> Response:
        key = self._need_key()
        return json_response(self._page(request, self.hospital.research_cases(key)))

    def handle_research_record(self, request, principal, params) -> Response:
        key = self._need_key()
        fields = self.hospital.anonymised_record(params["record_id"], key)
        if fields is None:
            raise UnknownResource("no such record")
        return json_response(fields)

    def handle_search(self, request, principal, params) -> Response:
        query = request.param("q", "") or ""
        try:
            limit = int(request.param("limit", str(DEFAULT_LIMIT)))
        except ValueError:
            raise ParseError("limit must be an integer") from None
        limit = max(1, min(limit, MAX_LIMIT))
        results = search(query, self.index, limit=limit)
        return json_response({
            "results": [{"record_id": r, "score": s} for r, s in results],
        })

    # ------------------------------------------------------------------
    # ingestion / indexing
    # ------------------------------------------------------------------

    def handle_ingest(self, request, principal, params) -> Response:
        content_type = request.headers.get("content-type", "")
        if not content_type.startswith("multipart/form-data"):
            raise ParseError("POST /ingest expects multipart/form-data with file and spec")
        fields = parse_multipart(content_type, request.body)
        if "file" not in fields:
            raise ParseError("missing file part")
        filename, data = fields["file"]
        spec = None
        if "spec" in fields:
            spec_id = fields["spec"][1].decode("utf-8").strip()
            if spec_id:
                spec = self.registry.spec(spec_id)
        sub_domain = {
            "grower": "grower",
            "researcher": "research",
            "doctor": "hospital",
        }.get(principal.role, "research")
        provider = f"{sub_domain}:upload-{principal.user_id[-8:]}"
        doc = RawDocument.from_bytes(
            data,
            provider=provider,
            received_at=self.clock.now_text(),
            declared_name=filename,
        )
        report = self.ingestor.ingest(doc, spec)
        return json_response(report.to_value(), status=201)

    def handle_reindex(self, request, principal, params) -> Response:
        with self._index_lock:
            index = rebuild_search_index(
                self.store, self.registry, self.pseudonym_key, self.clock.now_text()
            )
            self.index = index  # atomic swap
        return json_response({
            "doc_count": index.doc_count,
            "snapshot": index.built_at_snapshot,
            "terms": len(index.postings),
        })

    # ------------------------------------------------------------------
    # strain analytics
    # ------------------------------------------------------------------

    def _profiles(self, dataset_id: Optional[str] = None) -> list:
        return profiles_from_store(self.store, dataset_id)

    def handle_list_strains(self, request, principal, params) -> Response:
        profiles = sorted(self._profiles(request.param("dataset")),
                          key=lambda p: p.sample_id)
        return json_response(self._page(request, [p.to_value() for p in profiles]))

    def handle_similar_strains(self, request, principal, params) -> Response:
        try:
            k = max(1, int(request.param("k", "5")))
        except ValueError:
            raise ParseError("k must be an integer") from None
        profiles = self._profiles(request.param("dataset"))
        by_id = {p.sample_id: p for p in profiles}
        query = by_id.get(params["sample_id"])
        if query is None:
            raise UnknownResource(f"no strain sample {params['sample_id']!r}")
        ranked = nearest(query, profiles, k=k)
        return json_response({
            "sample_id": query.sample_id,
            "strain_name": query.strain_name,
            "similar": [{"sample_id": s, "similarity": v} for s, v in ranked],
        })

    def handle_strain_consistency(self, request, principal, params) -> Response:
        profiles = self._profiles(request.param("dataset"))
        if len(profiles) < 2:
            raise UnknownResource("need at least 2 strain profiles")
        return json_response(name_consistency(profiles).to_value())

    # ------------------------------------------------------------------
    # subscriptions and alerts
    # ------------------------------------------------------------------

    def handle_list_alerts(self, request, principal, params) -> Response:
        alerts = self.hospital.alerts_for(principal.user_id, mark_delivered=True)
        return json_response(self._page(request, alerts))

    def handle_list_subscriptions(self, request, principal, params) -> Response:
        return json_response(
            self._page(request, self.hospital.subscriptions_for(principal.user_id))
        )

    def handle_subscribe(self, request, principal, params) -> Response:
        value = self._body_value(request)
        sub = self.hospital.subscribe(
            principal.user_id, value.get("kind", ""), value.get("key", "")
        )
        return json_response(sub, status=201)


# ----------------------------------------------------------------------
# transport
# ----------------------------------------------------------------------

_CORS_HEADERS = {
    "Access-Control-Allow-Origin": "*",
    "Access-Control-Allow-Methods": "GET, POST, PUT, DELETE, OPTIONS",
    "Access-Control-Allow-Headers": "Authorization, Content-Type",
}


def make_server(app: App, host: str = "127.0.0.1", port: int = 8080) -> ThreadingHTTPServer:
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # quiet; operators watch the CLI
            pass

        def _dispatch(self):
            if self.command == "OPTIONS":
                self.send_response(204)
                for key, value in _CORS_HEADERS.items():
                    self.send_header(key, value)
                self.send_header("Content-Length", "0")
                self.end_headers()
                return
            length = int(self.headers.get("Content-Length") or 0)
            body = self.rfile.read(length) if length else b""
            request = Request.make(
                self.command, self.path, headers=dict(self.headers.items()), body=body
            )
            response = app.handle(request)
            self.send_response(response.status)
            self.send_header("Content-Type", response.content_type)
            self.send_header("Content-Length", str(len(response.body)))
            for key, value in _CORS_HEADERS.items():
                self.send_header(key, value)
            self.end_headers()
            self.wfile.write(response.body)

        do_GET = do_POST = do_PUT = do_DELETE = do_OPTIONS = _dispatch

    return ThreadingHTTPServer((host, port), Handler)


def serve(app: App, bind: str = "127.0.0.1:8080") -> None:
    host, _, port_text = bind.rpartition(":")
    server = make_server(app, host or "127.0.0.1", int(port_text))
    try:
        server.serve_forever()
    finally:
        server.server_close()
