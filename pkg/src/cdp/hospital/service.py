"""Hospital sub-domain workflows: users/roles, forms, treatments, cases,
subscriptions and alerts.

Every workflow object persists as a MetaRecord in the hospital sub-domain
by serializing its field tree to canonical bytes and running it through
the capture pipeline with an identity mapping spec — so workflow state is
raw-zone backed, lineage-tracked and replayable like any other data.
Objects are versioned (monotonic "version" field); current state is the
fold of the latest versions, rebuilt by scanning the store on startup.

The administrator fixture is a doctor-role user flagged as coordinator in
their profile; only coordinators resolve researcher requests.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
import threading
from typing import TYPE_CHECKING, Any, Optional

from ..capture.ingest import IngestStatus, Ingestor
from ..clock import Clock, add_days
from ..errors import (
    CdpError,
    DuplicateUsername,
    EmptyAnnotation,
    Forbidden,
    InvalidTransition,
    RoleNotGrantable,
    UnknownResource,
    ValidationFailed,
    WeakPassword,
)
from ..fields import MISSING, field_get
from ..records import MetaRecord, SubDomain
from ..store import RawDocument, Store
from ..canonical import canonical_dumps
from .anonymise import anonymise

if TYPE_CHECKING:
    from ..configs import ConfigRegistry

REGISTRABLE_ROLES = {"patient", "doctor", "grower"}
ROLES = {"patient", "doctor", "grower", "researcher"}
RECURRENCES = {"once", "daily", "weekly"}
TOPIC_KINDS = {"strain", "treatment", "experiment"}
MIN_PASSWORD_LEN = 10
PBKDF2_ITERATIONS = 50_000

WORKFLOW_SCHEMAS = {
    "hospital/user": "user_id",
    "hospital/form": "form_id",
    "hospital/assignment": "assignment_id",
    "hospital/treatment": "entry_id",
    "hospital/case": "case_id",
    "hospital/subscription": "sub_id",
    "hospital/alert": "alert_id",
}

# schema_refs a researcher may fetch one-by-one (anonymised); never users
RESEARCHABLE_SCHEMAS = {"hospital/treatment", "hospital/case"}


def _hash_password(password: str, salt: str, iterations: int) -> str:
    return hashlib.pbkdf2_hmac(
        "sha256", password.encode("utf-8"), bytes.fromhex(salt), iterations
    ).hex()


def _new_id(prefix: str) -> str:
    return f"{prefix}-{secrets.token_hex(8)}"


class HospitalService:
    def __init__(
        self,
        store: Store,
        registry: "ConfigRegistry",
        clock: Optional[Clock] = None,
        provider: str = "hospital:cdp",
        pbkdf2_iterations: int = PBKDF2_ITERATIONS,
    ):
        self.store = store
        self.registry = registry
        self.clock = clock or Clock()
        self.provider = provider
        self.iterations = pbkdf2_iterations
        self.ingestor = Ingestor(store, registry)
        self._lock = threading.RLock()
        # latest object versions, by natural key
        self.state: dict[str, dict[str, dict]] = {ref: {} for ref in WORKFLOW_SCHEMAS}
        self._record_of: dict[str, str] = {}  # object key -> latest record id
        self._rebuild()

    # ------------------------------------------------------------------
    # persistence plumbing
    # ------------------------------------------------------------------

    def _rebuild(self) -> None:
        for record in self.store.scan(lambda r: r.sub_domain == SubDomain.HOSPITAL):
            self._absorb(record)

    def _absorb(self, record: MetaRecord) -> None:
        key_field = WORKFLOW_SCHEMAS.get(record.schema_ref or "")
        if key_field is None:
            return
        key = record.fields.get(key_field)
        if not isinstance(key, str):
            return
        current = self.state[record.schema_ref].get(key)
        if current is None or current.get("version", 0) <= record.fields.get("version", 0):
            self.state[record.schema_ref][key] = record.fields
            self._record_of[key] = record.id

    def _write(self, schema_ref: str, fields: dict) -> MetaRecord:
        """Persist one object version through the capture pipeline."""
        spec = self.registry.spec(schema_ref)
        doc = RawDocument.from_bytes(
            canonical_dumps(fields),
            provider=self.provider,
            received_at=self.clock.now_text(),
            declared_name=f"{schema_ref.replace('/', '-')}.json",
        )
        report = self.ingestor.ingest(doc, spec)
        if report.status == IngestStatus.REJECTED:
            raise ValidationFailed(report.issues)
        if report.status != IngestStatus.STORED or len(report.record_ids) != 1:
            raise CdpError(f"workflow write failed with status {report.status.value}")
        record = self.store.get_record(report.record_ids[0])
        self._absorb(record)
        return record

    # ------------------------------------------------------------------
    # users and roles
    # ------------------------------------------------------------------

    def _user(self, user_id: str) -> dict:
        user = self.state["hospital/user"].get(user_id)
        if user is None:
            raise UnknownResource(f"unknown user {user_id!r}")
        return user

    def user_by_username(self, username: str) -> Optional[dict]:
        for user in self.state["hospital/user"].values():
            if user.get("username") == username:
                return user
        return None

    def public_user(self, user: dict) -> dict:
        return {
            "user_id": user["user_id"],
            "username": user["username"],
            "role": user["role"],
            "researcher_request": user["researcher_request"],
            "profile": user.get("profile", {}),
        }

    def is_coordinator(self, user_id: str) -> bool:
        try:
            user = self._user(user_id)
        except UnknownResource:
            return False
        return bool(field_get(user, "profile.coordinator") is True)

    def register_user(
        self,
        username: str,
        password: str,
        requested_role: str,
        profile: Optional[dict] = None,
        coordinator: bool = False,
    ) -> dict:
        with self._lock:
            if requested_role == "researcher":
                raise RoleNotGrantable("researcher role is granted only via an approved request")
            if requested_role not in REGISTRABLE_ROLES:
                raise RoleNotGrantable(f"role {requested_role!r} cannot be requested")
            if not username or not isinstance(username, str):
                raise CdpError("username must be non-empty text")
            if self.user_by_username(username) is not None:
                raise DuplicateUsername(f"username {username!r} is taken")
            if len(password) < MIN_PASSWORD_LEN:
                raise WeakPassword(f"password must be at least {MIN_PASSWORD_LEN} characters")
            salt = secrets.token_hex(16)
            user_profile = dict(profile or {})
            if coordinator:
                user_profile["coordinator"] = True
            fields = {
                "user_id": _new_id("u"),
                "username": username,
                "password_digest": _hash_password(password, salt, self.iterations),
                "password_salt": salt,
                "role": requested_role,
                "researcher_request": "none",
                "profile": user_profile,
                "version": 1,
            }
            self._write("hospital/user", fields)
            if requested_role == "patient":
                self._write("hospital/case", {
                    "case_id": _new_id("c"),
                    "patient_id": fields["user_id"],
                    "assigned_doctors": [],
                    "annotations": [],
                    "treatments": [],
                    "version": 1,
                })
            return self.public_user(fields)

    def ensure_admin(self, username: str, password: str) -> dict:
        """Idempotently seed the administrator fixture (coordinator doctor)."""
        with self._lock:
            existing = self.user_by_username(username)
            if existing is not None:
                return self.public_user(existing)
            return self.register_user(username, password, "doctor", coordinator=True)

    def verify_credentials(self, username: str, password: str) -> Optional[dict]:
        user = self.user_by_username(username)
        if user is None:
            # burn the same work as a real check: uniform timing and result
            _hash_password(password, "00" * 16, self.iterations)
            return None
        expected = user["password_digest"]
        got = _hash_password(password, user["password_salt"], self.iterations)
        if not hmac.compare_digest(expected, got):
            return None
        return user

    def request_researcher(self, user_id: str) -> dict:
        with self._lock:
            user = self._user(user_id)
            if user["role"] not in ("patient", "doctor"):
                raise Forbidden("only patients and doctors may request the researcher role")
            if user["researcher_request"] != "none":
                raise InvalidTransition(
                    f"cannot request from state {user['researcher_request']!r}"
                )
            updated = dict(user)
            updated["researcher_request"] = "pending"
            updated["version"] = user["version"] + 1
            self._write("hospital/user", updated)
            return self.public_user(updated)

    def resolve_researcher(self, resolver_id: str, user_id: str, decision: str) -> dict:
        with self._lock:
            if not self.is_coordinator(resolver_id):
                raise Forbidden("only the administrator may resolve researcher requests")
            if decision not in ("approved", "denied"):
                raise InvalidTransition(f"unknown decision {decision!r}")
            user = self._user(user_id)
            if user["researcher_request"] != "pending":
                raise InvalidTransition(
                    f"cannot resolve from state {user['researcher_request']!r}"
                )
            updated = dict(user)
            updated["researcher_request"] = decision
            if decision == "approved":
                updated["role"] = "researcher"
            updated["version"] = user["version"] + 1
            self._write("hospital/user", updated)
            return self.public_user(updated)

    # ------------------------------------------------------------------
    # cases
    # ------------------------------------------------------------------

    def _case(self, case_id: str) -> dict:
        case = self.state["hospital/case"].get(case_id)
        if case is None:
            raise UnknownResource(f"unknown case {case_id!r}")
        return case

    def case_of_patient(self, patient_id: str) -> dict:
        for case in self.state["hospital/case"].values():
            if case["patient_id"] == patient_id:
                return case
        raise UnknownResource(f"no case for patient {patient_id!r}")

    def cases_for(self, user_id: str) -> list[dict]:
        user = self._user(user_id)
        cases = self.state["hospital/case"].values()
        if self.is_coordinator(user_id):
            selected = list(cases)
        elif user["role"] == "doctor":
            selected = [c for c in cases if user_id in c["assigned_doctors"]]
        else:
            selected = [c for c in cases if c["patient_id"] == user_id]
        return sorted(selected, key=lambda c: c["case_id"])

    def is_assigned_doctor(self, doctor_id: str, patient_id: str) -> bool:
        try:
            case = self.case_of_patient(patient_id)
        except UnknownResource:
            return False
        return doctor_id in case["assigned_doctors"]

    def can_read_patient_data(self, acting_id: str, patient_id: str) -> bool:
        if acting_id == patient_id:
            return True
        if self.is_coordinator(acting_id):
            return True
        return self.is_assigned_doctor(acting_id, patient_id)

    def assign_doctor(self, acting_id: str, case_id: str, doctor_id: str) -> dict:
        with self._lock:
            acting = self._user(acting_id)
            if acting["role"] != "doctor" and not self.is_coordinator(acting_id):
                raise Forbidden("only doctors may join cases")
            doctor = self._user(doctor_id)
            if doctor["role"] != "doctor":
                raise Forbidden(f"user {doctor_id!r} is not a doctor")
            case = self._case(case_id)
            if doctor_id in case["assigned_doctors"]:
                return case
            updated = dict(case)
            updated["assigned_doctors"] = sorted(case["assigned_doctors"] + [doctor_id])
            updated["version"] = case["version"] + 1
            self._write("hospital/case", updated)
            return updated

    def annotate_case(self, doctor_id: str, case_id: str, text: str) -> dict:
        with self._lock:
            case = self._case(case_id)
            if doctor_id not in case["assigned_doctors"]:
                raise Forbidden("only assigned doctors may annotate a case")
            if not text or not text.strip():
                raise EmptyAnnotation("annotation text must be non-empty")
            annotation = {
                "author_id": doctor_id,
                "timestamp": self.clock.now_text(),
                "text": text,
            }
            updated = dict(case)
            updated["annotations"] = case["annotations"] + [annotation]
            updated["version"] = case["version"] + 1
            self._write("hospital/case", updated)
            return annotation

    # ------------------------------------------------------------------
    # forms and assignments
    # ------------------------------------------------------------------

    def _form(self, form_id: str) -> dict:
        form = self.state["hospital/form"].get(form_id)
        if form is None:
            raise UnknownResource(f"unknown form {form_id!r}")
        return form

    def create_form(self, doctor_id: str, title: str, questions: list[dict]) -> dict:
        with self._lock:
            doctor = self._user(doctor_id)
            if doctor["role"] != "doctor":
                raise Forbidden("only doctors create forms")
            if not title or not questions:
                raise ValidationFailed([])
            keys = [q.get("key") for q in questions]
            if len(set(keys)) != len(keys) or any(not k for k in keys):
                raise InvalidTransition("question keys must be unique and non-empty")
            normalized = []
            for q in questions:
                kind = q.get("answer_kind", {})
                name = kind.get("kind")
                if name == "integer_scale":
                    if not (isinstance(kind.get("min"), int) and isinstance(kind.get("max"), int)
                            and kind["min"] < kind["max"]):
                        raise InvalidTransition(f"bad integer_scale bounds on {q['key']!r}")
                    normalized.append({"key": q["key"], "prompt": q.get("prompt", ""),
                                       "answer_kind": {"kind": "integer_scale",
                                                       "min": kind["min"], "max": kind["max"]}})
                elif name in ("text", "boolean"):
                    normalized.append({"key": q["key"], "prompt": q.get("prompt", ""),
                                       "answer_kind": {"kind": name}})
                else:
                    raise InvalidTransition(f"unknown answer kind {name!r}")
            fields = {
                "form_id": _new_id("f"),
                "title": title,
                "questions": normalized,
                "created_by": doctor_id,
                "version": 1,
            }
            self._write("hospital/form", fields)
            return fields

    def forms_for(self, user_id: str) -> list[dict]:
        if self.is_coordinator(user_id):
            forms = list(self.state["hospital/form"].values())
        else:
            forms = [f for f in self.state["hospital/form"].values()
                     if f["created_by"] == user_id]
        return sorted(forms, key=lambda f: f["form_id"])

    def assign_form(self, doctor_id: str, form_id: str, patient_id: str, recurrence: str) -> dict:
        with self._lock:
            doctor = self._user(doctor_id)
            if doctor["role"] != "doctor":
                raise Forbidden("only doctors assign forms")
            self._form(form_id)
            patient = self.state["hospital/user"].get(patient_id)
            if patient is None or patient["role"] != "patient":
                raise UnknownResource(f"unknown patient {patient_id!r}")
            if not self.is_assigned_doctor(doctor_id, patient_id):
                raise Forbidden("doctor is not on this patient's case")
            if recurrence not in RECURRENCES:
                raise InvalidTransition(f"unknown recurrence {recurrence!r}")
            fields = {
                "assignment_id": _new_id("a"),
                "form_id": form_id,
                "patient_id": patient_id,
                "recurrence": recurrence,
                "assigned_by": doctor_id,
                "status": "pending",
                "due_at": self.clock.now_text(),
                "answers": None,
                "version": 1,
            }
            self._write("hospital/assignment", fields)
            return fields

    def assignments_for(self, user_id: str) -> list[dict]:
        user = self._user(user_id)
        assignments = self.state["hospital/assignment"].values()
        if self.is_coordinator(user_id):
            selected = list(assignments)
        elif user["role"] == "doctor":
            selected = [a for a in assignments if a["assigned_by"] == user_id]
        else:
            selected = [a for a in assignments if a["patient_id"] == user_id]
        return sorted(selected, key=lambda a: (a["due_at"], a["assignment_id"]))

    def _assignment(self, assignment_id: str) -> dict:
        assignment = self.state["hospital/assignment"].get(assignment_id)
        if assignment is None:
            raise UnknownResource(f"unknown assignment {assignment_id!r}")
        return assignment

    def _check_answers(self, form: dict, answers: dict) -> None:
        from ..quality.schema import IssueKind, Severity, ValidationIssue

        issues = []
        for question in form["questions"]:
            key = question["key"]
            kind = question["answer_kind"]
            value = answers.get(key, MISSING)
            if value is MISSING:
                issues.append(ValidationIssue(
                    Severity.ERROR, IssueKind.MISSING_REQUIRED, key, "answer missing"))
                continue
            if kind["kind"] == "integer_scale":
                if isinstance(value, bool) or not isinstance(value, int):
                    issues.append(ValidationIssue(
                        Severity.ERROR, IssueKind.WRONG_KIND, key, "expected an integer"))
                elif not (kind["min"] <= value <= kind["max"]):
                    issues.append(ValidationIssue(
                        Severity.ERROR, IssueKind.OUT_OF_RANGE, key,
                        f"value {value} outside [{kind['min']}, {kind['max']}]"))
            elif kind["kind"] == "text" and not isinstance(value, str):
                issues.append(ValidationIssue(
                    Severity.ERROR, IssueKind.WRONG_KIND, key, "expected text"))
            elif kind["kind"] == "boolean" and not isinstance(value, bool):
                issues.append(ValidationIssue(
                    Severity.ERROR, IssueKind.WRONG_KIND, key, "expected a boolean"))
        unknown = set(answers) - {q["key"] for q in form["questions"]}
        for key in sorted(unknown):
            issues.append(ValidationIssue(
                Severity.ERROR, IssueKind.WRONG_KIND, key, "no such question"))
        if issues:
            raise ValidationFailed(issues)

    def submit_assignment(self, patient_id: str, assignment_id: str, answers: dict) -> dict:
        with self._lock:
            assignment = self._assignment(assignment_id)
            if assignment["patient_id"] != patient_id:
                raise Forbidden("not this patient's assignment")
            if assignment["status"] != "pending":
                raise InvalidTransition(f"cannot submit a {assignment['status']} assignment")
            form = self._form(assignment["form_id"])
            self._check_answers(form, answers)
            updated = dict(assignment)
            updated["status"] = "submitted"
            updated["answers"] = answers
            updated["version"] = assignment["version"] + 1
            self._write("hospital/assignment", updated)
            follow_up = None
            if assignment["recurrence"] in ("daily", "weekly"):
                days = 1 if assignment["recurrence"] == "daily" else 7
                follow_up = {
                    "assignment_id": _new_id("a"),
                    "form_id": assignment["form_id"],
                    "patient_id": patient_id,
                    "recurrence": assignment["recurrence"],
                    "assigned_by": assignment["assigned_by"],
                    "status": "pending",
                    "due_at": add_days(assignment["due_at"], days),
                    "answers": None,
                    "version": 1,
                }
                self._write("hospital/assignment", follow_up)
            updated = dict(updated)
            updated["follow_up"] = follow_up
            return updated

    def withdraw_assignment(self, doctor_id: str, assignment_id: str) -> dict:
        with self._lock:
            assignment = self._assignment(assignment_id)
            if assignment["assigned_by"] != doctor_id and not self.is_coordinator(doctor_id):
                raise Forbidden("only the assigning doctor may withdraw")
            if assignment["status"] != "pending":
                raise InvalidTransition(f"cannot withdraw a {assignment['status']} assignment")
            updated = dict(assignment)
            updated["status"] = "withdrawn"
            updated["version"] = assignment["version"] + 1
            self._write("hospital/assignment", updated)
            return updated

    # ------------------------------------------------------------------
    # treatment entries
    # ------------------------------------------------------------------

    def submit_treatment_entry(
        self,
        acting_id: str,
        patient_id: str,
        *,
        formulation: str,
        dose: float,
        dose_unit: str,
        severity: Any,
        effectiveness: Any,
        noted_at: Optional[str] = None,
        free_notes: str = "",
    ) -> dict:
        with self._lock:
            patient = self._user(patient_id)
            if patient["role"] != "patient":
                raise UnknownResource(f"user {patient_id!r} is not a patient")
            if acting_id != patient_id and not self.is_assigned_doctor(acting_id, patient_id):
                raise Forbidden("only the patient or an assigned doctor may add treatments")
            case = self.case_of_patient(patient_id)
            fields = {
                "entry_id": _new_id("t"),
                "patient_id": patient_id,
                "formulation": formulation,
                "dose": float(dose),
                "dose_unit": dose_unit,
                "severity": severity,
                "effectiveness": effectiveness,
                "noted_at": noted_at or self.clock.now_text(),
                "free_notes": free_notes,
                "version": 1,
            }
            record = self._write("hospital/treatment", fields)

            updated = dict(case)
            updated["treatments"] = case["treatments"] + [fields["entry_id"]]
            updated["version"] = case["version"] + 1
            self._write("hospital/case", updated)

            self.notify("treatment", patient_id, record.id)
            if isinstance(formulation, str) and formulation:
                self.notify("strain", formulation, record.id)
            return fields

    def treatment(self, entry_id: str) -> dict:
        entry = self.state["hospital/treatment"].get(entry_id)
        if entry is None:
            raise UnknownResource(f"unknown treatment entry {entry_id!r}")
        return entry

    def treatments_of_patient(self, patient_id: str) -> list[dict]:
        case = self.case_of_patient(patient_id)
        entries = [self.treatment(entry_id) for entry_id in case["treatments"]]
        return sorted(entries, key=lambda e: (e["noted_at"], e["entry_id"]), reverse=True)

    def remove_treatment(self, doctor_id: str, patient_id: str, entry_id: str) -> dict:
        with self._lock:
            if not self.is_assigned_doctor(doctor_id, patient_id) and not self.is_coordinator(doctor_id):
                raise Forbidden("only assigned doctors may remove treatments")
            case = self.case_of_patient(patient_id)
            if entry_id not in case["treatments"]:
                raise UnknownResource(f"treatment {entry_id!r} is not on this case")
            updated = dict(case)
            updated["treatments"] = [t for t in case["treatments"] if t != entry_id]
            updated["version"] = case["version"] + 1
            self._write("hospital/case", updated)
            return updated

    # ------------------------------------------------------------------
    # subscriptions and alerts
    # ------------------------------------------------------------------

    def subscribe(self, user_id: str, kind: str, key: str) -> dict:
        with self._lock:
            self._user(user_id)
            if kind not in TOPIC_KINDS:
                raise InvalidTransition(f"unknown topic kind {kind!r}")
            for sub in self.state["hospital/subscription"].values():
                if sub["user_id"] == user_id and sub["topic_kind"] == kind and sub["topic_key"] == key:
                    return sub
            fields = {
                "sub_id": _new_id("s"),
                "user_id": user_id,
                "topic_kind": kind,
                "topic_key": key,
                "version": 1,
            }
            self._write("hospital/subscription", fields)
            return fields

    def subscriptions_for(self, user_id: str) -> list[dict]:
        subs = [s for s in self.state["hospital/subscription"].values()
                if s["user_id"] == user_id]
        return sorted(subs, key=lambda s: s["sub_id"])

    def notify(self, kind: str, key: str, record_id: str) -> list[dict]:
        """Evaluate subscriptions against one event; one alert per match,
        duplicates suppressed by the (sub, event) idempotency key."""
        created = []
        existing = {(a["sub_id"], a["event_ref"])
                    for a in self.state["hospital/alert"].values()}
        for sub in sorted(self.state["hospital/subscription"].values(),
                          key=lambda s: s["sub_id"]):
            if sub["topic_kind"] != kind or sub["topic_key"] != key:
                continue
            if (sub["sub_id"], record_id) in existing:
                continue
            fields = {
                "alert_id": _new_id("al"),
                "sub_id": sub["sub_id"],
                "event_ref": record_id,
                "created_at": self.clock.now_text(),
                "delivered": False,
                "version": 1,
            }
            self._write("hospital/alert", fields)
            created.append(fields)
        return created

    def alerts_for(self, user_id: str, mark_delivered: bool = False) -> list[dict]:
        sub_ids = {s["sub_id"] for s in self.subscriptions_for(user_id)}
        alerts = sorted(
            (a for a in self.state["hospital/alert"].values() if a["sub_id"] in sub_ids),
            key=lambda a: (a["created_at"], a["alert_id"]),
        )
        if mark_delivered:
            with self._lock:
                for alert in alerts:
                    if not alert["delivered"]:
                        updated = dict(alert)
                        updated["delivered"] = True
                        updated["version"] = alert["version"] + 1
                        self._write("hospital/alert", updated)
        return alerts

    # ------------------------------------------------------------------
    # research access (anonymised only)
    # ------------------------------------------------------------------

    def anonymised_record(self, record_id: str, key: bytes) -> Optional[dict]:
        record = self.store.get_record(record_id)
        if record is None:
            return None
        if record.sub_domain != SubDomain.HOSPITAL:
            return record.fields
        if record.schema_ref not in RESEARCHABLE_SCHEMAS:
            raise Forbidden("this record is not available to researchers")
        policy = self.registry.anonymise_policy()
        return anonymise(record, policy, key).fields

    def research_cases(self, key: bytes) -> list[dict]:
        """Every case with its treatments, all anonymised."""
        policy = self.registry.anonymise_policy()
        out = []
        for case in sorted(self.state["hospital/case"].values(), key=lambda c: c["case_id"]):
            case_record_id = self._record_of.get(case["case_id"])
            case_record = self.store.get_record(case_record_id) if case_record_id else None
            if case_record is None:
                continue
            anon_case = anonymise(case_record, policy, key).fields
            treatments = []
            for entry_id in case["treatments"]:
                entry_record_id = self._record_of.get(entry_id)
                entry_record = self.store.get_record(entry_record_id) if entry_record_id else None
                if entry_record is not None:
                    treatments.append(anonymise(entry_record, policy, key).fields)
            out.append({"case": anon_case, "treatments": treatments})
        return out
