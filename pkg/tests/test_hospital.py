"""Hospital sub-domain: users/roles, forms, treatments, cases, alerts,
anonymisation."""

from __future__ import annotations

import random
from datetime import timedelta

import pytest

from cdp.clock import ManualClock, parse_timestamp
from cdp.configs import builtin_registry
from cdp.errors import (
    DuplicateUsername,
    EmptyAnnotation,
    Forbidden,
    InvalidTransition,
    RoleNotGrantable,
    UnknownResource,
    ValidationFailed,
    WeakPassword,
)
from cdp.fields import MISSING, field_get, iter_leaves
from cdp.hospital.anonymise import AnonymisationPolicy, anonymise, pseudonym
from cdp.hospital.service import HospitalService
from cdp.quality.replay import replay, verify_replay
from cdp.store import Store

from test_processing import make_record

ITERATIONS = 10  # fast pbkdf2 for tests; production default is 50k


@pytest.fixture
def service(store, clock):
    return HospitalService(store, builtin_registry(), clock, pbkdf2_iterations=ITERATIONS)


def setup_world(service):
    """patient + assigned doctor + a case, the standard scenario."""
    patient = service.register_user("alice-patient", "correct horse battery", "patient")
    doctor = service.register_user("bob-doctor", "stethoscope-42x", "doctor")
    case = service.case_of_patient(patient["user_id"])
    admin = service.ensure_admin("admin", "admin-password-123")
    service.assign_doctor(admin["user_id"], case["case_id"], doctor["user_id"])
    return patient, doctor, service.case_of_patient(patient["user_id"]), admin


# ----------------------------------------------------------------------
# registration and roles
# ----------------------------------------------------------------------


def test_register_patient(service):
    user = service.register_user("pat", "longpassword1", "patient")
    assert user["role"] == "patient"
    # case auto-created
    assert service.case_of_patient(user["user_id"])["patient_id"] == user["user_id"]


def test_register_researcher_rejected(service):
    with pytest.raises(RoleNotGrantable):
        service.register_user("res", "longpassword1", "researcher")


def test_register_duplicate_username(service):
    service.register_user("dup", "longpassword1", "patient")
    with pytest.raises(DuplicateUsername):
        service.register_user("dup", "otherpassword2", "doctor")


def test_register_weak_password(service):
    with pytest.raises(WeakPassword):
        service.register_user("weak", "short", "patient")


def test_verify_credentials(service):
    service.register_user("login-user", "longpassword1", "grower")
    assert service.verify_credentials("login-user", "longpassword1") is not None
    assert service.verify_credentials("login-user", "wrongpassword") is None
    assert service.verify_credentials("ghost", "longpassword1") is None


# ----------------------------------------------------------------------
# researcher request state machine
# ----------------------------------------------------------------------


def test_researcher_request_approval_flow(service):
    patient, doctor, case, admin = setup_world(service)
    user = service.request_researcher(patient["user_id"])
    assert user["researcher_request"] == "pending"
    resolved = service.resolve_researcher(admin["user_id"], patient["user_id"], "approved")
    assert resolved["role"] == "researcher"
    assert resolved["researcher_request"] == "approved"


def test_researcher_request_denial_is_terminal(service):
    patient, doctor, case, admin = setup_world(service)
    service.request_researcher(patient["user_id"])
    service.resolve_researcher(admin["user_id"], patient["user_id"], "denied")
    with pytest.raises(InvalidTransition):
        service.request_researcher(patient["user_id"])


def test_resolve_without_pending_is_invalid(service):
    patient, doctor, case, admin = setup_world(service)
    with pytest.raises(InvalidTransition):
        service.resolve_researcher(admin["user_id"], patient["user_id"], "approved")


def test_double_request_is_invalid(service):
    patient, doctor, case, admin = setup_world(service)
    service.request_researcher(patient["user_id"])
    with pytest.raises(InvalidTransition):
        service.request_researcher(patient["user_id"])


def test_grower_cannot_request(service):
    grower = service.register_user("grow", "longpassword1", "grower")
    with pytest.raises(Forbidden):
        service.request_researcher(grower["user_id"])


def test_non_admin_cannot_resolve(service):
    patient, doctor, case, admin = setup_world(service)
    service.request_researcher(patient["user_id"])
    with pytest.raises(Forbidden):
        service.resolve_researcher(doctor["user_id"], patient["user_id"], "approved")


# ----------------------------------------------------------------------
# forms and assignments
# ----------------------------------------------------------------------

QUESTIONS = [
    {"key": "severity", "prompt": "How severe?",
     "answer_kind": {"kind": "integer_scale", "min": 0, "max": 10}},
    {"key": "notes", "prompt": "Notes", "answer_kind": {"kind": "text"}},
    {"key": "improved", "prompt": "Improved?", "answer_kind": {"kind": "boolean"}},
]


def test_form_create_and_assign_weekly(service):
    patient, doctor, case, admin = setup_world(service)
    form = service.create_form(doctor["user_id"], "Weekly check-in", QUESTIONS)
    assignment = service.assign_form(doctor["user_id"], form["form_id"],
                                     patient["user_id"], "weekly")
    pending = service.assignments_for(patient["user_id"])
    assert [a["assignment_id"] for a in pending] == [assignment["assignment_id"]]
    assert pending[0]["status"] == "pending"


def test_patient_cannot_create_form(service):
    patient, doctor, case, admin = setup_world(service)
    with pytest.raises(Forbidden):
        service.create_form(patient["user_id"], "Nope", QUESTIONS)


def test_unassigned_doctor_cannot_assign_form(service):
    patient, doctor, case, admin = setup_world(service)
    other = service.register_user("carol-doctor", "another-pass-9", "doctor")
    form = service.create_form(other["user_id"], "F", QUESTIONS)
    with pytest.raises(Forbidden):
        service.assign_form(other["user_id"], form["form_id"], patient["user_id"], "once")


def test_weekly_submission_regenerates_plus_seven_days(service, clock):
    patient, doctor, case, admin = setup_world(service)
    form = service.create_form(doctor["user_id"], "Weekly", QUESTIONS)
    assignment = service.assign_form(doctor["user_id"], form["form_id"],
                                     patient["user_id"], "weekly")
    submitted = service.submit_assignment(
        patient["user_id"], assignment["assignment_id"],
        {"severity": 4, "notes": "ok", "improved": True},
    )
    follow_up = submitted["follow_up"]
    assert follow_up is not None and follow_up["status"] == "pending"
    # independent date-arithmetic oracle: +7 days
    expected = parse_timestamp(assignment["due_at"]) + timedelta(days=7)
    assert parse_timestamp(follow_up["due_at"]) == expected


def test_once_submission_has_no_follow_up(service):
    patient, doctor, case, admin = setup_world(service)
    form = service.create_form(doctor["user_id"], "Once", QUESTIONS)
    assignment = service.assign_form(doctor["user_id"], form["form_id"],
                                     patient["user_id"], "once")
    submitted = service.submit_assignment(
        patient["user_id"], assignment["assignment_id"],
        {"severity": 1, "notes": "", "improved": False},
    )
    assert submitted["follow_up"] is None
    assert [a for a in service.assignments_for(patient["user_id"])
            if a["status"] == "pending"] == []


def test_answer_validation(service):
    patient, doctor, case, admin = setup_world(service)
    form = service.create_form(doctor["user_id"], "F", QUESTIONS)
    assignment = service.assign_form(doctor["user_id"], form["form_id"],
                                     patient["user_id"], "once")
    with pytest.raises(ValidationFailed):
        service.submit_assignment(patient["user_id"], assignment["assignment_id"],
                                  {"severity": 12, "notes": "x", "improved": True})
    with pytest.raises(ValidationFailed):
        service.submit_assignment(patient["user_id"], assignment["assignment_id"],
                                  {"notes": "x", "improved": True})


# ----------------------------------------------------------------------
# treatment entries
# ----------------------------------------------------------------------


def submit(service, patient, acting=None, severity=7, effectiveness=4, **kw):
    return service.submit_treatment_entry(
        acting or patient["user_id"], patient["user_id"],
        formulation=kw.get("formulation", "OG-1"),
        dose=kw.get("dose", 2.5), dose_unit="mg",
        severity=severity, effectiveness=effectiveness,
        free_notes=kw.get("free_notes", ""),
    )


def test_treatment_entry_stored_and_visible_to_doctor(service):
    patient, doctor, case, admin = setup_world(service)
    entry = submit(service, patient)
    entries = service.treatments_of_patient(patient["user_id"])
    assert [e["entry_id"] for e in entries] == [entry["entry_id"]]
    assert service.can_read_patient_data(doctor["user_id"], patient["user_id"])
    assert entries[0]["severity"] == 7 and entries[0]["effectiveness"] == 4


def test_treatment_severity_11_rejected(service):
    patient, doctor, case, admin = setup_world(service)
    with pytest.raises(ValidationFailed) as err:
        submit(service, patient, severity=11)
    assert any(i.kind.value == "out_of_range" for i in err.value.issues)


def test_unassigned_doctor_cannot_read(service):
    patient, doctor, case, admin = setup_world(service)
    other = service.register_user("eve-doctor", "eve-password-1", "doctor")
    assert not service.can_read_patient_data(other["user_id"], patient["user_id"])


def test_doctor_can_add_and_remove_treatments(service):
    patient, doctor, case, admin = setup_world(service)
    entry = submit(service, patient, acting=doctor["user_id"])
    assert len(service.treatments_of_patient(patient["user_id"])) == 1
    service.remove_treatment(doctor["user_id"], patient["user_id"], entry["entry_id"])
    assert service.treatments_of_patient(patient["user_id"]) == []
    # the immutable record is still in the zone
    assert service.treatment(entry["entry_id"])["entry_id"] == entry["entry_id"]


# ----------------------------------------------------------------------
# annotations
# ----------------------------------------------------------------------


def test_annotate_case(service):
    patient, doctor, case, admin = setup_world(service)
    before = len(case["annotations"])
    service.annotate_case(doctor["user_id"], case["case_id"], "responding well")
    after = service.case_of_patient(patient["user_id"])["annotations"]
    assert len(after) == before + 1
    assert after[-1]["text"] == "responding well"
    assert after[-1]["author_id"] == doctor["user_id"]


def test_empty_annotation_rejected(service):
    patient, doctor, case, admin = setup_world(service)
    with pytest.raises(EmptyAnnotation):
        service.annotate_case(doctor["user_id"], case["case_id"], "   ")


def test_unassigned_doctor_cannot_annotate(service):
    patient, doctor, case, admin = setup_world(service)
    other = service.register_user("mallory-doc", "mallory-pass1", "doctor")
    with pytest.raises(Forbidden):
        service.annotate_case(other["user_id"], case["case_id"], "sneaky")


def test_annotations_append_only_across_operations(service):
    patient, doctor, case, admin = setup_world(service)
    history = []
    rng = random.Random(4)
    for i in range(8):
        service.annotate_case(doctor["user_id"], case["case_id"], f"note {i}")
        if rng.random() < 0.5:
            submit(service, patient, formulation=f"F-{i}")
        annotations = service.case_of_patient(patient["user_id"])["annotations"]
        texts = [a["text"] for a in annotations]
        assert texts[: len(history)] == history  # previous list is a prefix
        history = texts


# ----------------------------------------------------------------------
# subscriptions and alerts
# ----------------------------------------------------------------------


def test_subscription_alert_flow(service):
    patient, doctor, case, admin = setup_world(service)
    researcher = service.register_user("rita-res", "rita-password", "doctor")
    sub = service.subscribe(researcher["user_id"], "strain", "OG-1")
    entry = submit(service, patient, formulation="OG-1")
    alerts = service.alerts_for(researcher["user_id"])
    assert len(alerts) == 1
    assert alerts[0]["sub_id"] == sub["sub_id"]


def test_no_matching_subscription_no_alert(service):
    patient, doctor, case, admin = setup_world(service)
    submit(service, patient, formulation="Haze")
    other = service.register_user("sam", "sam-password-1", "grower")
    service.subscribe(other["user_id"], "strain", "OG-1")
    assert service.alerts_for(other["user_id"]) == []


def test_duplicate_event_suppressed(service):
    patient, doctor, case, admin = setup_world(service)
    user = service.register_user("watcher", "watcher-pass1", "grower")
    service.subscribe(user["user_id"], "strain", "OG-1")
    entry = submit(service, patient, formulation="OG-1")
    record_id = None
    for alert in service.alerts_for(user["user_id"]):
        record_id = alert["event_ref"]
    # re-delivering the same event creates no new alert
    assert service.notify("strain", "OG-1", record_id) == []
    assert len(service.alerts_for(user["user_id"])) == 1


def test_alerts_marked_delivered_on_read(service):
    patient, doctor, case, admin = setup_world(service)
    user = service.register_user("watcher2", "watcher-pass2", "grower")
    service.subscribe(user["user_id"], "strain", "OG-1")
    submit(service, patient, formulation="OG-1")
    first = service.alerts_for(user["user_id"], mark_delivered=True)
    assert first[0]["delivered"] is False
    second = service.alerts_for(user["user_id"])
    assert second[0]["delivered"] is True


# ----------------------------------------------------------------------
# anonymisation
# ----------------------------------------------------------------------

KEY = b"test-pseudonym-key"


def patient_record(name="Jane Doe", phone="555-0199", dob="1984-03-12",
                   patient_id="u-1234", free_notes="met Jane at clinic"):
    return make_record({
        "patient_id": patient_id,
        "username": "jane84",
        "profile": {
            "name": name,
            "contact": {"phone": phone, "email": "jane@example.com"},
            "birth_date": dob,
        },
        "formulation": "OG-1",
        "severity": 7,
        "free_notes": free_notes,
    })


def test_anonymise_removes_identifiers_keeps_rest():
    policy = AnonymisationPolicy.default()
    record = patient_record()
    anon = anonymise(record, policy, KEY)
    # policy oracle: output field set == input minus identifier paths
    # plus pseudonym/year replacements
    assert field_get(anon.fields, "profile.name") is MISSING
    assert field_get(anon.fields, "profile.contact") is MISSING
    assert field_get(anon.fields, "username") is MISSING
    assert field_get(anon.fields, "free_notes") is MISSING
    assert field_get(anon.fields, "profile.birth_date") is MISSING
    assert field_get(anon.fields, "profile.birth_date_year") == 1984
    assert field_get(anon.fields, "patient_id").startswith("anon-")
    assert field_get(anon.fields, "formulation") == "OG-1"
    assert field_get(anon.fields, "severity") == 7


def test_anonymise_idempotent():
    policy = AnonymisationPolicy.default()
    record = patient_record()
    once = anonymise(record, policy, KEY)
    twice = anonymise(once, policy, KEY)
    assert once == twice
    assert once.fields == twice.fields


def test_pseudonym_stability_and_uniqueness():
    policy = AnonymisationPolicy.default()
    a1 = anonymise(patient_record(patient_id="u-aaa", free_notes="x"), policy, KEY)
    a2 = anonymise(patient_record(patient_id="u-aaa", free_notes="y"), policy, KEY)
    b = anonymise(patient_record(patient_id="u-bbb"), policy, KEY)
    assert field_get(a1.fields, "patient_id") == field_get(a2.fields, "patient_id")
    assert field_get(a1.fields, "patient_id") != field_get(b.fields, "patient_id")
    # oracle: the pseudonym is the documented keyed digest
    assert field_get(a1.fields, "patient_id") == pseudonym(KEY, "u-aaa")


def test_anonymise_500_generated_records():
    policy = AnonymisationPolicy.default()
    rng = random.Random(77)
    identifier_paths = ("profile.name", "profile.contact", "username", "free_notes")
    for i in range(500):
        record = patient_record(
            name=f"Name {i}", phone=f"555-{i:04d}",
            dob=f"19{rng.randint(40, 99)}-0{rng.randint(1, 9)}-1{rng.randint(0, 9)}",
            patient_id=f"u-{i:04d}",
        )
        anon = anonymise(record, policy, KEY)
        again = anonymise(anon, policy, KEY)
        assert anon == again
        for path in identifier_paths:
            assert field_get(anon.fields, path) is MISSING
        assert field_get(anon.fields, "patient_id") == pseudonym(KEY, f"u-{i:04d}")


def test_research_cases_contain_no_identifiers(service):
    patient, doctor, case, admin = setup_world(service)
    submit(service, patient, free_notes="patient alice-patient says hi")
    service.annotate_case(doctor["user_id"], case["case_id"], "stable")
    views = service.research_cases(KEY)
    assert views
    leaked = []
    for view in views:
        for _, value in iter_leaves(view):
            if isinstance(value, str) and ("alice" in value or "bob-doctor" in value):
                leaked.append(value)
    assert leaked == []


# ----------------------------------------------------------------------
# workflow writes are replayable
# ----------------------------------------------------------------------


def test_workflow_writes_replay_byte_identically(tmp_path, clock):
    store = Store(tmp_path / "source")
    registry = builtin_registry()
    service = HospitalService(store, registry, clock, pbkdf2_iterations=ITERATIONS)
    patient, doctor, case, admin = setup_world(service)
    submit(service, patient)
    service.annotate_case(doctor["user_id"], case["case_id"], "first note")

    target = Store(tmp_path / "target")
    replay(store, registry, target)
    ok, detail = verify_replay(store, target)
    assert ok, detail


def test_state_rebuild_from_store(tmp_path, clock):
    store = Store(tmp_path / "s")
    registry = builtin_registry()
    service = HospitalService(store, registry, clock, pbkdf2_iterations=ITERATIONS)
    patient, doctor, case, admin = setup_world(service)
    entry = submit(service, patient)

    reopened = HospitalService(Store(tmp_path / "s"), registry, clock,
                               pbkdf2_iterations=ITERATIONS)
    assert reopened.user_by_username("alice-patient")["user_id"] == patient["user_id"]
    assert [e["entry_id"] for e in reopened.treatments_of_patient(patient["user_id"])] == [
        entry["entry_id"]
    ]
    assert reopened.case_of_patient(patient["user_id"])["assigned_doctors"] == [
        doctor["user_id"]
    ]
