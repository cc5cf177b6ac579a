"""HTTP API: auth, rotation, TTLs, role policy, endpoint behavior."""

from __future__ import annotations

import threading

import pytest

from cdp.api.app import App, Request, make_server
from cdp.canonical import canonical_dumps, canonical_loads
from cdp.clock import ManualClock
from cdp.configs import builtin_registry
from cdp.store import Store

ITERATIONS = 10
KEY = b"api-test-pseudonym-key"
ADMIN_PASSWORD = "admin-password-123"


@pytest.fixture
def app(tmp_path, clock):
    return App(
        store=Store(tmp_path / "store"),
        registry=builtin_registry(),
        clock=clock,
        pseudonym_key=KEY,
        admin_password=ADMIN_PASSWORD,
        pbkdf2_iterations=ITERATIONS,
    )


def call(app, method, target, *, token=None, value=None, body=None, headers=None):
    headers = dict(headers or {})
    if token:
        headers["Authorization"] = f"Bearer {token}"
    if value is not None:
        body = canonical_dumps(value)
    response = app.handle(Request.make(method, target, headers=headers, body=body or b""))
    parsed = canonical_loads(response.body) if response.body else None
    return response.status, parsed


def register(app, username, role, password="long-password-1"):
    status, user = call(app, "POST", "/auth/register",
                        value={"username": username, "password": password, "role": role})
    assert status == 201, user
    return user


def login(app, username, password="long-password-1"):
    status, pair = call(app, "POST", "/auth/login",
                        value={"username": username, "password": password})
    assert status == 200, pair
    return pair


def make_world(app):
    """admin, doctor, patient (case-assigned), grower, researcher + tokens."""
    admin_pair = login(app, "admin", ADMIN_PASSWORD)
    doctor = register(app, "doc", "doctor")
    patient = register(app, "pat", "patient")
    grower = register(app, "grow", "grower")
    pre_researcher = register(app, "res", "doctor")
    doctor_pair = login(app, "doc")
    patient_pair = login(app, "pat")
    grower_pair = login(app, "grow")
    res_pair = login(app, "res")
    # put the doctor on the patient's case
    status, cases = call(app, "GET", "/cases", token=admin_pair["access_token"])
    case = next(c for c in cases["items"] if c["patient_id"] == patient["user_id"])
    status, _ = call(app, "POST", f"/cases/{case['case_id']}/doctors",
                     token=admin_pair["access_token"],
                     value={"doctor_id": doctor["user_id"]})
    assert status == 200
    # upgrade res to researcher
    status, _ = call(app, "POST", f"/users/{pre_researcher['user_id']}/researcher-request",
                     token=res_pair["access_token"])
    assert status == 200
    status, upgraded = call(app, "POST",
                            f"/users/{pre_researcher['user_id']}/researcher-decision",
                            token=admin_pair["access_token"],
                            value={"decision": "approved"})
    assert status == 200 and upgraded["role"] == "researcher"
    return {
        "admin": admin_pair, "doctor": doctor_pair, "patient": patient_pair,
        "grower": grower_pair, "researcher": res_pair,
        "users": {"doctor": doctor, "patient": patient, "grower": grower,
                  "researcher": pre_researcher},
        "case": case,
    }


# ----------------------------------------------------------------------
# authentication
# ----------------------------------------------------------------------


def test_login_returns_both_tokens(app):
    register(app, "u1", "patient")
    pair = login(app, "u1")
    assert pair["access_token"] and pair["refresh_token"]
    assert pair["role"] == "patient"


def test_uniform_login_failure_bodies(app):
    register(app, "u1", "patient")
    r1 = app.handle(Request.make("POST", "/auth/login", body=canonical_dumps(
        {"username": "u1", "password": "wrong-password"})))
    r2 = app.handle(Request.make("POST", "/auth/login", body=canonical_dumps(
        {"username": "no-such-user", "password": "wrong-password"})))
    assert r1.status == r2.status == 401
    assert r1.body == r2.body  # byte-identical


def test_expired_access_token(app, clock):
    register(app, "u1", "patient")
    pair = login(app, "u1")
    clock.advance(seconds=15 * 60 + 1)
    status, body = call(app, "GET", "/users/me", token=pair["access_token"])
    assert status == 401
    assert body["error"] == "token_expired"


def test_access_token_valid_before_ttl(app, clock):
    register(app, "u1", "patient")
    pair = login(app, "u1")
    clock.advance(seconds=14 * 60)
    status, body = call(app, "GET", "/users/me", token=pair["access_token"])
    assert status == 200 and body["username"] == "u1"


def test_refresh_rotation(app):
    register(app, "u1", "patient")
    pair = login(app, "u1")
    status, fresh = call(app, "POST", "/auth/refresh",
                         value={"refresh_token": pair["refresh_token"]})
    assert status == 200
    assert fresh["access_token"] != pair["access_token"]
    # replaying the consumed refresh token fails
    status, body = call(app, "POST", "/auth/refresh",
                        value={"refresh_token": pair["refresh_token"]})
    assert status == 401
    # the new one still works
    status, _ = call(app, "POST", "/auth/refresh",
                     value={"refresh_token": fresh["refresh_token"]})
    assert status == 200


def test_refresh_expires_after_14_days(app, clock):
    register(app, "u1", "patient")
    pair = login(app, "u1")
    clock.advance(days=14, seconds=1)
    status, _ = call(app, "POST", "/auth/refresh",
                     value={"refresh_token": pair["refresh_token"]})
    assert status == 401


def test_missing_token_is_401(app):
    status, body = call(app, "GET", "/users/me")
    assert status == 401


def test_unknown_path_404_and_wrong_method_405(app):
    status, _ = call(app, "GET", "/no/such/thing")
    assert status == 404
    status, _ = call(app, "DELETE", "/auth/login")
    assert status == 405


# ----------------------------------------------------------------------
# role policy behavior
# ----------------------------------------------------------------------


def test_researcher_upgrade_grants_research_access(app):
    world = make_world(app)
    token = world["researcher"]["access_token"]
    status, body = call(app, "GET", "/research/cases", token=token)
    assert status == 200


def test_pending_researcher_denied(app):
    world = make_world(app)
    # a patient with a pending request is still just a patient
    token = world["patient"]["access_token"]
    patient_id = world["users"]["patient"]["user_id"]
    status, _ = call(app, "POST", f"/users/{patient_id}/researcher-request", token=token)
    assert status == 200
    status, _ = call(app, "GET", "/research/cases", token=token)
    assert status == 403


def test_researcher_cannot_read_raw_treatments(app):
    world = make_world(app)
    patient_id = world["users"]["patient"]["user_id"]
    status, _ = call(app, "GET", f"/patients/{patient_id}/treatments",
                     token=world["researcher"]["access_token"])
    assert status == 403


def test_unassigned_doctor_denied_on_treatments(app):
    world = make_world(app)
    other = register(app, "doc2", "doctor")
    pair = login(app, "doc2")
    patient_id = world["users"]["patient"]["user_id"]
    status, _ = call(app, "GET", f"/patients/{patient_id}/treatments",
                     token=pair["access_token"])
    assert status == 403


def test_patient_reads_own_treatments_only(app):
    world = make_world(app)
    patient_id = world["users"]["patient"]["user_id"]
    status, _ = call(app, "GET", f"/patients/{patient_id}/treatments",
                     token=world["patient"]["access_token"])
    assert status == 200
    other = register(app, "pat2", "patient")
    status, _ = call(app, "GET", f"/patients/{other['user_id']}/treatments",
                     token=world["patient"]["access_token"])
    assert status == 403


def test_non_admin_cannot_decide(app):
    world = make_world(app)
    patient_id = world["users"]["patient"]["user_id"]
    status, _ = call(app, "POST", f"/users/{patient_id}/researcher-decision",
                     token=world["doctor"]["access_token"],
                     value={"decision": "approved"})
    assert status == 403


# ----------------------------------------------------------------------
# workflow endpoints
# ----------------------------------------------------------------------

QUESTIONS = [
    {"key": "severity", "prompt": "How severe?",
     "answer_kind": {"kind": "integer_scale", "min": 0, "max": 10}},
]


def test_form_assignment_treatment_flow(app):
    world = make_world(app)
    doctor_token = world["doctor"]["access_token"]
    patient_token = world["patient"]["access_token"]
    patient_id = world["users"]["patient"]["user_id"]

    status, form = call(app, "POST", "/forms", token=doctor_token,
                        value={"title": "Weekly", "questions": QUESTIONS})
    assert status == 201
    status, assignment = call(app, "POST", f"/forms/{form['form_id']}/assignments",
                              token=doctor_token,
                              value={"patient_id": patient_id, "recurrence": "weekly"})
    assert status == 201
    status, pending = call(app, "GET", "/assignments?status=pending", token=patient_token)
    assert status == 200 and len(pending["items"]) == 1

    status, entry = call(app, "POST", f"/patients/{patient_id}/treatments",
                         token=patient_token,
                         value={"formulation": "OG-1", "dose": 2.5, "dose_unit": "mg",
                                "severity": 7, "effectiveness": 4})
    assert status == 201
    status, treatments = call(app, "GET", f"/patients/{patient_id}/treatments",
                              token=doctor_token)
    assert status == 200
    assert [e["entry_id"] for e in treatments["items"]] == [entry["entry_id"]]

    status, submitted = call(app, "POST",
                             f"/assignments/{assignment['assignment_id']}/submission",
                             token=patient_token, value={"answers": {"severity": 3}})
    assert status == 200 and submitted["follow_up"] is not None

    status, body = call(app, "POST", f"/patients/{patient_id}/treatments",
                        token=patient_token,
                        value={"formulation": "OG-1", "dose": 1.0, "dose_unit": "mg",
                               "severity": 11, "effectiveness": 4})
    assert status == 422
    assert body["error"] == "validation_failed"
    assert "out_of_range" in body["detail"]


def test_patient_reads_assigned_form_only(app):
    world = make_world(app)
    doctor_token = world["doctor"]["access_token"]
    patient_token = world["patient"]["access_token"]
    status, form = call(app, "POST", "/forms", token=doctor_token,
                        value={"title": "Private", "questions": QUESTIONS})
    assert status == 201
    # not assigned yet: the patient may not read it
    status, _ = call(app, "GET", f"/forms/{form['form_id']}", token=patient_token)
    assert status == 403
    call(app, "POST", f"/forms/{form['form_id']}/assignments", token=doctor_token,
         value={"patient_id": world["users"]["patient"]["user_id"], "recurrence": "once"})
    status, fetched = call(app, "GET", f"/forms/{form['form_id']}", token=patient_token)
    assert status == 200
    assert fetched["questions"] == form["questions"]
    # doctors read forms directly
    status, _ = call(app, "GET", f"/forms/{form['form_id']}", token=doctor_token)
    assert status == 200


def test_case_view_and_annotations(app):
    world = make_world(app)
    case_id = world["case"]["case_id"]
    doctor_token = world["doctor"]["access_token"]
    status, annotation = call(app, "POST", f"/cases/{case_id}/annotations",
                              token=doctor_token, value={"text": "improving"})
    assert status == 201
    status, case = call(app, "GET", f"/cases/{case_id}", token=doctor_token)
    assert status == 200
    assert [a["text"] for a in case["annotations"]] == ["improving"]
    # patient sees own case too
    status, _ = call(app, "GET", f"/cases/{case_id}",
                     token=world["patient"]["access_token"])
    assert status == 200


def test_ingest_search_strains_flow(app):
    world = make_world(app)
    grower_token = world["grower"]["access_token"]
    researcher_token = world["researcher"]["access_token"]
    admin_token = world["admin"]["access_token"]

    csv_bytes = (b"sample_id,strain_name,THC%,CBD%\n"
                 b"s1,OG-1,12.5,0.5\ns2,OG-1,12.4,0.55\ns3,Haze,2.0,9.0")
    boundary = "testboundary"
    body = (
        f"--{boundary}\r\n"
        'Content-Disposition: form-data; name="spec"\r\n\r\n'
        "strain/profile\r\n"
        f"--{boundary}\r\n"
        'Content-Disposition: form-data; name="file"; filename="strains.csv"\r\n'
        "Content-Type: text/csv\r\n\r\n"
    ).encode() + csv_bytes + f"\r\n--{boundary}--\r\n".encode()
    status, report = call(app, "POST", "/ingest", token=grower_token, body=body,
                          headers={"Content-Type": f"multipart/form-data; boundary={boundary}"})
    assert status == 201, report
    assert report["records_produced"] == 3

    status, _ = call(app, "POST", "/reindex", token=admin_token)
    assert status == 200
    status, results = call(app, "GET", "/search?q=haze&limit=10", token=researcher_token)
    assert status == 200
    assert len(results["results"]) == 1

    status, strains = call(app, "GET", "/strains", token=grower_token)
    assert status == 200 and strains["total"] == 3
    status, similar = call(app, "GET", "/strains/s1/similar?k=2", token=researcher_token)
    assert status == 200
    assert similar["similar"][0]["sample_id"] == "s2"
    status, consistency = call(app, "GET", "/strains/consistency", token=researcher_token)
    assert status == 200
    assert 0.0 <= consistency["consistency_score"] <= 1.0


def test_subscription_alert_endpoints(app):
    world = make_world(app)
    grower_token = world["grower"]["access_token"]
    patient_token = world["patient"]["access_token"]
    patient_id = world["users"]["patient"]["user_id"]
    status, sub = call(app, "POST", "/subscriptions", token=grower_token,
                       value={"kind": "strain", "key": "OG-1"})
    assert status == 201
    status, _ = call(app, "POST", f"/patients/{patient_id}/treatments",
                     token=patient_token,
                     value={"formulation": "OG-1", "dose": 2.5, "dose_unit": "mg",
                            "severity": 5, "effectiveness": 5})
    assert status == 201
    status, alerts = call(app, "GET", "/alerts", token=grower_token)
    assert status == 200 and alerts["total"] == 1
    status, subs = call(app, "GET", "/subscriptions", token=grower_token)
    assert status == 200 and subs["total"] == 1


def test_pagination_defaults_and_caps(app):
    world = make_world(app)
    token = world["doctor"]["access_token"]
    status, page = call(app, "GET", "/patients", token=token)
    assert status == 200
    assert page["limit"] == 50 and page["offset"] == 0
    status, page = call(app, "GET", "/patients?limit=9999", token=token)
    assert page["limit"] == 500
    status, page = call(app, "GET", "/patients?limit=1&offset=0", token=token)
    assert len(page["items"]) <= 1


# ----------------------------------------------------------------------
# transport smoke test over a real socket
# ----------------------------------------------------------------------


def test_real_http_server_round_trip(app):
    import http.client

    server = make_server(app, "127.0.0.1", 0)
    port = server.server_address[1]
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        conn = http.client.HTTPConnection("127.0.0.1", port, timeout=5)
        conn.request("GET", "/health")
        response = conn.getresponse()
        assert response.status == 200
        assert canonical_loads(response.read()) == {"status": "ok"}
        conn.request("OPTIONS", "/health")
        preflight = conn.getresponse()
        preflight.read()
        assert preflight.status == 204
        assert preflight.getheader("Access-Control-Allow-Origin") == "*"
    finally:
        server.shutdown()
        server.server_close()
