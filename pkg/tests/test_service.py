from __future__ import annotations

import json
import os
import re

import pytest
from fastapi.testclient import TestClient

from econlab.knowledge import Document, HashEmbedder, KnowledgeIndex
from econlab.service import ServiceState, create_app

GOOD_REPLY = (
    "HYPOTHESIS=Funding innovation raises total consumption\n"
    "LEVER=innovation_support control=false treatment=true\n"
    "METRIC=total_consumption direction=increase\n"
    "MECHANISM=subsidies fund productivity growth\n"
)

PROSE_REPLY = "The economy is fascinating and has many moving parts."


@pytest.fixture
def make_service(tmp_path):
    created = []

    def factory(provider=lambda p: GOOD_REPLY, subdir="svc", **kwargs):
        state = ServiceState(
            str(tmp_path / subdir),
            index=KnowledgeIndex(embedder=HashEmbedder(dimension=16)),
            provider=provider,
            horizon=kwargs.pop("horizon", 12),
            seeds=kwargs.pop("seeds", (1, 2)),
            population=kwargs.pop("population", {"n_households": 4, "n_firms": 2}),
            **kwargs,
        )
        state.index.ingest(
            [
                Document(
                    doc_id=f"d{i}",
                    title=f"study {i}",
                    venue="JEDC",
                    year=2020,
                    abstract=f"abstract {i} on growth, wages and policy",
                )
                for i in range(3)
            ]
        )
        created.append(state)
        return state, TestClient(create_app(state))

    yield factory
    for state in created:
        state.toolbox.shutdown()


def new_session(client):
    response = client.post("/sessions", json={})
    assert response.status_code == 200
    return response.json()["session_id"]


def drive_to_execution(client):
    sid = new_session(client)
    assert client.post(f"/sessions/{sid}/intuition", json={"text": "fund innovation"}).json()[
        "kind"
    ] == "hypothesis"
    assert client.post(f"/sessions/{sid}/confirm-hypothesis", json={}).status_code == 200
    assert client.post(f"/sessions/{sid}/confirm-design", json={}).status_code == 200
    return sid


# -- plumbing ----------------------------------------------------------------


def test_health(make_service):
    _, client = make_service()
    assert client.get("/health").json() == {"status": "ok"}


def test_registry_view(make_service):
    _, client = make_service()
    payload = client.get("/registry").json()
    assert len(payload["levers"]) == 6
    assert len(payload["metrics"]) == 7


def test_tool_endpoint_mirrors_the_wire_protocol(make_service):
    _, client = make_service()
    ok = client.post("/tool", json={"id": 1, "tool": "inspect_parameters"}).json()
    assert ok["id"] == 1 and ok["status"] == "ok"
    bad = client.post("/tool", json={"nope": True}).json()
    assert bad == {
        "id": None,
        "status": "error",
        "error": {"category": "invalid_args", "message": "malformed request frame"},
    }


# -- session lifecycle -------------------------------------------------------


def test_create_session_generates_server_side_ids(make_service):
    _, client = make_service()
    response = client.post("/sessions", json={"session_id": "mine"})
    sid = response.json()["session_id"]
    assert re.fullmatch(r"s-[0-9a-f]{10}", sid)
    assert sid != "mine"
    assert response.json()["stage"] == "idea"


def test_sessions_are_persisted_to_disk(make_service, tmp_path):
    state, client = make_service()
    sid = new_session(client)
    path = os.path.join(state.data_dir, "sessions", sid, "session.json")
    stored = json.load(open(path))
    assert stored["session_id"] == sid
    assert stored["stage"] == "idea"


def test_list_sessions_in_creation_order(make_service):
    state, client = make_service()
    ticks = iter(range(100))
    state.clock = lambda: float(next(ticks))
    first = new_session(client)
    second = new_session(client)
    listed = client.get("/sessions").json()["sessions"]
    assert [s["session_id"] for s in listed] == [first, second]
    assert all(set(s) == {"session_id", "stage", "created_at"} for s in listed)


def test_unknown_session_is_404(make_service):
    _, client = make_service()
    response = client.get("/sessions/nope")
    assert response.status_code == 404
    assert response.json()["detail"] == "unknown session 'nope'"


def test_sessions_survive_a_service_restart(make_service, tmp_path):
    state, client = make_service(subdir="restart")
    sid = new_session(client)
    client.post(f"/sessions/{sid}/intuition", json={"text": "fund innovation"})
    fresh = ServiceState(
        state.data_dir, index=KnowledgeIndex(embedder=HashEmbedder(dimension=16))
    )
    try:
        assert sid in fresh.sessions
        assert fresh.sessions[sid]["intuition"] == "fund innovation"
        assert fresh.sessions[sid]["hypothesis"] is not None
    finally:
        fresh.toolbox.shutdown()


# -- intuition ---------------------------------------------------------------


def test_blank_intuition_is_422(make_service):
    _, client = make_service()
    sid = new_session(client)
    response = client.post(f"/sessions/{sid}/intuition", json={"text": "   "})
    assert response.status_code == 422
    assert response.json()["detail"] == "intuition text must be non-empty"


def test_intuition_without_provider_is_503(make_service):
    _, client = make_service(provider=None)
    sid = new_session(client)
    response = client.post(f"/sessions/{sid}/intuition", json={"text": "an idea"})
    assert response.status_code == 503
    assert "no decision provider configured" in response.json()["detail"]


def test_intuition_returns_a_hypothesis(make_service):
    _, client = make_service()
    sid = new_session(client)
    payload = client.post(f"/sessions/{sid}/intuition", json={"text": "fund innovation"}).json()
    assert payload["kind"] == "hypothesis"
    hyp = payload["hypothesis"]
    assert hyp["independent_levers"] == [["innovation_support", False, True]]
    assert hyp["dependent_metrics"] == [["total_consumption", "increase"]]
    session = client.get(f"/sessions/{sid}").json()
    assert session["stage"] == "idea"
    assert session["hypothesis"] == hyp


def test_prose_reply_yields_a_diagnosis(make_service):
    _, client = make_service(provider=lambda p: PROSE_REPLY, subdir="prose")
    sid = new_session(client)
    payload = client.post(f"/sessions/{sid}/intuition", json={"text": "vague idea"}).json()
    assert payload["kind"] == "diagnosis"
    assert payload["diagnosis"]["violations"]
    confirm = client.post(f"/sessions/{sid}/confirm-hypothesis", json={})
    assert confirm.status_code == 409
    assert confirm.json()["detail"] == "no hypothesis to confirm"


# -- stage gates -------------------------------------------------------------


def test_execute_is_blocked_until_design_is_confirmed(make_service):
    _, client = make_service()
    sid = new_session(client)
    response = client.post(f"/sessions/{sid}/execute", json={})
    assert response.status_code == 409
    assert response.json()["detail"] == "stage is 'idea'; confirm the design before executing"

    client.post(f"/sessions/{sid}/intuition", json={"text": "fund innovation"})
    client.post(f"/sessions/{sid}/confirm-hypothesis", json={})
    response = client.post(f"/sessions/{sid}/execute", json={})
    assert response.status_code == 409
    assert response.json()["detail"] == "stage is 'design'; confirm the design before executing"


def test_confirm_design_requires_design_stage(make_service):
    _, client = make_service()
    sid = new_session(client)
    response = client.post(f"/sessions/{sid}/confirm-design", json={})
    assert response.status_code == 409
    assert response.json()["detail"] == "stage is 'idea', expected 'design'"


def test_no_intuition_mid_design(make_service):
    _, client = make_service()
    sid = new_session(client)
    client.post(f"/sessions/{sid}/intuition", json={"text": "fund innovation"})
    client.post(f"/sessions/{sid}/confirm-hypothesis", json={})
    response = client.post(f"/sessions/{sid}/intuition", json={"text": "another idea"})
    assert response.status_code == 409
    assert response.json()["detail"] == "cannot submit an intuition during stage 'design'"


def test_confirm_hypothesis_builds_the_design(make_service):
    _, client = make_service()
    sid = new_session(client)
    client.post(f"/sessions/{sid}/intuition", json={"text": "fund innovation"})
    payload = client.post(f"/sessions/{sid}/confirm-hypothesis", json={}).json()
    assert payload["stage"] == "design"
    design = payload["design"]
    assert [g[0] for g in design["groups"]] == ["control", "treatment"]
    assert design["declared_interventions"] == ["innovation_support"]
    assert design["seeds"] == [1, 2]
    assert design["horizon"] == 12
    assert set(design["config_hashes"]) == {"control", "treatment"}


def test_confirm_hypothesis_rejects_bad_seed_overrides(make_service):
    _, client = make_service()
    sid = new_session(client)
    client.post(f"/sessions/{sid}/intuition", json={"text": "fund innovation"})
    response = client.post(f"/sessions/{sid}/confirm-hypothesis", json={"seeds": [1, 1]})
    assert response.status_code == 400
    assert response.json()["detail"] == "seeds must be distinct"


# -- execution and analysis --------------------------------------------------


def test_full_flow_reaches_complete_with_a_supported_verdict(make_service):
    _, client = make_service()
    sid = drive_to_execution(client)
    payload = client.post(f"/sessions/{sid}/execute", json={}).json()
    assert set(payload) == {"stage", "job_ids", "report", "iteration"}
    assert payload["stage"] == "complete"
    assert payload["report"]["verdict"] == "supported"
    assert payload["iteration"] == {"status": "complete"}
    assert set(payload["job_ids"]) == {"control:1", "control:2", "treatment:1", "treatment:2"}


def test_results_endpoint_bundles_artifacts(make_service):
    _, client = make_service()
    sid = drive_to_execution(client)
    client.post(f"/sessions/{sid}/execute", json={})
    payload = client.get(f"/sessions/{sid}/results").json()
    assert payload["stage"] == "complete"
    assert payload["report"]["verdict"] == "supported"
    assert set(payload["results"]) == {"control:1", "control:2", "treatment:1", "treatment:2"}
    for entry in payload["results"].values():
        assert entry["state"] == "succeeded"
        assert entry["artifact"]["job_id"] == entry["job_id"]
        assert len(entry["artifact"]["metrics"]["total_consumption"]) == 12


def test_results_endpoint_serves_seed_mean_aggregates(make_service):
    _, client = make_service()
    sid = drive_to_execution(client)
    client.post(f"/sessions/{sid}/execute", json={})
    payload = client.get(f"/sessions/{sid}/results").json()
    aggregates = payload["aggregates"]
    assert set(aggregates) == {"control", "treatment"}
    series = {key: entry["artifact"]["metrics"] for key, entry in payload["results"].items()}
    for group in ("control", "treatment"):
        assert len(aggregates[group]) == 7
        for metric, means in aggregates[group].items():
            assert len(means) == 12
            for tick, mean in enumerate(means):
                both = (series[f"{group}:1"][metric][tick], series[f"{group}:2"][metric][tick])
                assert mean == pytest.approx(sum(both) / 2)


def test_manifest_endpoint_resolves_evidence_refs(make_service):
    _, client = make_service()
    sid = new_session(client)
    outcome = client.post(f"/sessions/{sid}/intuition", json={"text": "fund innovation"}).json()
    refs = outcome["hypothesis"]["evidence"]
    assert refs
    manifest = client.get(f"/manifests/{refs[0]}").json()
    assert manifest["manifest_id"] == refs[0]
    assert manifest["session_id"] == sid
    assert manifest["hits"]
    for doc_id, seq, score in manifest["hits"]:
        assert doc_id in {"d0", "d1", "d2"}
        assert isinstance(seq, int)
        assert -1.0 <= score <= 1.0


def test_manifest_endpoint_unknown_id(make_service):
    _, client = make_service()
    response = client.get("/manifests/m-999")
    assert response.status_code == 404
    assert response.json()["detail"] == "unknown manifest 'm-999'"


def test_memory_endpoint_exposes_the_full_trace(make_service):
    _, client = make_service()
    sid = drive_to_execution(client)
    client.post(f"/sessions/{sid}/execute", json={})
    records = client.get(f"/sessions/{sid}/memory").json()["records"]
    # idea + design + confirmation + 4 job traces + analysis
    assert len(records) == 8
    kinds = [r["kind"] for r in records]
    assert kinds.count("execution_trace") == 5
    assert kinds[0] == "theoretical_context"
    assert kinds[-1] == "outcome_synthesis"
    assert [r["record_id"] for r in records] == list(range(1, 9))


def test_partial_execution_returns_502_and_stays_in_execution(make_service):
    state, client = make_service(subdir="partial")
    sid = drive_to_execution(client)
    from econlab.toolbox import default_runner

    def faulty(config, seed, horizon, progress, log):
        if seed == 2 and config.levers["innovation_support"]:
            raise RuntimeError("injected fault")
        return default_runner(config, seed, horizon, progress, log)

    state.toolbox.runner = faulty
    response = client.post(f"/sessions/{sid}/execute", json={})
    assert response.status_code == 502
    payload = response.json()
    assert payload["stage"] == "execution"
    assert payload["partial"] is True
    assert payload["failures"][0]["message"] == "injected fault"
    assert client.get(f"/sessions/{sid}").json()["stage"] == "execution"

    state.toolbox.runner = default_runner
    retry = client.post(f"/sessions/{sid}/execute", json={})
    assert retry.status_code == 200
    assert retry.json()["stage"] == "complete"


# -- jobs --------------------------------------------------------------------


def test_job_status_and_logs_endpoints(make_service):
    _, client = make_service()
    sid = drive_to_execution(client)
    job_ids = client.post(f"/sessions/{sid}/execute", json={}).json()["job_ids"]
    job_id = job_ids["control:1"]
    status = client.get(f"/jobs/{job_id}").json()
    assert status == {
        "job_id": job_id,
        "state": "succeeded",
        "progress": {"tick": 12, "horizon": 12},
        "error": None,
    }
    entries = client.get(f"/jobs/{job_id}/logs").json()["entries"]
    assert any(e["message"] == "succeeded" for e in entries)
    assert client.get("/jobs/job-404").status_code == 404
    assert client.get("/jobs/job-404/logs").status_code == 404


def test_job_events_stream_ends_with_the_terminal_state(make_service):
    _, client = make_service()
    sid = drive_to_execution(client)
    job_ids = client.post(f"/sessions/{sid}/execute", json={}).json()["job_ids"]
    job_id = job_ids["treatment:1"]
    response = client.get(f"/jobs/{job_id}/events")
    assert response.headers["content-type"].startswith("text/event-stream")
    events = [
        json.loads(line[len("data: ") :])
        for line in response.text.splitlines()
        if line.startswith("data: ")
    ]
    assert events
    assert events[-1]["state"] == "succeeded"
    assert events[-1]["progress"] == {"tick": 12, "horizon": 12}
    assert client.get("/jobs/job-404/events").status_code == 404


# -- idempotency -------------------------------------------------------------


def test_create_session_replays_on_the_same_request_id(make_service):
    _, client = make_service()
    first = client.post("/sessions", json={"request_id": "r-1"}).json()
    second = client.post("/sessions", json={"request_id": "r-1"}).json()
    assert first == second
    assert len(client.get("/sessions").json()["sessions"]) == 1
    third = client.post("/sessions", json={"request_id": "r-2"}).json()
    assert third["session_id"] != first["session_id"]


def test_intuition_replays_without_reworking(make_service):
    state, client = make_service()
    sid = new_session(client)
    body = {"text": "fund innovation", "request_id": "r-int"}
    first = client.post(f"/sessions/{sid}/intuition", json=body).json()
    second = client.post(f"/sessions/{sid}/intuition", json=body).json()
    assert first == second
    assert len(state.memory.query(sid)) == 1


def test_confirm_hypothesis_replays_after_the_stage_moved_on(make_service):
    _, client = make_service()
    sid = new_session(client)
    client.post(f"/sessions/{sid}/intuition", json={"text": "fund innovation"})
    body = {"request_id": "r-conf"}
    first = client.post(f"/sessions/{sid}/confirm-hypothesis", json=body)
    second = client.post(f"/sessions/{sid}/confirm-hypothesis", json=body)
    assert first.status_code == second.status_code == 200
    assert first.json() == second.json()
    # a fresh request id still hits the stage gate
    gate = client.post(f"/sessions/{sid}/confirm-hypothesis", json={"request_id": "r-new"})
    assert gate.status_code == 409


def test_execute_replays_the_stored_response(make_service):
    _, client = make_service()
    sid = drive_to_execution(client)
    body = {"request_id": "r-exec"}
    first = client.post(f"/sessions/{sid}/execute", json=body).json()
    second = client.post(f"/sessions/{sid}/execute", json=body).json()
    assert first == second
    assert first["stage"] == "complete"
