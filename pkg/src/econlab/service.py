"""HTTP service tying the pipeline together for the web UI and scripts.

Sessions move idea -> design -> execution -> analysis -> complete (or back to
idea on a revised intuition). Stage confirmations are explicit endpoints;
nothing advances implicitly. State-changing endpoints accept a client
`request_id` and replay the stored response on retry. Job progress streams
over server-sent events with plain polling as fallback.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from typing import Any, Callable, Optional

from fastapi import Body, FastAPI, HTTPException
from fastapi.responses import JSONResponse, StreamingResponse

from .econ.registry import ParameterRegistry, default_registry
from .knowledge import KnowledgeIndex
from .memory import MemoryStore
from .orchestrator import (
    AnalysisReport,
    ExperimentDesign,
    FeasibilityDiagnosis,
    Hypothesis,
    Intuition,
    OrchestratorError,
    ResultBundle,
    analyze,
    design_experiment,
    develop_idea,
    execute_design,
    iterate,
)
from .toolbox import Toolbox

SESSION_STAGES = ("idea", "design", "execution", "analysis", "complete")
SSE_POLL_INTERVAL = 0.1
SSE_MAX_SECONDS = 300.0


class ServiceState:
    """Shared components plus on-disk session documents."""

    def __init__(
        self,
        data_dir: str,
        registry: Optional[ParameterRegistry] = None,
        index: Optional[KnowledgeIndex] = None,
        provider: Optional[Callable[[str], str]] = None,
        clock: Callable[[], float] = time.time,
        horizon: int = 24,
        seeds: tuple[int, ...] = (1, 2, 3),
        population: Optional[dict[str, int]] = None,
    ):
        self.data_dir = data_dir
        self.registry = registry if registry is not None else default_registry()
        self.index = index if index is not None else KnowledgeIndex(
            manifest_dir=os.path.join(data_dir, "manifests")
        )
        if self.index.manifest_dir is None:
            self.index.manifest_dir = os.path.join(data_dir, "manifests")
        self.provider = provider
        self.clock = clock
        self.horizon = horizon
        self.seeds = seeds
        self.population = dict(population or {})
        self.toolbox = Toolbox(data_dir, self.registry, clock=clock)
        self.memory = MemoryStore(data_dir, resolver=self._resolve_ref, clock=clock)
        self.sessions: dict[str, dict[str, Any]] = {}
        self.idempotency: dict[str, Any] = {}
        self.lock = threading.Lock()
        self._load_sessions()

    def _resolve_ref(self, ref: str) -> bool:
        return (
            self.index.has_manifest(ref)
            or self.toolbox.has_config(ref)
            or self.toolbox.has_job(ref)
        )

    # -- session persistence ----------------------------------------------

    def _session_path(self, session_id: str) -> str:
        return os.path.join(self.data_dir, "sessions", session_id, "session.json")

    def _load_sessions(self) -> None:
        root = os.path.join(self.data_dir, "sessions")
        if not os.path.isdir(root):
            return
        for sid in sorted(os.listdir(root)):
            path = self._session_path(sid)
            if os.path.exists(path):
                with open(path, encoding="utf-8") as fh:
                    self.sessions[sid] = json.load(fh)

    def save_session(self, session: dict[str, Any]) -> None:
        path = self._session_path(session["session_id"])
        os.makedirs(os.path.dirname(path), exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(session, fh, sort_keys=True, indent=1)

    def get_session(self, session_id: str) -> dict[str, Any]:
        session = self.sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return session

    def require_provider(self) -> Callable[[str], str]:
        if self.provider is None:
            raise HTTPException(
                status_code=503,
                detail="no decision provider configured; start the service with scripted "
                "replies or plug one in",
            )
        return self.provider


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="econlab service")
    app.state.svc = state

    def idempotent(request_id: Optional[str], compute: Callable[[], Any]) -> Any:
        if request_id is None:
            return compute()
        with state.lock:
            if request_id in state.idempotency:
                return state.idempotency[request_id]
        payload = compute()
        with state.lock:
            state.idempotency[request_id] = payload
        return payload

    # -- plumbing ----------------------------------------------------------

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/registry")
    def registry_view():
        return state.registry.to_dict()

    @app.post("/tool")
    def tool(request: dict = Body(...)):
        return state.toolbox.handle_request(request)

    @app.get("/manifests/{manifest_id}")
    def manifest(manifest_id: str):
        found = state.index.manifests.get(manifest_id)
        if found is None:
            raise HTTPException(status_code=404, detail=f"unknown manifest {manifest_id!r}")
        return found.to_dict()

    # -- sessions ----------------------------------------------------------

    @app.post("/sessions")
    def create_session(body: Optional[dict] = Body(None)):
        body = body or {}

        def compute():
            session = {
                "session_id": f"s-{uuid.uuid4().hex[:10]}",
                "created_at": state.clock(),
                "stage": "idea",
                "intuition": None,
                "hypothesis": None,
                "diagnosis": None,
                "design": None,
                "job_ids": None,
                "report": None,
                "iteration": None,
            }
            with state.lock:
                state.sessions[session["session_id"]] = session
            state.save_session(session)
            return {"session_id": session["session_id"], "stage": session["stage"]}

        return idempotent(body.get("request_id"), compute)

    @app.get("/sessions")
    def list_sessions():
        with state.lock:
            sessions = sorted(state.sessions.values(), key=lambda s: s["created_at"])
        return {
            "sessions": [
                {"session_id": s["session_id"], "stage": s["stage"], "created_at": s["created_at"]}
                for s in sessions
            ]
        }

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return state.get_session(session_id)

    @app.post("/sessions/{session_id}/intuition")
    def post_intuition(session_id: str, body: dict = Body(...)):
        session = state.get_session(session_id)
        text = (body.get("text") or "").strip()
        if not text:
            raise HTTPException(status_code=422, detail="intuition text must be non-empty")
        provider = state.require_provider()

        def compute():
            # gates live inside so a replayed request_id returns the stored
            # response instead of tripping over its own completed stage change
            if session["stage"] not in ("idea", "analysis", "complete"):
                raise HTTPException(
                    status_code=409,
                    detail=f"cannot submit an intuition during stage {session['stage']!r}",
                )
            try:
                outcome = develop_idea(
                    Intuition(session_id, text), state.index, state.registry, provider, state.memory
                )
            except (OrchestratorError, ValueError) as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            session["intuition"] = text
            session["stage"] = "idea"
            session["design"] = None
            session["job_ids"] = None
            session["report"] = None
            session["iteration"] = None
            if isinstance(outcome, Hypothesis):
                session["hypothesis"] = outcome.to_dict()
                session["diagnosis"] = None
                payload = {"kind": "hypothesis", "hypothesis": session["hypothesis"]}
            else:
                session["hypothesis"] = None
                session["diagnosis"] = outcome.to_dict()
                payload = {"kind": "diagnosis", "diagnosis": session["diagnosis"]}
            state.save_session(session)
            return payload

        return idempotent(body.get("request_id"), compute)

    @app.post("/sessions/{session_id}/confirm-hypothesis")
    def confirm_hypothesis(session_id: str, body: Optional[dict] = Body(None)):
        body = body or {}
        session = state.get_session(session_id)

        def compute():
            if session["stage"] != "idea":
                raise HTTPException(
                    status_code=409, detail=f"stage is {session['stage']!r}, expected 'idea'"
                )
            if not session.get("hypothesis"):
                raise HTTPException(status_code=409, detail="no hypothesis to confirm")
            hypothesis = Hypothesis.from_dict(session["hypothesis"])
            try:
                design = design_experiment(
                    hypothesis,
                    state.registry,
                    state.toolbox,
                    seeds=tuple(body.get("seeds", state.seeds)),
                    horizon=int(body.get("horizon", state.horizon)),
                    population={**state.population, **body.get("population", {})},
                    memory=state.memory,
                    session_id=session_id,
                )
            except OrchestratorError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            session["design"] = design.to_dict()
            session["stage"] = "design"
            state.save_session(session)
            return {"stage": "design", "design": session["design"]}

        return idempotent(body.get("request_id"), compute)

    @app.post("/sessions/{session_id}/confirm-design")
    def confirm_design(session_id: str, body: Optional[dict] = Body(None)):
        body = body or {}
        session = state.get_session(session_id)

        def compute():
            if session["stage"] != "design":
                raise HTTPException(
                    status_code=409, detail=f"stage is {session['stage']!r}, expected 'design'"
                )
            session["stage"] = "execution"
            state.memory.append(
                session_id,
                stage="execution",
                kind="execution_trace",
                body={"event": "design_confirmed", "design_id": session["design"]["design_id"]},
            )
            state.save_session(session)
            return {"stage": "execution"}

        return idempotent(body.get("request_id"), compute)

    @app.post("/sessions/{session_id}/execute")
    def execute(session_id: str, body: Optional[dict] = Body(None)):
        body = body or {}
        session = state.get_session(session_id)

        def compute():
            if session["stage"] != "execution":
                raise HTTPException(
                    status_code=409,
                    detail=f"stage is {session['stage']!r}; confirm the design before executing",
                )
            design = ExperimentDesign.from_dict(session["design"])
            hypothesis = Hypothesis.from_dict(session["hypothesis"])
            bundle = execute_design(design, state.toolbox, state.memory, session_id)
            session["job_ids"] = bundle.job_ids
            state.save_session(session)
            if bundle.partial:
                session["report"] = None
                session["iteration"] = None
                session["stage"] = "execution"
                state.save_session(session)
                return JSONResponse(
                    status_code=502,
                    content={"stage": "execution", "partial": True, "failures": bundle.failures},
                )
            report = analyze(bundle, hypothesis, design, state.memory, session_id)
            session["report"] = report.to_dict()
            session["iteration"] = iterate(report)
            session["stage"] = (
                "complete" if session["iteration"]["status"] == "complete" else "analysis"
            )
            state.save_session(session)
            return {
                "stage": session["stage"],
                "job_ids": bundle.job_ids,
                "report": session["report"],
                "iteration": session["iteration"],
            }

        return idempotent(body.get("request_id"), compute)

    @app.get("/sessions/{session_id}/memory")
    def session_memory(session_id: str):
        state.get_session(session_id)
        return {"records": [r.to_dict() for r in state.memory.query(session_id)]}

    @app.get("/sessions/{session_id}/results")
    def session_results(session_id: str):
        session = state.get_session(session_id)
        results = {}
        by_group: dict[str, list[dict[str, list]]] = {}
        if session.get("job_ids"):
            for key, job_id in session["job_ids"].items():
                status = state.toolbox.poll_status(job_id)
                entry: dict[str, Any] = {"job_id": job_id, "state": status["state"]}
                if status["state"] == "succeeded":
                    entry["artifact"] = state.toolbox.export_results(job_id)
                    group = key.rsplit(":", 1)[0]
                    by_group.setdefault(group, []).append(entry["artifact"]["metrics"])
                results[key] = entry
        # seed means are served here so chart clients never re-derive numbers
        aggregates = {
            group: {
                metric: [sum(vals) / len(vals) for vals in zip(*(m[metric] for m in runs))]
                for metric in runs[0]
            }
            for group, runs in by_group.items()
        }
        return {
            "stage": session["stage"],
            "report": session.get("report"),
            "iteration": session.get("iteration"),
            "results": results,
            "aggregates": aggregates,
        }

    # -- jobs --------------------------------------------------------------

    @app.get("/jobs/{job_id}")
    def job_status(job_id: str):
        try:
            return state.toolbox.poll_status(job_id)
        except Exception as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    @app.get("/jobs/{job_id}/logs")
    def job_logs(job_id: str):
        try:
            return {"entries": state.toolbox.collect_logs(job_id)}
        except Exception as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    @app.get("/jobs/{job_id}/events")
    def job_events(job_id: str):
        try:
            state.toolbox.poll_status(job_id)
        except Exception as exc:
            raise HTTPException(status_code=404, detail=str(exc))

        def stream():
            deadline = time.monotonic() + SSE_MAX_SECONDS
            last = None
            while time.monotonic() < deadline:
                status = state.toolbox.poll_status(job_id)
                payload = json.dumps(status, sort_keys=True)
                if payload != last:
                    yield f"data: {payload}\n\n"
                    last = payload
                if status["state"] in ("succeeded", "failed"):
                    return
                time.sleep(SSE_POLL_INTERVAL)

        return StreamingResponse(stream(), media_type="text/event-stream")

    return app
