"""Tool-protocol server around the simulator.

Seven tools: inspect_parameters, init_environment, configure_experiment,
start_job, poll_status, collect_logs, export_results. Configs are bound to a
SHA-256 hash of their canonical JSON serialization; jobs run on a bounded
in-process worker pool and persist `result.json` plus `logs.jsonl` under
`<data_dir>/jobs/<job_id>/`. The same request/response schema is served over
newline-delimited JSON on stdio and mirrored by the HTTP service.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from .econ.config import ConfigError, ExperimentConfig, resolve_config
from .econ.engine import SimulationResult, init_economy, step_month
from .econ.entities import MetricFrame
from .econ.registry import LeverRangeError, ParameterRegistry, UnknownLeverError, default_registry

ERROR_CATEGORIES = ("unknown_tool", "invalid_args", "unknown_job", "execution_failure")
JOB_STATES = ("queued", "running", "succeeded", "failed")


class ToolError(Exception):
    def __init__(self, category: str, message: str):
        assert category in ERROR_CATEGORIES
        super().__init__(message)
        self.category = category
        self.message = message


def canonical_json(payload: Any) -> str:
    """Stable serialization: sorted keys, compact separators, UTF-8 text."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def config_hash(config: ExperimentConfig) -> str:
    return hashlib.sha256(canonical_json(config.to_dict()).encode("utf-8")).hexdigest()


@dataclass
class LogEntry:
    ts: float
    level: str
    category: str
    message: str

    def to_dict(self) -> dict[str, Any]:
        return {"ts": self.ts, "level": self.level, "category": self.category, "message": self.message}


@dataclass
class Job:
    job_id: str
    config_hash: str
    seed: int
    horizon: int
    state: str = "queued"
    tick: int = 0
    logs: list[LogEntry] = field(default_factory=list)
    result_path: Optional[str] = None
    error: Optional[str] = None


def default_runner(
    config: ExperimentConfig,
    seed: int,
    horizon: int,
    progress: Callable[[int], None],
    log: Callable[[str, str, str], None],
) -> SimulationResult:
    state = init_economy(config, seed)
    frames: list[MetricFrame] = []
    for _ in range(horizon):
        _, report = step_month(state, log=log)
        frames.append(report.metrics)
        progress(state.tick)
    return SimulationResult(
        config=config,
        seed=seed,
        horizon=horizon,
        frames=frames,
        final_state=state,
        ledger=state.ledger,
    )


class Toolbox:
    """Registry-backed tool dispatcher with a persistent job store."""

    def __init__(
        self,
        data_dir: str,
        registry: Optional[ParameterRegistry] = None,
        workers: int = 4,
        runner: Callable[..., SimulationResult] = default_runner,
        clock: Callable[[], float] = time.time,
    ):
        self.data_dir = data_dir
        self.registry = registry if registry is not None else default_registry()
        self.runner = runner
        self.clock = clock
        self._configs: dict[str, ExperimentConfig] = {}
        self._jobs: dict[str, Job] = {}
        self._job_seq = 0
        self._lock = threading.Lock()
        self._pool = ThreadPoolExecutor(max_workers=workers, thread_name_prefix="job")
        os.makedirs(os.path.join(data_dir, "configs"), exist_ok=True)
        os.makedirs(os.path.join(data_dir, "jobs"), exist_ok=True)
        self._load_persisted_configs()

    # -- config binding ----------------------------------------------------

    def _load_persisted_configs(self) -> None:
        cfg_dir = os.path.join(self.data_dir, "configs")
        for name in sorted(os.listdir(cfg_dir)):
            if not name.endswith(".json"):
                continue
            try:
                with open(os.path.join(cfg_dir, name), encoding="utf-8") as fh:
                    raw = json.load(fh)
                cfg = resolve_config(raw, self.registry)
            except (ValueError, KeyError, OSError):
                continue
            self._configs[name[: -len(".json")]] = cfg

    def config_path(self, digest: str) -> str:
        return os.path.join(self.data_dir, "configs", f"{digest}.json")

    def register_config(self, raw: dict[str, Any], require_complete: bool = False) -> str:
        try:
            config = resolve_config(raw, self.registry)
        except (UnknownLeverError, LeverRangeError, ConfigError) as exc:
            raise ToolError("invalid_args", str(exc)) from exc
        if require_complete:
            supplied = set((raw.get("levers") or {}).keys())
            missing = sorted(set(self.registry.levers) - supplied)
            if missing:
                raise ToolError(
                    "invalid_args", "config incomplete, missing levers: " + ", ".join(missing)
                )
        digest = config_hash(config)
        with self._lock:
            if digest not in self._configs:
                self._configs[digest] = config
                with open(self.config_path(digest), "w", encoding="utf-8") as fh:
                    fh.write(canonical_json(config.to_dict()))
        return digest

    def has_config(self, digest: str) -> bool:
        return digest in self._configs

    def stored_config(self, digest: str) -> ExperimentConfig:
        return self._configs[digest]

    # -- job lifecycle -----------------------------------------------------

    def _job(self, job_id: str) -> Job:
        job = self._jobs.get(job_id)
        if job is None:
            raise ToolError("unknown_job", f"unknown job {job_id!r}")
        return job

    def has_job(self, job_id: str) -> bool:
        return job_id in self._jobs

    def job_dir(self, job_id: str) -> str:
        return os.path.join(self.data_dir, "jobs", job_id)

    def start_job(self, digest: str, seed: int, horizon: int) -> str:
        if digest not in self._configs:
            raise ToolError("invalid_args", f"config hash {digest!r} not registered")
        if horizon < 1:
            raise ToolError("invalid_args", "horizon must be >= 1")
        with self._lock:
            self._job_seq += 1
            job = Job(job_id=f"job-{self._job_seq}", config_hash=digest, seed=seed, horizon=horizon)
            self._jobs[job.job_id] = job
        self._log(job, "info", "job", f"queued with config {digest[:12]} seed {seed} horizon {horizon}")
        self._pool.submit(self._run_job, job.job_id)
        return job.job_id

    def _log(self, job: Job, level: str, category: str, message: str) -> None:
        entry = LogEntry(ts=self.clock(), level=level, category=category, message=message)
        with self._lock:
            job.logs.append(entry)

    def _run_job(self, job_id: str) -> None:
        job = self._jobs[job_id]
        with self._lock:
            if job.state != "queued":
                return
            job.state = "running"
        self._log(job, "info", "job", "running")
        config = self._configs[job.config_hash]

        def progress(tick: int) -> None:
            with self._lock:
                job.tick = tick

        def log(level: str, category: str, message: str) -> None:
            self._log(job, level, category, message)

        try:
            result = self.runner(config, job.seed, job.horizon, progress, log)
            artifact = {
                "job_id": job.job_id,
                "config_hash": job.config_hash,
                "seed": job.seed,
                "horizon": job.horizon,
                "metrics": result.metric_series(),
                "ledger": [e.to_dict() for e in result.ledger],
            }
            out_dir = self.job_dir(job.job_id)
            os.makedirs(out_dir, exist_ok=True)
            result_path = os.path.join(out_dir, "result.json")
            with open(result_path, "w", encoding="utf-8") as fh:
                fh.write(canonical_json(artifact))
            with self._lock:
                job.result_path = result_path
                job.tick = job.horizon
                job.state = "succeeded"
            self._log(job, "info", "job", "succeeded")
        except Exception as exc:
            with self._lock:
                job.error = str(exc)
                job.state = "failed"
            self._log(job, "error", "job", f"failed: {exc}")
        finally:
            self._flush_logs(job)

    def _flush_logs(self, job: Job) -> None:
        out_dir = self.job_dir(job.job_id)
        os.makedirs(out_dir, exist_ok=True)
        with self._lock:
            entries = [e.to_dict() for e in job.logs]
        with open(os.path.join(out_dir, "logs.jsonl"), "w", encoding="utf-8") as fh:
            for entry in entries:
                fh.write(canonical_json(entry) + "\n")

    def poll_status(self, job_id: str) -> dict[str, Any]:
        job = self._job(job_id)
        with self._lock:
            return {
                "job_id": job.job_id,
                "state": job.state,
                "progress": {"tick": job.tick, "horizon": job.horizon},
                "error": job.error,
            }

    def collect_logs(self, job_id: str) -> list[dict[str, Any]]:
        job = self._job(job_id)
        with self._lock:
            return [e.to_dict() for e in job.logs]

    def export_results(self, job_id: str) -> dict[str, Any]:
        job = self._job(job_id)
        if job.state == "failed":
            raise ToolError("execution_failure", f"job {job_id} failed: {job.error}")
        if job.state != "succeeded":
            raise ToolError("invalid_args", f"job {job_id} not finished (state {job.state})")
        with open(job.result_path, encoding="utf-8") as fh:
            return json.load(fh)

    def wait(self, job_id: str, timeout: float = 120.0) -> str:
        """Block until the job leaves the queued/running states."""
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            state = self.poll_status(job_id)["state"]
            if state in ("succeeded", "failed"):
                return state
            time.sleep(0.01)
        raise ToolError("execution_failure", f"timed out waiting for job {job_id}")

    def verify_job_binding(self, job_id: str) -> bool:
        """Recompute the stored config's hash and compare with the artifact."""
        job = self._job(job_id)
        if job.state != "succeeded":
            raise ToolError("invalid_args", f"job {job_id} not finished (state {job.state})")
        with open(self.config_path(job.config_hash), encoding="utf-8") as fh:
            stored = json.load(fh)
        recomputed = hashlib.sha256(canonical_json(stored).encode("utf-8")).hexdigest()
        with open(job.result_path, encoding="utf-8") as fh:
            embedded = json.load(fh)["config_hash"]
        return recomputed == embedded

    # -- wire protocol -----------------------------------------------------

    def handle_request(self, request: Any) -> dict[str, Any]:
        if not isinstance(request, dict) or "tool" not in request:
            return _error_response(None, "invalid_args", "malformed request frame")
        req_id = request.get("id")
        tool = request.get("tool")
        args = request.get("args") or {}
        if not isinstance(args, dict):
            return _error_response(req_id, "invalid_args", "args must be an object")
        try:
            payload = self._dispatch(tool, args)
        except ToolError as exc:
            return _error_response(req_id, exc.category, exc.message)
        except Exception as exc:
            return _error_response(req_id, "execution_failure", str(exc))
        return {"id": req_id, "status": "ok", "payload": payload}

    def _dispatch(self, tool: str, args: dict[str, Any]) -> dict[str, Any]:
        if tool == "inspect_parameters":
            return self.registry.to_dict()
        if tool == "init_environment":
            digest = self.register_config(args.get("config") or {})
            return {"config_hash": digest, "config": self._configs[digest].to_dict()}
        if tool == "configure_experiment":
            config = args.get("config")
            if not isinstance(config, dict):
                raise ToolError("invalid_args", "missing config object")
            digest = self.register_config(config, require_complete=True)
            return {"config_hash": digest}
        if tool == "start_job":
            for key in ("config_hash", "seed", "horizon"):
                if key not in args:
                    raise ToolError("invalid_args", f"missing argument {key!r}")
            if not isinstance(args["seed"], int) or isinstance(args["seed"], bool):
                raise ToolError("invalid_args", "seed must be an integer")
            if not isinstance(args["horizon"], int) or isinstance(args["horizon"], bool):
                raise ToolError("invalid_args", "horizon must be an integer")
            job_id = self.start_job(args["config_hash"], args["seed"], args["horizon"])
            return {"job_id": job_id}
        if tool == "poll_status":
            return self.poll_status(_require_job_id(args))
        if tool == "collect_logs":
            return {"entries": self.collect_logs(_require_job_id(args))}
        if tool == "export_results":
            return self.export_results(_require_job_id(args))
        raise ToolError("unknown_tool", f"unknown tool {tool!r}")

    def shutdown(self) -> None:
        self._pool.shutdown(wait=True)


def _require_job_id(args: dict[str, Any]) -> str:
    job_id = args.get("job_id")
    if not isinstance(job_id, str):
        raise ToolError("invalid_args", "missing argument 'job_id'")
    return job_id


def _error_response(req_id: Any, category: str, message: str) -> dict[str, Any]:
    # req_id is None for malformed frames; otherwise echoed verbatim.
    return {
        "id": req_id,
        "status": "error",
        "error": {"category": category, "message": message},
    }


def serve_stdio(toolbox: Toolbox, stdin=None, stdout=None) -> None:
    """Newline-delimited JSON loop: one request per line, one response per line.

    Malformed frames get an error response with a null id rather than
    silence; EOF ends the loop.
    """
    import sys

    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
        except json.JSONDecodeError:
            response = _error_response(None, "invalid_args", "frame is not valid JSON")
        else:
            response = toolbox.handle_request(request)
        stdout.write(canonical_json(response) + "\n")
        stdout.flush()
