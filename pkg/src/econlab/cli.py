"""Command-line entry points.

`econlab serve` runs the HTTP service; `econlab index` builds the literature
index from a JSON-lines corpus; `econlab run-sim` runs one simulation to a
result.json; `econlab workflow` drives a whole scripted research session
non-interactively. Errors go to stderr as one JSON object and a nonzero exit.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from importlib import resources
from typing import Any, Optional

from .behavior import ScriptedProvider
from .econ.config import load_config_file
from .econ.engine import run
from .econ.registry import default_registry
from .knowledge import KnowledgeIndex, KnowledgeError, load_corpus
from .memory import MemoryStore
from .orchestrator import (
    Hypothesis,
    Intuition,
    analyze,
    design_experiment,
    develop_idea,
    execute_design,
    iterate,
)
from .toolbox import Toolbox

DEFAULT_DATA_DIR = os.environ.get("ECON_DATA_DIR", "econlab-data")


class CliError(Exception):
    def __init__(self, message: str, **extra: Any):
        super().__init__(message)
        self.payload = {"error": message, **extra}


def _bundled_corpus_path() -> str:
    return str(resources.files("econlab").joinpath("assets/sample_corpus.jsonl"))


def _bundled_replies_path() -> str:
    return str(resources.files("econlab").joinpath("assets/innovation_replies.txt"))


def _build_index(data_dir: str, corpus: Optional[str]) -> KnowledgeIndex:
    index_dir = os.path.join(data_dir, "index")
    manifest_dir = os.path.join(data_dir, "manifests")
    if corpus is not None:
        index = KnowledgeIndex(manifest_dir=manifest_dir)
        index.ingest(load_corpus(corpus))
        index.save(index_dir)
        return index
    if os.path.exists(os.path.join(index_dir, "metadata.json")):
        return KnowledgeIndex.load(index_dir, manifest_dir=manifest_dir)
    index = KnowledgeIndex(manifest_dir=manifest_dir)
    index.ingest(load_corpus(_bundled_corpus_path()))
    return index


def cmd_index(args: argparse.Namespace) -> int:
    corpus = args.corpus or _bundled_corpus_path()
    try:
        docs = load_corpus(corpus)
    except KnowledgeError as exc:
        raise CliError(str(exc), source=corpus)
    except OSError as exc:
        raise CliError(f"cannot read corpus: {exc}", source=corpus)
    index = KnowledgeIndex(manifest_dir=os.path.join(args.data_dir, "manifests"))
    report = index.ingest(docs)
    out = os.path.join(args.data_dir, "index")
    index.save(out)
    print(json.dumps({"documents": report.documents, "chunks": report.chunks, "index_dir": out}))
    return 0


def cmd_run_sim(args: argparse.Namespace) -> int:
    config: dict[str, Any] = {}
    seed, horizon = args.seed, args.horizon
    if args.config:
        try:
            cfg, file_horizon, file_seed = load_config_file(args.config)
        except (ValueError, OSError, KeyError) as exc:
            raise CliError(str(exc), source=args.config)
        config = cfg.to_dict()
        if file_seed is not None and args.seed is None:
            seed = file_seed
        if file_horizon is not None and args.horizon is None:
            horizon = file_horizon
    seed = 1 if seed is None else seed
    horizon = 12 if horizon is None else horizon
    try:
        result = run(config, seed=seed, horizon=horizon)
    except ValueError as exc:
        raise CliError(str(exc))
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(result.to_dict(), fh, sort_keys=True)
    print(json.dumps({"out": args.out, "frames": len(result.frames), "seed": seed, "horizon": horizon}))
    return 0


def cmd_workflow(args: argparse.Namespace) -> int:
    data_dir = args.data_dir
    os.makedirs(data_dir, exist_ok=True)
    try:
        index = _build_index(data_dir, args.corpus)
    except KnowledgeError as exc:
        raise CliError(str(exc))
    registry = default_registry()
    toolbox = Toolbox(data_dir, registry)
    memory = MemoryStore(
        data_dir,
        resolver=lambda ref: index.has_manifest(ref)
        or toolbox.has_config(ref)
        or toolbox.has_job(ref),
    )
    replies = args.replies or _bundled_replies_path()
    try:
        provider = ScriptedProvider.from_file(replies)
    except OSError as exc:
        raise CliError(f"cannot read replies: {exc}", source=replies)

    session_id = args.session_id
    intuition = Intuition(session_id, args.intuition)
    outcome = develop_idea(intuition, index, registry, provider, memory)
    summary: dict[str, Any] = {"session_id": session_id}
    if not isinstance(outcome, Hypothesis):
        summary["outcome"] = "diagnosis"
        summary["diagnosis"] = outcome.to_dict()
        print(json.dumps(summary, sort_keys=True))
        toolbox.shutdown()
        return 0
    summary["outcome"] = "hypothesis"
    summary["hypothesis"] = outcome.to_dict()
    if not args.auto_confirm:
        summary["note"] = "stopped before design; pass --auto-confirm to run end to end"
        print(json.dumps(summary, sort_keys=True))
        toolbox.shutdown()
        return 0

    design = design_experiment(
        outcome,
        registry,
        toolbox,
        seeds=tuple(args.seeds),
        horizon=args.horizon if args.horizon is not None else 24,
        population={"n_households": args.households},
        memory=memory,
        session_id=session_id,
    )
    bundle = execute_design(design, toolbox, memory, session_id)
    if bundle.partial:
        toolbox.shutdown()
        raise CliError("execution incomplete", failures=bundle.failures)
    report = analyze(bundle, outcome, design, memory, session_id)
    summary["design_id"] = design.design_id
    summary["job_ids"] = bundle.job_ids
    summary["verdict"] = report.verdict
    summary["report"] = report.to_dict()
    summary["iteration"] = iterate(report)
    print(json.dumps(summary, sort_keys=True))
    toolbox.shutdown()
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import ServiceState, create_app

    os.makedirs(args.data_dir, exist_ok=True)
    try:
        index = _build_index(args.data_dir, args.corpus)
    except KnowledgeError as exc:
        raise CliError(str(exc))
    provider = None
    if args.replies:
        try:
            provider = ScriptedProvider.from_file(args.replies)
        except OSError as exc:
            raise CliError(f"cannot read replies: {exc}", source=args.replies)
    state = ServiceState(args.data_dir, index=index, provider=provider)
    app = create_app(state)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except SystemExit as exc:
        if exc.code:
            raise CliError(f"server failed to start on port {args.port}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="econlab")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--data-dir", default=DEFAULT_DATA_DIR)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--corpus", help="JSON-lines corpus to (re)index at startup")
    p.add_argument("--replies", help="scripted provider replies, one per line")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("index", help="build the literature index")
    p.add_argument("--corpus", help="JSON-lines corpus path (bundled sample if omitted)")
    p.add_argument("--data-dir", default=DEFAULT_DATA_DIR)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("run-sim", help="run one simulation")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--out", default="result.json")
    p.set_defaults(func=cmd_run_sim)

    p = sub.add_parser("workflow", help="drive a scripted research session")
    p.add_argument("--intuition", required=True)
    p.add_argument("--replies", help="scripted provider replies (bundled script if omitted)")
    p.add_argument("--data-dir", default=DEFAULT_DATA_DIR)
    p.add_argument("--corpus")
    p.add_argument("--auto-confirm", action="store_true")
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3])
    p.add_argument("--households", type=int, default=5)
    p.add_argument("--session-id", default="workflow")
    p.set_defaults(func=cmd_workflow)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        sys.stderr.write(json.dumps(exc.payload, sort_keys=True) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
