"""Three-stage research pipeline.

develop_idea turns a coarse intuition plus retrieved literature into either a
Hypothesis constrained to simulator levers/metrics or a FeasibilityDiagnosis
naming what the simulator cannot express. design_experiment builds a
control/treatment design that changes exactly the declared levers.
execute_design fans jobs out through the toolbox; analyze applies the
pre-registered metrics and a direction + cross-seed sign-consistency verdict;
iterate either closes the session or drafts a revised intuition for the user.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field
from typing import Any, Optional

from .behavior import call_with_timeout
from .econ.config import POPULATION_FIELDS, resolve_config
from .econ.registry import ParameterRegistry
from .knowledge import KnowledgeIndex
from .memory import MemoryStore
from .toolbox import Toolbox, ToolError

DEFAULT_SEEDS = (1, 2, 3)
DEFAULT_HORIZON = 24
DEFAULT_RETRIEVAL_K = 8
PROVIDER_RETRIES = 2
# metrics summed over the horizon; everything else is read at the final tick
FLOW_METRICS = ("total_consumption", "avg_income")

VIOLATION_KINDS = ("missing_variable", "unsupported_intervention", "inconsistent_assumption")


class OrchestratorError(ValueError):
    pass


@dataclass
class Intuition:
    session_id: str
    text: str

    def __post_init__(self):
        if not self.text.strip():
            raise OrchestratorError("intuition text must be non-empty")


@dataclass
class Hypothesis:
    statement: str
    independent_levers: list[tuple[str, Any, Any]]  # (name, control, treatment)
    dependent_metrics: list[tuple[str, str]]  # (name, direction)
    mechanism_chain: list[str]
    evidence: list[str]  # manifest ids

    def to_dict(self) -> dict[str, Any]:
        return {
            "statement": self.statement,
            "independent_levers": [list(t) for t in self.independent_levers],
            "dependent_metrics": [list(t) for t in self.dependent_metrics],
            "mechanism_chain": self.mechanism_chain,
            "evidence": self.evidence,
        }

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "Hypothesis":
        return cls(
            statement=raw["statement"],
            independent_levers=[tuple(t) for t in raw["independent_levers"]],
            dependent_metrics=[tuple(t) for t in raw["dependent_metrics"]],
            mechanism_chain=list(raw.get("mechanism_chain", [])),
            evidence=list(raw.get("evidence", [])),
        )


@dataclass
class Violation:
    kind: str
    subject: str
    detail: str

    def to_dict(self) -> dict[str, str]:
        return {"kind": self.kind, "subject": self.subject, "detail": self.detail}


@dataclass
class FeasibilityDiagnosis:
    violations: list[Violation]
    proxy_suggestion: Optional[str] = None

    def __post_init__(self):
        if not self.violations:
            raise OrchestratorError("a diagnosis needs at least one violation")
        if self.proxy_suggestion is not None and not self.proxy_suggestion.startswith("PROXY:"):
            self.proxy_suggestion = "PROXY: " + self.proxy_suggestion

    def to_dict(self) -> dict[str, Any]:
        return {
            "violations": [v.to_dict() for v in self.violations],
            "proxy_suggestion": self.proxy_suggestion,
        }


@dataclass
class ExperimentDesign:
    design_id: str
    groups: list[tuple[str, dict[str, Any]]]  # (name, full lever map); first is control
    declared_interventions: set[str]
    metrics: list[str]
    horizon: int
    seeds: list[int]
    population: dict[str, int]
    config_hashes: dict[str, dict[int, str]] = field(default_factory=dict)

    @property
    def replications(self) -> int:
        return len(self.seeds)

    def group_levers(self, name: str) -> dict[str, Any]:
        for group, levers in self.groups:
            if group == name:
                return levers
        raise OrchestratorError(f"no group named {name!r}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "design_id": self.design_id,
            "groups": [[name, levers] for name, levers in self.groups],
            "declared_interventions": sorted(self.declared_interventions),
            "metrics": self.metrics,
            "horizon": self.horizon,
            "seeds": self.seeds,
            "replications": self.replications,
            "population": self.population,
            "config_hashes": {
                g: {str(s): h for s, h in per_seed.items()}
                for g, per_seed in self.config_hashes.items()
            },
        }

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "ExperimentDesign":
        return cls(
            design_id=raw["design_id"],
            groups=[(g, dict(levers)) for g, levers in raw["groups"]],
            declared_interventions=set(raw["declared_interventions"]),
            metrics=list(raw["metrics"]),
            horizon=raw["horizon"],
            seeds=list(raw["seeds"]),
            population=dict(raw["population"]),
            config_hashes={
                g: {int(s): h for s, h in per_seed.items()}
                for g, per_seed in raw.get("config_hashes", {}).items()
            },
        )


@dataclass
class ResultBundle:
    design_id: str
    results: dict[str, dict[str, Any]]  # "group:seed" -> exported artifact
    job_ids: dict[str, str]  # "group:seed" -> job id
    failures: list[dict[str, Any]]

    @property
    def partial(self) -> bool:
        return bool(self.failures)

    def to_dict(self) -> dict[str, Any]:
        return {
            "design_id": self.design_id,
            "results": self.results,
            "job_ids": self.job_ids,
            "failures": self.failures,
            "partial": self.partial,
        }


@dataclass
class AnalysisReport:
    per_metric: dict[str, dict[str, Any]]
    verdict: str
    next_directions: list[str]

    def to_dict(self) -> dict[str, Any]:
        return {
            "per_metric": self.per_metric,
            "verdict": self.verdict,
            "next_directions": self.next_directions,
        }


# -- idea development --------------------------------------------------------


def elicitation_prompt(
    intuition: Intuition, registry: ParameterRegistry, evidence_chunks: list[str]
) -> str:
    lever_lines = []
    for name, spec in registry.levers.items():
        bounds = f"range {spec.range[0]}..{spec.range[1]}, " if spec.range else ""
        lever_lines.append(f"- {name} ({spec.kind}, {bounds}default {spec.default})")
    metric_lines = [f"- {name}" for name in registry.metrics]
    evidence = "\n\n".join(evidence_chunks) if evidence_chunks else "(no retrieved context)"
    return (
        "You translate a research intuition into a simulator experiment.\n"
        "The simulator supports ONLY these policy levers:\n"
        + "\n".join(lever_lines)
        + "\nand ONLY these outcome metrics:\n"
        + "\n".join(metric_lines)
        + "\n\nRetrieved literature context:\n"
        + evidence
        + "\n\nIntuition: "
        + intuition.text
        + "\n\nReply with exactly these line forms:\n"
        "HYPOTHESIS=<one sentence>\n"
        "LEVER=<name> control=<value> treatment=<value>\n"
        "METRIC=<name> direction=increase|decrease\n"
        "MECHANISM=<one step of the causal chain> (repeatable)\n"
        "Use only names from the lists above."
    )


def _parse_scalar(token: str) -> Any:
    if token == "true":
        return True
    if token == "false":
        return False
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return float(token)
    except ValueError:
        return token


def parse_elicitation(text: str) -> dict[str, Any]:
    """Extract the proposal lines; no validation happens here."""
    statement = ""
    levers: list[tuple[str, Any, Any]] = []
    metrics: list[tuple[str, str]] = []
    mechanism: list[str] = []
    for raw_line in text.splitlines():
        line = raw_line.strip()
        if line.startswith("HYPOTHESIS="):
            statement = line[len("HYPOTHESIS=") :].strip()
        elif line.startswith("LEVER="):
            rest = line[len("LEVER=") :].strip()
            parts = rest.split()
            if not parts:
                continue
            name = parts[0]
            control = treatment = None
            for part in parts[1:]:
                if part.startswith("control="):
                    control = _parse_scalar(part[len("control=") :])
                elif part.startswith("treatment="):
                    treatment = _parse_scalar(part[len("treatment=") :])
            levers.append((name, control, treatment))
        elif line.startswith("METRIC="):
            rest = line[len("METRIC=") :].strip()
            parts = rest.split()
            if not parts:
                continue
            direction = ""
            for part in parts[1:]:
                if part.startswith("direction="):
                    direction = part[len("direction=") :]
            metrics.append((parts[0], direction))
        elif line.startswith("MECHANISM="):
            mechanism.append(line[len("MECHANISM=") :].strip())
    return {
        "statement": statement,
        "levers": levers,
        "metrics": metrics,
        "mechanism": mechanism,
    }


def check_capability_boundary(
    proposal: dict[str, Any], registry: ParameterRegistry
) -> list[Violation]:
    violations: list[Violation] = []
    for name, control, treatment in proposal["levers"]:
        if not registry.has_lever(name):
            violations.append(
                Violation("missing_variable", name, f"lever {name!r} is not in the registry")
            )
            continue
        spec = registry.levers[name]
        for label, value in (("control", control), ("treatment", treatment)):
            if value is None:
                violations.append(
                    Violation(
                        "unsupported_intervention", name, f"no {label} value given for {name!r}"
                    )
                )
                continue
            try:
                spec.normalize(value)
            except (ValueError, TypeError) as exc:
                violations.append(Violation("unsupported_intervention", name, str(exc)))
        if control is not None and treatment is not None and control == treatment:
            violations.append(
                Violation(
                    "unsupported_intervention",
                    name,
                    f"control and treatment values for {name!r} are identical",
                )
            )
    for name, direction in proposal["metrics"]:
        if not registry.has_metric(name):
            violations.append(
                Violation("missing_variable", name, f"metric {name!r} is not in the catalogue")
            )
        elif direction not in ("increase", "decrease"):
            violations.append(
                Violation(
                    "unsupported_intervention",
                    name,
                    f"direction {direction!r} must be increase or decrease",
                )
            )
    if not proposal["levers"]:
        violations.append(
            Violation("unsupported_intervention", "(none)", "no lever intervention proposed")
        )
    if not proposal["metrics"]:
        violations.append(
            Violation("missing_variable", "(none)", "no dependent metric proposed")
        )
    return violations


def develop_idea(
    intuition: Intuition,
    index: KnowledgeIndex,
    registry: ParameterRegistry,
    provider,
    memory: Optional[MemoryStore] = None,
    k: int = DEFAULT_RETRIEVAL_K,
    retries: int = PROVIDER_RETRIES,
) -> Hypothesis | FeasibilityDiagnosis:
    manifest = index.search(intuition.text, k=k, session_id=intuition.session_id)
    chunks = [index.get_chunk(d, s).text for d, s, _ in manifest.hits]
    prompt = elicitation_prompt(intuition, registry, chunks)

    reply = None
    last_error: Optional[Exception] = None
    for _ in range(retries + 1):
        try:
            reply = call_with_timeout(provider, prompt)
            break
        except Exception as exc:
            last_error = exc
    if reply is None:
        outcome: Hypothesis | FeasibilityDiagnosis = FeasibilityDiagnosis(
            violations=[
                Violation(
                    "inconsistent_assumption",
                    "provider",
                    f"provider transport failed after {retries + 1} attempts: {last_error}",
                )
            ]
        )
    else:
        proposal = parse_elicitation(reply)
        violations = check_capability_boundary(proposal, registry)
        if violations:
            proxy = None
            if not proposal["levers"]:
                proxy = "PROXY: closest supported levers: " + ", ".join(sorted(registry.levers))
            outcome = FeasibilityDiagnosis(violations=violations, proxy_suggestion=proxy)
        else:
            levers = [
                (name, registry.levers[name].normalize(c), registry.levers[name].normalize(t))
                for name, c, t in proposal["levers"]
            ]
            outcome = Hypothesis(
                statement=proposal["statement"] or intuition.text,
                independent_levers=levers,
                dependent_metrics=proposal["metrics"],
                mechanism_chain=proposal["mechanism"],
                evidence=[manifest.manifest_id],
            )

    if memory is not None:
        is_hypothesis = isinstance(outcome, Hypothesis)
        memory.append(
            intuition.session_id,
            stage="idea",
            kind="theoretical_context",
            body={
                "intuition": intuition.text,
                "outcome": "hypothesis" if is_hypothesis else "diagnosis",
                **({"hypothesis": outcome.to_dict()} if is_hypothesis else {"diagnosis": outcome.to_dict()}),
            },
            refs=[manifest.manifest_id],
        )
    return outcome


# -- experimental design -----------------------------------------------------


def design_experiment(
    hypothesis: Hypothesis,
    registry: ParameterRegistry,
    toolbox: Toolbox,
    seeds: tuple[int, ...] = DEFAULT_SEEDS,
    horizon: int = DEFAULT_HORIZON,
    population: Optional[dict[str, int]] = None,
    memory: Optional[MemoryStore] = None,
    session_id: Optional[str] = None,
) -> ExperimentDesign:
    if len(set(seeds)) != len(seeds):
        raise OrchestratorError("seeds must be distinct")
    population = dict(population or {})
    for key in population:
        if key not in POPULATION_FIELDS:
            raise OrchestratorError(f"unknown population field {key!r}")

    control_levers = registry.defaults()
    treatment_levers = registry.defaults()
    for name, control_value, treatment_value in hypothesis.independent_levers:
        control_levers[name] = control_value
        treatment_levers[name] = treatment_value
    groups = [("control", control_levers), ("treatment", treatment_levers)]

    design = ExperimentDesign(
        design_id=f"design-{uuid.uuid4().hex[:8]}",
        groups=groups,
        declared_interventions={name for name, _, _ in hypothesis.independent_levers},
        metrics=[name for name, _ in hypothesis.dependent_metrics],
        horizon=horizon,
        seeds=list(seeds),
        population=population,
    )
    problems = validate_minimal_change(design)
    if problems:
        raise OrchestratorError("design violates minimal change: " + "; ".join(problems))

    for name, levers in design.groups:
        digest = toolbox.register_config({"levers": levers, **population})
        design.config_hashes[name] = {seed: digest for seed in design.seeds}

    if memory is not None and session_id is not None:
        refs = sorted({h for per_seed in design.config_hashes.values() for h in per_seed.values()})
        memory.append(
            session_id,
            stage="design",
            kind="experiment_spec",
            body={"design": design.to_dict(), "hypothesis": hypothesis.to_dict()},
            refs=refs,
        )
    return design


def validate_minimal_change(design: ExperimentDesign) -> list[str]:
    """Empty list means the design is fine; otherwise exact violation texts."""
    if len(design.groups) < 2:
        raise OrchestratorError("a design needs a control and at least one treatment group")
    _, control = design.groups[0]
    problems: list[str] = []
    for name, levers in design.groups[1:]:
        changed = {k for k in levers if levers.get(k) != control.get(k)}
        changed |= {k for k in control if k not in levers}
        for extra in sorted(changed - design.declared_interventions):
            problems.append(f"extra undeclared change: {extra}")
        for missing in sorted(design.declared_interventions - changed):
            problems.append(f"declared but unchanged: {missing}")
    return problems


# -- execution ---------------------------------------------------------------


def execute_design(
    design: ExperimentDesign,
    toolbox: Toolbox,
    memory: Optional[MemoryStore] = None,
    session_id: Optional[str] = None,
    timeout: float = 300.0,
) -> ResultBundle:
    problems = validate_minimal_change(design)
    if problems:
        raise OrchestratorError("refusing to execute an invalid design: " + "; ".join(problems))

    job_ids: dict[str, str] = {}
    for group, _ in design.groups:
        for seed in design.seeds:
            digest = design.config_hashes[group][seed]
            job_ids[f"{group}:{seed}"] = toolbox.start_job(digest, seed, design.horizon)

    results: dict[str, dict[str, Any]] = {}
    failures: list[dict[str, Any]] = []
    for key, job_id in job_ids.items():
        group, seed_text = key.split(":")
        state = toolbox.wait(job_id, timeout=timeout)
        if state == "succeeded":
            results[key] = toolbox.export_results(job_id)
        else:
            status = toolbox.poll_status(job_id)
            failures.append(
                {
                    "group": group,
                    "seed": int(seed_text),
                    "job_id": job_id,
                    "category": "execution_failure",
                    "message": status.get("error") or "job failed",
                }
            )
        if memory is not None and session_id is not None:
            memory.append(
                session_id,
                stage="execution",
                kind="execution_trace",
                body={"group": group, "seed": int(seed_text), "job_id": job_id, "state": state},
                refs=[job_id, design.config_hashes[group][int(seed_text)]],
            )
    return ResultBundle(
        design_id=design.design_id, results=results, job_ids=job_ids, failures=failures
    )


# -- analysis ----------------------------------------------------------------


def _aggregate(metric: str, series: list[float]) -> float:
    if metric in FLOW_METRICS:
        return float(sum(series))
    return float(series[-1])


def analyze(
    bundle: ResultBundle,
    hypothesis: Hypothesis,
    design: ExperimentDesign,
    memory: Optional[MemoryStore] = None,
    session_id: Optional[str] = None,
    evidence: Optional[list[str]] = None,
) -> AnalysisReport:
    if bundle.partial:
        raise OrchestratorError(
            "cannot analyze a partial bundle; failed jobs: "
            + ", ".join(f["job_id"] for f in bundle.failures)
        )
    directions = dict(hypothesis.dependent_metrics)
    per_metric: dict[str, dict[str, Any]] = {}
    all_match = True
    all_opposite = True
    for metric in design.metrics:
        expected = directions[metric]
        control_vals: list[float] = []
        treatment_vals: list[float] = []
        for seed in design.seeds:
            for group, sink in (("control", control_vals), ("treatment", treatment_vals)):
                artifact = bundle.results[f"{group}:{seed}"]
                if metric not in artifact["metrics"]:
                    raise OrchestratorError(f"metric {metric!r} absent from job results")
                sink.append(_aggregate(metric, artifact["metrics"][metric]))
        control_mean = sum(control_vals) / len(control_vals)
        treatment_mean = sum(treatment_vals) / len(treatment_vals)
        diff = treatment_mean - control_mean
        relative = diff / abs(control_mean) if control_mean != 0 else None
        seed_diffs = [t - c for c, t in zip(control_vals, treatment_vals)]
        sign_consistent = all(d > 0 for d in seed_diffs) or all(d < 0 for d in seed_diffs)
        wanted = 1 if expected == "increase" else -1
        direction_match = diff * wanted > 0
        matches_everywhere = sign_consistent and all(d * wanted > 0 for d in seed_diffs)
        opposite_everywhere = sign_consistent and all(d * wanted < 0 for d in seed_diffs)
        all_match = all_match and direction_match and matches_everywhere
        all_opposite = all_opposite and opposite_everywhere
        per_metric[metric] = {
            "aggregation": "cumulative" if metric in FLOW_METRICS else "final_tick",
            "control_mean": control_mean,
            "treatment_mean": treatment_mean,
            "relative_diff": relative,
            "expected_direction": expected,
            "direction_match": direction_match,
            "sign_consistent_across_seeds": sign_consistent,
            "per_seed_diff": seed_diffs,
        }
    if all_match:
        verdict = "supported"
        next_directions: list[str] = []
    elif all_opposite:
        verdict = "refuted"
        next_directions = ["revisit the mechanism: every metric moved against expectation"]
    else:
        verdict = "insufficient"
        next_directions = [
            f"add replications beyond {len(design.seeds)} seeds",
            f"extend the horizon beyond {design.horizon} months",
            "try stronger treatment values for "
            + ", ".join(sorted(design.declared_interventions)),
        ]
    report = AnalysisReport(per_metric=per_metric, verdict=verdict, next_directions=next_directions)

    if memory is not None and session_id is not None:
        refs = sorted(
            set(bundle.job_ids.values())
            | {h for per_seed in design.config_hashes.values() for h in per_seed.values()}
            | set(evidence or hypothesis.evidence)
        )
        memory.append(
            session_id,
            stage="analysis",
            kind="outcome_synthesis",
            body={"report": report.to_dict(), "design_id": design.design_id},
            refs=refs,
        )
    return report


def iterate(report: AnalysisReport) -> dict[str, Any]:
    """Close out a supported session or draft the next intuition.

    The draft is only a suggestion: rerunning anything requires the user to
    confirm it through the normal stage gates.
    """
    if report.verdict == "supported":
        return {"status": "complete"}
    seed_direction = report.next_directions[0] if report.next_directions else "collect more evidence"
    return {
        "status": "draft",
        "intuition_draft": (
            "Previous experiment was "
            + report.verdict
            + "; revised direction: "
            + seed_direction
        ),
    }


# -- provenance --------------------------------------------------------------


def provenance_closure(
    memory: MemoryStore, session_id: str, start_record_id: int
) -> dict[str, Any]:
    """Walk shared-ref edges from one record until no new refs appear.

    Returns every manifest id, config hash, and job id reachable, plus the
    ids of all memory records visited and whether a stored hypothesis was
    among them.
    """
    records = memory.query(session_id)
    by_id = {r.record_id: r for r in records}
    if start_record_id not in by_id:
        raise OrchestratorError(f"no record #{start_record_id} in session {session_id!r}")
    seen_refs: set[str] = set()
    seen_records: set[int] = set()
    frontier = [start_record_id]
    while frontier:
        rid = frontier.pop()
        if rid in seen_records:
            continue
        seen_records.add(rid)
        new_refs = set(by_id[rid].refs) - seen_refs
        seen_refs |= new_refs
        for other in records:
            if other.record_id not in seen_records and new_refs & set(other.refs):
                frontier.append(other.record_id)
    reached = [by_id[rid] for rid in sorted(seen_records)]
    return {
        "refs": sorted(seen_refs),
        "manifests": sorted(r for r in seen_refs if r.startswith("m-")),
        "job_ids": sorted(r for r in seen_refs if r.startswith("job-")),
        "config_hashes": sorted(
            r for r in seen_refs if not r.startswith(("m-", "job-"))
        ),
        "record_ids": sorted(seen_records),
        "hypothesis_found": any("hypothesis" in r.body for r in reached),
    }
