/**
 * Wire types for the experiment service API.
 *
 * Field names mirror the JSON payloads byte for byte; nothing here is
 * renamed or reshaped, so a fixture captured from the live server type-checks
 * as-is.
 */

export type Stage = "idea" | "design" | "execution" | "analysis" | "complete";

export type Direction = "increase" | "decrease";

export interface LeverSpec {
  name: string;
  kind: string; // "fraction" | "money" | "boolean"
  range: [number, number] | null;
  default: unknown;
  description: string;
}

export interface RegistryInfo {
  levers: Record<string, LeverSpec>;
  metrics: Record<string, string>; // metric name -> description
}

export interface HypothesisDoc {
  statement: string;
  /** [lever name, control value, treatment value] */
  independent_levers: [string, unknown, unknown][];
  /** [metric name, expected direction] */
  dependent_metrics: [string, Direction][];
  mechanism_chain: string[];
  evidence: string[]; // retrieval manifest ids
}

export interface ViolationDoc {
  kind: string;
  subject: string;
  detail: string;
}

export interface DiagnosisDoc {
  violations: ViolationDoc[];
  proxy_suggestion: string | null;
}

export interface DesignDoc {
  design_id: string;
  /** [group name, full lever map]; the first group is the control */
  groups: [string, Record<string, unknown>][];
  declared_interventions: string[];
  metrics: string[];
  horizon: number;
  seeds: number[];
  replications: number;
  population: Record<string, number>;
  /** group -> seed (as string) -> config hash */
  config_hashes: Record<string, Record<string, string>>;
}

export interface MetricComparison {
  aggregation: "cumulative" | "final_tick";
  control_mean: number;
  treatment_mean: number;
  relative_diff: number | null; // null when the control mean is zero
  expected_direction: Direction;
  direction_match: boolean;
  sign_consistent_across_seeds: boolean;
  per_seed_diff: number[];
}

export interface ReportDoc {
  per_metric: Record<string, MetricComparison>;
  verdict: "supported" | "refuted" | "insufficient";
  next_directions: string[];
}

export interface IterationDoc {
  status: "complete" | "draft";
  intuition_draft?: string;
}

export interface SessionSummary {
  session_id: string;
  stage: Stage;
  created_at: number;
}

export interface SessionDoc {
  session_id: string;
  created_at: number;
  stage: Stage;
  intuition: string | null;
  hypothesis: HypothesisDoc | null;
  diagnosis: DiagnosisDoc | null;
  design: DesignDoc | null;
  job_ids: Record<string, string> | null; // "group:seed" -> job id
  report: ReportDoc | null;
  iteration: IterationDoc | null;
}

export interface ManifestDoc {
  manifest_id: string;
  session_id: string;
  query: string;
  filters: Record<string, unknown>;
  timestamp: number;
  /** [doc id, chunk seq, cosine score] in rank order */
  hits: [string, number, number][];
  short: boolean;
}

export interface MemoryRecordDoc {
  record_id: number;
  session_id: string;
  stage: string;
  kind: string;
  timestamp: number;
  body: Record<string, unknown> | null;
  text: string;
  refs: string[];
}

export type JobState = "queued" | "running" | "succeeded" | "failed";

export interface JobProgress {
  tick: number;
  horizon: number;
}

export interface JobStatusDoc {
  job_id: string;
  state: JobState;
  progress: JobProgress;
  error: string | null;
}

export interface LogEntryDoc {
  ts: number;
  level: string;
  category: string;
  message: string;
}

export interface JobArtifact {
  job_id: string;
  config_hash: string;
  seed: number;
  horizon: number;
  metrics: Record<string, number[]>;
  ledger: unknown[];
}

export interface ResultEntry {
  job_id: string;
  state: JobState;
  artifact?: JobArtifact;
}

export interface ResultsPayload {
  stage: Stage;
  report: ReportDoc | null;
  iteration: IterationDoc | null;
  results: Record<string, ResultEntry>;
  /** group -> metric -> per-tick mean across seeds, computed server-side */
  aggregates: Record<string, Record<string, number[]>>;
}

export type IntuitionOutcome =
  | { kind: "hypothesis"; hypothesis: HypothesisDoc }
  | { kind: "diagnosis"; diagnosis: DiagnosisDoc };

export interface ConfirmHypothesisResponse {
  stage: "design";
  design: DesignDoc;
}

export interface ExecuteResponse {
  stage: Stage;
  job_ids: Record<string, string>;
  report: ReportDoc;
  iteration: IterationDoc;
}

export interface ExecuteFailure {
  group: string;
  seed: number;
  job_id: string;
  category: string;
  message: string;
}

export interface PartialExecution {
  stage: "execution";
  partial: true;
  failures: ExecuteFailure[];
}

export type ToolResponse =
  | { id: unknown; status: "ok"; payload: Record<string, unknown> }
  | { id: unknown; status: "error"; error: { category: string; message: string } };
