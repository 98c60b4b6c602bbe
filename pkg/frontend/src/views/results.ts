/**
 * Results view: one time-series chart per pre-registered metric (control vs
 * treatment seed means overlaid, per-seed traces toggleable) plus a numeric
 * panel per metric and the verdict banner.
 *
 * Every number is lifted straight out of the API payload: chart means come
 * from the served aggregates, panel figures from the report. Nothing is
 * recomputed here.
 */

import type { ResultsPayload } from "../types.js";

export interface SeriesTrace {
  label: string;
  group: string;
  kind: "mean" | "seed";
  seed: number | null;
  values: number[];
}

export interface MetricChartView {
  metric: string;
  /** mean traces first (one per group), then the per-seed traces */
  traces: SeriesTrace[];
  seedTracesToggleable: boolean;
}

export interface MetricPanelView {
  metric: string;
  aggregation: string;
  controlMean: number;
  treatmentMean: number;
  relativeDiff: number | null;
  expectedDirection: string;
  directionMatch: boolean;
  signConsistent: boolean;
  perSeedDiff: number[];
}

export interface FailureView {
  key: string; // "group:seed"
  jobId: string;
  state: string;
}

export interface ResultsViewModel {
  status: "placeholder" | "failed" | "ready";
  verdict: string | null;
  charts: MetricChartView[];
  panels: MetricPanelView[];
  nextDirections: string[];
  failures: FailureView[];
  actions: { iterate: boolean; complete: boolean };
}

const EMPTY: ResultsViewModel = {
  status: "placeholder",
  verdict: null,
  charts: [],
  panels: [],
  nextDirections: [],
  failures: [],
  actions: { iterate: false, complete: false },
};

export function buildResultsView(payload: ResultsPayload | null): ResultsViewModel {
  if (!payload) return { ...EMPTY };

  const failures = Object.entries(payload.results)
    .filter(([, entry]) => entry.state === "failed")
    .map(([key, entry]): FailureView => ({ key, jobId: entry.job_id, state: entry.state }));
  if (failures.length > 0) {
    // partial bundles get a failure summary instead of charts
    return { ...EMPTY, status: "failed", failures };
  }

  const report = payload.report;
  if (!report) return { ...EMPTY };

  const metrics = Object.keys(report.per_metric); // pre-registered order
  const charts = metrics.map((metric) => buildChart(metric, payload));
  const panels = metrics.map((metric): MetricPanelView => {
    const source = report.per_metric[metric];
    return {
      metric,
      aggregation: source.aggregation,
      controlMean: source.control_mean,
      treatmentMean: source.treatment_mean,
      relativeDiff: source.relative_diff,
      expectedDirection: source.expected_direction,
      directionMatch: source.direction_match,
      signConsistent: source.sign_consistent_across_seeds,
      perSeedDiff: [...source.per_seed_diff],
    };
  });

  return {
    status: "ready",
    verdict: report.verdict,
    charts,
    panels,
    nextDirections: [...report.next_directions],
    failures: [],
    actions: {
      iterate: payload.iteration?.status === "draft",
      complete: payload.iteration?.status === "complete",
    },
  };
}

function buildChart(metric: string, payload: ResultsPayload): MetricChartView {
  const traces: SeriesTrace[] = [];
  for (const [group, byMetric] of Object.entries(payload.aggregates)) {
    const mean = byMetric[metric];
    if (mean) {
      traces.push({ label: `${group} mean`, group, kind: "mean", seed: null, values: mean });
    }
  }
  let seedTraces = 0;
  for (const [key, entry] of Object.entries(payload.results)) {
    const series = entry.artifact?.metrics[metric];
    if (!series) continue;
    const group = key.slice(0, key.lastIndexOf(":"));
    const seed = entry.artifact!.seed;
    traces.push({ label: `${group} seed ${seed}`, group, kind: "seed", seed, values: series });
    seedTraces += 1;
  }
  return { metric, traces, seedTracesToggleable: seedTraces > 0 };
}
