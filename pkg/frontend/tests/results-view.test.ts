import { describe, expect, it } from "vitest";

import { buildResultsView } from "../src/views/results.js";
import type { ResultsPayload } from "../src/types.js";
import { fixtures } from "./helpers.js";

const results = fixtures.results();

describe("results view", () => {
  it("draws one chart per pre-registered metric", () => {
    const view = buildResultsView(results);
    expect(view.status).toBe("ready");
    expect(view.charts.map((chart) => chart.metric)).toEqual([
      "total_consumption",
      "avg_income",
      "avg_wealth",
    ]);
    for (const chart of view.charts) {
      const means = chart.traces.filter((trace) => trace.kind === "mean");
      expect(means.map((trace) => trace.group)).toEqual(["control", "treatment"]);
      const seeds = chart.traces.filter((trace) => trace.kind === "seed");
      expect(seeds).toHaveLength(6); // 2 groups x 3 seeds
      expect(chart.seedTracesToggleable).toBe(true);
      for (const trace of chart.traces) {
        expect(trace.values).toHaveLength(24);
      }
    }
  });

  it("takes chart means from the served aggregates untouched", () => {
    const view = buildResultsView(results);
    const chart = view.charts.find((c) => c.metric === "total_consumption")!;
    const mean = chart.traces.find((t) => t.kind === "mean" && t.group === "treatment")!;
    expect(mean.values).toEqual(results.aggregates["treatment"]["total_consumption"]);
    const seed2 = chart.traces.find((t) => t.kind === "seed" && t.group === "control" && t.seed === 2)!;
    expect(seed2.values).toEqual(results.results["control:2"].artifact!.metrics["total_consumption"]);
  });

  it("copies the numeric panels from the report verbatim", () => {
    const view = buildResultsView(results);
    const report = results.report!;
    expect(view.panels).toHaveLength(3);
    for (const panel of view.panels) {
      const source = report.per_metric[panel.metric];
      expect(panel.controlMean).toBe(source.control_mean);
      expect(panel.treatmentMean).toBe(source.treatment_mean);
      expect(panel.relativeDiff).toBe(source.relative_diff);
      expect(panel.expectedDirection).toBe(source.expected_direction);
      expect(panel.directionMatch).toBe(source.direction_match);
      expect(panel.perSeedDiff).toEqual(source.per_seed_diff);
    }
    expect(view.verdict).toBe(report.verdict);
  });

  it("offers the complete action on a supported verdict", () => {
    const view = buildResultsView(results);
    expect(view.verdict).toBe("supported");
    expect(view.actions).toEqual({ iterate: false, complete: true });
    expect(view.nextDirections).toEqual([]);
  });

  it("lists next directions with iterate on an insufficient verdict", () => {
    const insufficient: ResultsPayload = {
      ...results,
      report: {
        ...results.report!,
        verdict: "insufficient",
        next_directions: ["add replications beyond 3 seeds"],
      },
      iteration: { status: "draft", intuition_draft: "try a stronger treatment" },
    };
    const view = buildResultsView(insufficient);
    expect(view.verdict).toBe("insufficient");
    expect(view.actions).toEqual({ iterate: true, complete: false });
    expect(view.nextDirections).toEqual(["add replications beyond 3 seeds"]);
  });

  it("summarizes failures instead of charting a partial bundle", () => {
    const partial: ResultsPayload = {
      stage: "execution",
      report: null,
      iteration: null,
      results: {
        "control:1": results.results["control:1"],
        "treatment:1": { job_id: "job-9", state: "failed" },
      },
      aggregates: { control: results.aggregates["control"] },
    };
    const view = buildResultsView(partial);
    expect(view.status).toBe("failed");
    expect(view.charts).toEqual([]);
    expect(view.panels).toEqual([]);
    expect(view.failures).toEqual([{ key: "treatment:1", jobId: "job-9", state: "failed" }]);
    expect(view.actions).toEqual({ iterate: false, complete: false });
  });

  it("renders a placeholder before any results exist", () => {
    expect(buildResultsView(null).status).toBe("placeholder");
  });
});
