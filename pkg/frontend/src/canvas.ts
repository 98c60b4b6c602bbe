/**
 * The research canvas: a pure view over the latest session snapshot plus the
 * local chat transcript. Workflow tabs switch between the ideas,
 * configuration and results views; action availability mirrors the server's
 * stage gates (the server still has the last word).
 */

import type { ManifestDoc, ResultsPayload, SessionDoc } from "./types.js";
import { buildConfigView, type ConfigTableView } from "./views/config.js";
import { buildIdeasView, type IdeasViewModel } from "./views/ideas.js";
import { buildResultsView, type ResultsViewModel } from "./views/results.js";

export type CanvasTab = "ideas" | "configuration" | "results";

export interface ChatEntry {
  role: "user" | "assistant" | "note";
  text: string;
  at: number;
}

export type PendingConfirmation = "hypothesis" | "design" | "iterate" | null;

export interface CanvasActions {
  submitIntuition: boolean;
  confirmHypothesis: boolean;
  confirmDesign: boolean;
  execute: boolean;
  iterate: boolean;
}

export interface CanvasViewModel {
  activeTab: CanvasTab;
  stage: string | null;
  transcript: ChatEntry[];
  pending: PendingConfirmation;
  actions: CanvasActions;
  ideas: IdeasViewModel;
  configuration: ConfigTableView | null;
  results: ResultsViewModel;
}

const INTUITION_STAGES = new Set(["idea", "analysis", "complete"]);

export function availableActions(session: SessionDoc | null): CanvasActions {
  const stage = session?.stage ?? null;
  return {
    submitIntuition: stage !== null && INTUITION_STAGES.has(stage),
    confirmHypothesis: stage === "idea" && Boolean(session?.hypothesis),
    confirmDesign: stage === "design",
    // the only path to execution is through a confirmed design
    execute: stage === "execution",
    iterate: session?.iteration?.status === "draft",
  };
}

export function pendingConfirmation(session: SessionDoc | null): PendingConfirmation {
  if (!session) return null;
  if (session.stage === "idea" && session.hypothesis) return "hypothesis";
  if (session.stage === "design") return "design";
  if (session.stage === "analysis" && session.iteration?.status === "draft") return "iterate";
  return null;
}

export interface CanvasInputs {
  manifests?: ManifestDoc[];
  resultsPayload?: ResultsPayload | null;
}

export function buildCanvas(
  session: SessionDoc | null,
  transcript: ChatEntry[],
  activeTab: CanvasTab = "ideas",
  inputs: CanvasInputs = {},
): CanvasViewModel {
  return {
    activeTab,
    stage: session?.stage ?? null,
    transcript: transcript.map((entry) => ({ ...entry })),
    pending: pendingConfirmation(session),
    actions: availableActions(session),
    ideas: buildIdeasView(session, inputs.manifests ?? []),
    configuration: session?.design ? buildConfigView(session.design) : null,
    results: buildResultsView(inputs.resultsPayload ?? null),
  };
}
