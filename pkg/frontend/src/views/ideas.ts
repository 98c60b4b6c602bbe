/**
 * Ideas view: the retrieved context grouped by document, the candidate
 * hypothesis (levers, metrics, mechanism) or the feasibility diagnosis that
 * replaced it.
 */

import type { Direction, ManifestDoc, SessionDoc, ViolationDoc } from "../types.js";

export interface RetrievedChunkView {
  seq: number;
  score: number;
}

export interface DocumentGroupView {
  docId: string;
  hits: RetrievedChunkView[];
}

export interface LeverPlanView {
  name: string;
  control: unknown;
  treatment: unknown;
}

export interface MetricPlanView {
  name: string;
  direction: Direction;
}

export interface IdeasViewModel {
  status: "placeholder" | "diagnosis" | "hypothesis";
  intuition: string | null;
  documents: DocumentGroupView[];
  statement: string | null;
  levers: LeverPlanView[];
  metrics: MetricPlanView[];
  mechanism: string[];
  evidence: string[];
  violations: ViolationDoc[];
  proxySuggestion: string | null;
  /** confirm-hypothesis only; absent for diagnoses and past the idea stage */
  confirmEnabled: boolean;
}

const PLACEHOLDER: IdeasViewModel = {
  status: "placeholder",
  intuition: null,
  documents: [],
  statement: null,
  levers: [],
  metrics: [],
  mechanism: [],
  evidence: [],
  violations: [],
  proxySuggestion: null,
  confirmEnabled: false,
};

export function buildIdeasView(
  session: SessionDoc | null,
  manifests: ManifestDoc[] = [],
): IdeasViewModel {
  if (!session || session.intuition === null) {
    return { ...PLACEHOLDER };
  }
  const documents = groupHits(manifests);
  if (session.diagnosis) {
    return {
      ...PLACEHOLDER,
      status: "diagnosis",
      intuition: session.intuition,
      documents,
      violations: session.diagnosis.violations,
      proxySuggestion: session.diagnosis.proxy_suggestion,
    };
  }
  if (session.hypothesis) {
    const hypothesis = session.hypothesis;
    return {
      status: "hypothesis",
      intuition: session.intuition,
      documents,
      statement: hypothesis.statement,
      levers: hypothesis.independent_levers.map(([name, control, treatment]) => ({
        name,
        control,
        treatment,
      })),
      metrics: hypothesis.dependent_metrics.map(([name, direction]) => ({ name, direction })),
      mechanism: [...hypothesis.mechanism_chain],
      evidence: [...hypothesis.evidence],
      violations: [],
      proxySuggestion: null,
      confirmEnabled: session.stage === "idea",
    };
  }
  return { ...PLACEHOLDER, intuition: session.intuition, documents };
}

/** Flatten manifests into one group per document, in first-hit rank order. */
export function groupHits(manifests: ManifestDoc[]): DocumentGroupView[] {
  const groups = new Map<string, RetrievedChunkView[]>();
  for (const manifest of manifests) {
    for (const [docId, seq, score] of manifest.hits) {
      const bucket = groups.get(docId);
      if (bucket) {
        bucket.push({ seq, score });
      } else {
        groups.set(docId, [{ seq, score }]);
      }
    }
  }
  return [...groups.entries()].map(([docId, hits]) => ({ docId, hits }));
}
