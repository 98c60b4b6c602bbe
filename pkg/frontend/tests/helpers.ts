import { readFileSync } from "node:fs";

import type {
  DesignDoc,
  ManifestDoc,
  ResultsPayload,
  SessionDoc,
} from "../src/types.js";

function load<T>(name: string): T {
  const url = new URL(`./fixtures/${name}`, import.meta.url);
  return JSON.parse(readFileSync(url, "utf8")) as T;
}

/** Captured responses from a live service run; see fixtures/capture.py. */
export const fixtures = {
  design: () => load<DesignDoc>("design.json"),
  hypothesisSession: () => load<SessionDoc>("session-hypothesis.json"),
  diagnosisSession: () => load<SessionDoc>("session-diagnosis.json"),
  manifest: () => load<ManifestDoc>("manifest.json"),
  results: () => load<ResultsPayload>("results.json"),
};
