/**
 * Drives one research session against the service. Server state changes only
 * through the API calls below; the controller itself just caches the latest
 * snapshot and keeps the chat transcript.
 *
 * Stage gates are enforced twice: refused here before the request goes out,
 * and again by the server, which answers 409 if a stale client tries anyway.
 */

import { ApiClient, ApiError, type ConfirmHypothesisOptions } from "./api.js";
import {
  availableActions,
  buildCanvas,
  type CanvasActions,
  type CanvasTab,
  type CanvasViewModel,
  type ChatEntry,
} from "./canvas.js";
import type {
  DesignDoc,
  DiagnosisDoc,
  ExecuteResponse,
  IntuitionOutcome,
  ManifestDoc,
  ResultsPayload,
  SessionDoc,
} from "./types.js";

export class StageGateError extends Error {
  constructor(
    readonly action: string,
    message: string,
  ) {
    super(message);
    this.name = "StageGateError";
  }
}

export interface ControllerOptions {
  now?: () => number;
  newRequestId?: () => string;
}

export class SessionController {
  private session: SessionDoc | null = null;
  private manifests: ManifestDoc[] = [];
  private resultsPayload: ResultsPayload | null = null;
  private transcript: ChatEntry[] = [];
  private activeTab: CanvasTab = "ideas";
  private readonly now: () => number;
  private readonly newRequestId: () => string;

  constructor(
    private readonly api: ApiClient,
    options: ControllerOptions = {},
  ) {
    this.now = options.now ?? Date.now;
    this.newRequestId = options.newRequestId ?? (() => crypto.randomUUID());
  }

  get sessionId(): string | null {
    return this.session?.session_id ?? null;
  }

  view(): CanvasViewModel {
    return buildCanvas(this.session, this.transcript, this.activeTab, {
      manifests: this.manifests,
      resultsPayload: this.resultsPayload,
    });
  }

  selectTab(tab: CanvasTab): void {
    this.activeTab = tab;
  }

  /** Free-text note shown in the transcript; never leaves the client. */
  note(text: string): void {
    this.transcript.push({ role: "note", text, at: this.now() });
  }

  async start(): Promise<string> {
    const created = await this.api.createSession(this.newRequestId());
    await this.load(created.session_id);
    return created.session_id;
  }

  async load(sessionId: string): Promise<void> {
    this.session = await this.api.getSession(sessionId);
    await this.syncManifests();
  }

  async refresh(): Promise<void> {
    if (!this.session) return;
    this.session = await this.api.getSession(this.session.session_id);
    await this.syncManifests();
  }

  async submitIntuition(text: string): Promise<IntuitionOutcome> {
    const session = this.requireSession();
    this.gate("submitIntuition", `cannot submit an intuition during stage '${session.stage}'`);
    this.transcript.push({ role: "user", text, at: this.now() });
    const outcome = await this.api.submitIntuition(session.session_id, text, this.newRequestId());
    this.transcript.push({
      role: "assistant",
      text:
        outcome.kind === "hypothesis"
          ? outcome.hypothesis.statement
          : describeDiagnosis(outcome.diagnosis),
      at: this.now(),
    });
    await this.refresh();
    return outcome;
  }

  async confirmHypothesis(options: ConfirmHypothesisOptions = {}): Promise<DesignDoc> {
    const session = this.requireSession();
    this.gate("confirmHypothesis", "no confirmable hypothesis in the current stage");
    const response = await this.api.confirmHypothesis(session.session_id, options, this.newRequestId());
    this.transcript.push({
      role: "assistant",
      text: `design ${response.design.design_id} drafted; review the configuration tab`,
      at: this.now(),
    });
    await this.refresh();
    this.activeTab = "configuration";
    return response.design;
  }

  async confirmDesign(): Promise<void> {
    const session = this.requireSession();
    this.gate("confirmDesign", "no unconfirmed design in the current stage");
    await this.api.confirmDesign(session.session_id, this.newRequestId());
    await this.refresh();
  }

  async execute(): Promise<ExecuteResponse> {
    const session = this.requireSession();
    this.gate("execute", "confirm the design before executing");
    try {
      const response = await this.api.execute(session.session_id, this.newRequestId());
      await this.refresh();
      await this.fetchResults();
      this.activeTab = "results";
      return response;
    } catch (error) {
      if (error instanceof ApiError && error.status === 502) {
        // partial execution: resync so the failure summary can render
        await this.refresh();
        await this.fetchResults().catch(() => undefined);
        this.activeTab = "results";
      }
      throw error;
    }
  }

  async fetchResults(): Promise<ResultsPayload> {
    const session = this.requireSession();
    this.resultsPayload = await this.api.results(session.session_id);
    return this.resultsPayload;
  }

  private requireSession(): SessionDoc {
    if (!this.session) {
      throw new StageGateError("load", "no session loaded");
    }
    return this.session;
  }

  private gate(action: keyof CanvasActions, message: string): void {
    if (!availableActions(this.session)[action]) {
      throw new StageGateError(action, message);
    }
  }

  private async syncManifests(): Promise<void> {
    const refs = this.session?.hypothesis?.evidence ?? [];
    const seen = new Set(this.manifests.map((manifest) => manifest.manifest_id));
    for (const ref of refs) {
      if (seen.has(ref)) continue;
      try {
        this.manifests.push(await this.api.manifest(ref));
      } catch {
        // a missing manifest only costs the ideas view its hit list
      }
    }
  }
}

function describeDiagnosis(diagnosis: DiagnosisDoc): string {
  const subjects = diagnosis.violations.map((violation) => violation.subject).join(", ");
  const proxy = diagnosis.proxy_suggestion ? `; ${diagnosis.proxy_suggestion}` : "";
  return `not feasible as stated (${subjects})${proxy}`;
}
