/**
 * Thin HTTP client for the experiment service.
 *
 * Every canvas mutation goes through here; the UI never touches server state
 * by any other route. Mutating calls accept an optional request id so a retry
 * replays the stored response instead of repeating the side effect.
 */

import type {
  ConfirmHypothesisResponse,
  ExecuteResponse,
  IntuitionOutcome,
  JobStatusDoc,
  LogEntryDoc,
  ManifestDoc,
  MemoryRecordDoc,
  RegistryInfo,
  ResultsPayload,
  SessionDoc,
  SessionSummary,
  ToolResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
    readonly payload?: unknown,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

function detailOf(payload: unknown): string | undefined {
  if (payload && typeof payload === "object" && "detail" in payload) {
    const detail = (payload as { detail: unknown }).detail;
    if (typeof detail === "string") return detail;
  }
  return undefined;
}

function withRequestId(body: Record<string, unknown>, requestId?: string) {
  return requestId === undefined ? body : { ...body, request_id: requestId };
}

export interface ConfirmHypothesisOptions {
  seeds?: number[];
  horizon?: number;
  population?: Record<string, number>;
}

export class ApiClient {
  readonly baseUrl: string;
  private readonly fetchImpl: typeof fetch;

  constructor(baseUrl: string, fetchImpl: typeof fetch = fetch) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? undefined : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    let payload: unknown;
    if (text) {
      try {
        payload = JSON.parse(text);
      } catch {
        payload = text;
      }
    }
    if (!response.ok) {
      const message = detailOf(payload) ?? `${response.status} ${response.statusText}`;
      throw new ApiError(response.status, message, payload);
    }
    return payload as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("GET", "/health");
  }

  registry(): Promise<RegistryInfo> {
    return this.request("GET", "/registry");
  }

  createSession(requestId?: string): Promise<{ session_id: string; stage: string }> {
    return this.request("POST", "/sessions", withRequestId({}, requestId));
  }

  listSessions(): Promise<{ sessions: SessionSummary[] }> {
    return this.request("GET", "/sessions");
  }

  getSession(sessionId: string): Promise<SessionDoc> {
    return this.request("GET", `/sessions/${sessionId}`);
  }

  submitIntuition(sessionId: string, text: string, requestId?: string): Promise<IntuitionOutcome> {
    return this.request("POST", `/sessions/${sessionId}/intuition`, withRequestId({ text }, requestId));
  }

  confirmHypothesis(
    sessionId: string,
    options: ConfirmHypothesisOptions = {},
    requestId?: string,
  ): Promise<ConfirmHypothesisResponse> {
    return this.request(
      "POST",
      `/sessions/${sessionId}/confirm-hypothesis`,
      withRequestId({ ...options }, requestId),
    );
  }

  confirmDesign(sessionId: string, requestId?: string): Promise<{ stage: string }> {
    return this.request("POST", `/sessions/${sessionId}/confirm-design`, withRequestId({}, requestId));
  }

  execute(sessionId: string, requestId?: string): Promise<ExecuteResponse> {
    return this.request("POST", `/sessions/${sessionId}/execute`, withRequestId({}, requestId));
  }

  memory(sessionId: string): Promise<{ records: MemoryRecordDoc[] }> {
    return this.request("GET", `/sessions/${sessionId}/memory`);
  }

  results(sessionId: string): Promise<ResultsPayload> {
    return this.request("GET", `/sessions/${sessionId}/results`);
  }

  manifest(manifestId: string): Promise<ManifestDoc> {
    return this.request("GET", `/manifests/${manifestId}`);
  }

  jobStatus(jobId: string): Promise<JobStatusDoc> {
    return this.request("GET", `/jobs/${jobId}`);
  }

  jobLogs(jobId: string): Promise<{ entries: LogEntryDoc[] }> {
    return this.request("GET", `/jobs/${jobId}/logs`);
  }

  callTool(
    tool: string,
    args: Record<string, unknown> = {},
    id: number | string | null = null,
  ): Promise<ToolResponse> {
    return this.request("POST", "/tool", { id, tool, args });
  }
}
