/**
 * Job progress consumption: the server-sent event stream when it is
 * reachable, plain status polling otherwise. Either path resolves with the
 * terminal status, so callers never have to care which one ran.
 */

import type { JobStatusDoc } from "./types.js";

const TERMINAL_STATES = new Set(["succeeded", "failed"]);

export interface WatchOptions {
  onUpdate?: (status: JobStatusDoc) => void;
  /** polling cadence once the stream is unavailable */
  pollIntervalMs?: number;
  fetchImpl?: typeof fetch;
}

export interface WatchHandle {
  done: Promise<JobStatusDoc>;
  close: () => void;
}

export class WatchClosedError extends Error {
  constructor(jobId: string) {
    super(`watch for ${jobId} closed before the job finished`);
    this.name = "WatchClosedError";
  }
}

export function watchJob(baseUrl: string, jobId: string, options: WatchOptions = {}): WatchHandle {
  const fetchImpl = options.fetchImpl ?? fetch;
  const base = baseUrl.replace(/\/+$/, "");
  const controller = new AbortController();

  const done = (async () => {
    try {
      const final = await streamEvents(
        `${base}/jobs/${jobId}/events`,
        fetchImpl,
        controller.signal,
        options.onUpdate,
      );
      if (final) return final;
    } catch {
      if (controller.signal.aborted) throw new WatchClosedError(jobId);
      // stream unavailable or cut short; the poller takes over
    }
    return pollUntilDone(
      `${base}/jobs/${jobId}`,
      jobId,
      fetchImpl,
      controller.signal,
      options.pollIntervalMs ?? 250,
      options.onUpdate,
    );
  })();

  return { done, close: () => controller.abort() };
}

async function streamEvents(
  url: string,
  fetchImpl: typeof fetch,
  signal: AbortSignal,
  onUpdate?: (status: JobStatusDoc) => void,
): Promise<JobStatusDoc | null> {
  const response = await fetchImpl(url, { signal, headers: { accept: "text/event-stream" } });
  if (!response.ok || !response.body) {
    throw new Error(`event stream unavailable (${response.status})`);
  }
  const reader = response.body.getReader();
  const decoder = new TextDecoder();
  let buffer = "";
  for (;;) {
    const { done, value } = await reader.read();
    if (done) break;
    buffer += decoder.decode(value, { stream: true });
    let cut: number;
    while ((cut = buffer.indexOf("\n\n")) >= 0) {
      const frame = buffer.slice(0, cut);
      buffer = buffer.slice(cut + 2);
      const data = frame
        .split("\n")
        .filter((line) => line.startsWith("data:"))
        .map((line) => line.slice(5).trimStart())
        .join("\n");
      if (!data) continue;
      let status: JobStatusDoc;
      try {
        status = JSON.parse(data) as JobStatusDoc;
      } catch {
        continue; // malformed frame; the poller is the safety net
      }
      onUpdate?.(status);
      if (TERMINAL_STATES.has(status.state)) {
        reader.cancel().catch(() => undefined);
        return status;
      }
    }
  }
  return null; // stream ended without a terminal state
}

async function pollUntilDone(
  url: string,
  jobId: string,
  fetchImpl: typeof fetch,
  signal: AbortSignal,
  intervalMs: number,
  onUpdate?: (status: JobStatusDoc) => void,
): Promise<JobStatusDoc> {
  for (;;) {
    if (signal.aborted) throw new WatchClosedError(jobId);
    const response = await fetchImpl(url);
    if (!response.ok) {
      throw new Error(`job status unavailable (${response.status})`);
    }
    const status = (await response.json()) as JobStatusDoc;
    onUpdate?.(status);
    if (TERMINAL_STATES.has(status.state)) return status;
    await sleep(intervalMs);
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
