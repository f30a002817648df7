// Thin HTTP client over the session API. No world logic lives here:
// the server is the single source of truth.

import type { MemoryRecordSummary, WireEnvelope } from "./wire.js";

export interface SessionConfig {
  task: string;
  map?: string;
  seed?: number;
  kernel?: Record<string, number>;
  memory?: Record<string, number>;
}

export interface StepBody {
  task?: string;
  actions?: (string | { name: string; value: number })[];
  query?: { kind: string; text: string };
  text?: string;
  controls?: Record<string, number>;
}

export class HttpError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`${status}: ${detail}`);
  }
}

async function readDetail(response: Response): Promise<string> {
  try {
    const body = await response.json();
    return typeof body.detail === "string" ? body.detail : JSON.stringify(body);
  } catch {
    return response.statusText;
  }
}

export class SessionClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      throw new HttpError(response.status, await readDetail(response));
    }
    return response;
  }

  async createSession(config: SessionConfig): Promise<string> {
    const response = await this.request("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(config),
    });
    const body = await response.json();
    return body.session_id as string;
  }

  async step(sessionId: string, body: StepBody): Promise<WireEnvelope> {
    const response = await this.request(`/sessions/${sessionId}/step`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    return (await response.json()) as WireEnvelope;
  }

  async exportDocument(
    sessionId: string,
    format: string,
    params: Record<string, number> = {},
  ): Promise<string> {
    const query = new URLSearchParams({ format });
    for (const [key, value] of Object.entries(params)) query.set(key, String(value));
    const response = await this.request(`/sessions/${sessionId}/export?${query}`);
    return response.text();
  }

  async memory(sessionId: string): Promise<MemoryRecordSummary[]> {
    const response = await this.request(`/sessions/${sessionId}/memory`);
    const body = await response.json();
    return body.records as MemoryRecordSummary[];
  }

  async close(sessionId: string): Promise<void> {
    await this.request(`/sessions/${sessionId}`, { method: "DELETE" });
  }

  /**
   * Subscribe to the server-sent envelope stream. Returns an unsubscribe
   * function, or null when EventSource is unavailable (the caller then
   * falls back to step-response rendering).
   */
  events(sessionId: string, onEnvelope: (envelope: WireEnvelope) => void): (() => void) | null {
    if (typeof EventSource === "undefined") return null;
    const source = new EventSource(`${this.baseUrl}/sessions/${sessionId}/events`);
    source.onmessage = (event) => {
      onEnvelope(JSON.parse(event.data) as WireEnvelope);
    };
    source.onerror = () => {
      source.close();
    };
    return () => source.close();
  }
}
