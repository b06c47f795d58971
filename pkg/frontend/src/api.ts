/** Typed client for the gateway's REST endpoints. */

import type {
  GraphDocument,
  ReplyResult,
  SessionState,
  SimulatedTurn,
} from "./types.js";

export class GatewayError extends Error {
  status: number;

  constructor(status: number, detail: string) {
    super(detail);
    this.name = "GatewayError";
    this.status = status;
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class GatewayClient {
  baseUrl: string;
  private fetchFn: FetchLike;

  constructor(baseUrl: string, fetchFn?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        if (body && typeof body.detail === "string") detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new GatewayError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  /** The shared graph document, or a session's live one when `session` is given. */
  graph(session?: string): Promise<GraphDocument> {
    const query = session ? `?session=${encodeURIComponent(session)}` : "";
    return this.request<GraphDocument>(`/graph${query}`);
  }

  sessions(): Promise<{ sessions: string[] }> {
    return this.request<{ sessions: string[] }>("/sessions");
  }

  createSession(sessionId?: string, seed = 0): Promise<SessionState> {
    return this.post<SessionState>("/sessions", {
      session_id: sessionId ?? "",
      seed,
    });
  }

  state(sessionId: string): Promise<SessionState> {
    return this.request<SessionState>(
      `/sessions/${encodeURIComponent(sessionId)}/state`,
    );
  }

  reply(sessionId: string, text: string): Promise<ReplyResult> {
    return this.post<ReplyResult>(
      `/sessions/${encodeURIComponent(sessionId)}/reply`,
      { text },
    );
  }

  simulateUser(sessionId: string): Promise<SimulatedTurn> {
    return this.post<SimulatedTurn>(
      `/sessions/${encodeURIComponent(sessionId)}/simulate_user`,
      {},
    );
  }
}
