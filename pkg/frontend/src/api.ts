import { EntryView, SearchParams, ServerConfig, Turn } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export interface MessageResult {
  turn: Turn;
  /** True when the server flagged the turn or answered 503 gateway_degraded. */
  degraded: boolean;
}

/** Thin typed client for the chat service; every method maps one route. */
export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  private async parseError(resp: Response): Promise<ApiError> {
    try {
      const body = await resp.json();
      return new ApiError(resp.status, body.code ?? "unknown", body.message ?? resp.statusText);
    } catch {
      return new ApiError(resp.status, "unknown", resp.statusText);
    }
  }

  async getConfig(): Promise<ServerConfig> {
    const resp = await fetch(this.url("/config"));
    if (!resp.ok) throw await this.parseError(resp);
    return (await resp.json()) as ServerConfig;
  }

  async createSession(): Promise<string> {
    const resp = await fetch(this.url("/sessions"), { method: "POST" });
    if (!resp.ok) throw await this.parseError(resp);
    const body = await resp.json();
    return body.session_id as string;
  }

  async sendMessage(sessionId: string, text: string, params: SearchParams): Promise<MessageResult> {
    const resp = await fetch(this.url(`/sessions/${sessionId}/messages`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ text, params }),
    });
    if (resp.status === 503) {
      // Degraded gateway: the turn still completed and rides in the error body.
      const body = await resp.json();
      if (body.code === "gateway_degraded" && body.turn) {
        return { turn: body.turn as Turn, degraded: true };
      }
      throw new ApiError(503, body.code ?? "unavailable", body.message ?? "service unavailable");
    }
    if (!resp.ok) throw await this.parseError(resp);
    const turn = (await resp.json()) as Turn;
    return { turn, degraded: turn.degraded };
  }

  async getEntry(entryId: number): Promise<EntryView> {
    const resp = await fetch(this.url(`/entries/${entryId}`));
    if (!resp.ok) throw await this.parseError(resp);
    return (await resp.json()) as EntryView;
  }
}
