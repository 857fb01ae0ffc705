/** Typed client for the game server's HTTP/JSON API. */

export type Role = "speaker" | "listener";
export type Objective = "le" | "rd";

export interface Overrides {
  alpha?: number;
  steps?: number;
  lr?: number;
  objective?: Objective;
}

export interface SessionInfo {
  session_id: string;
  vocab: string[];
}

export interface NewRound {
  round_id: string;
  colors: string[];
  condition: string;
  target_index?: number;
}

export interface RoundState {
  round_id: string;
  colors: string[];
  condition: string;
  played: boolean;
  agent_utterance?: string;
  target_index?: number;
}

export interface SpeakResult {
  agent_guess: number;
  correct: boolean;
  distribution: number[];
  target_index: number;
}

export interface ListenResult {
  agent_utterance: string;
  correct: boolean;
  target_index: number;
  distribution: number[];
}

export interface InferResult {
  mode: "speaker" | "listener";
  distribution: number[];
  support: string[] | number[];
  diagnostics: Record<string, unknown>;
}

export interface SessionState {
  session_id: string;
  role: string;
  model: string;
  score: { correct: number; total: number };
  history: Record<string, unknown>[];
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(typeof detail === "string" ? detail : JSON.stringify(detail));
  }

  /** Nearest-vocabulary suggestions attached to unknown-utterance errors. */
  get suggestions(): string[] {
    if (this.detail && typeof this.detail === "object" && "suggestions" in this.detail) {
      return (this.detail as { suggestions: string[] }).suggestions;
    }
    return [];
  }
}

export class GameClient {
  constructor(readonly baseUrl: string = "") {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const res = await fetch(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await res.json().catch(() => null);
    if (!res.ok) {
      throw new ApiError(res.status, payload && typeof payload === "object" && "detail" in payload
        ? (payload as { detail: unknown }).detail
        : payload);
    }
    return payload as T;
  }

  createSession(role: Role, model: string, overrides?: Overrides, seed?: number): Promise<SessionInfo> {
    return this.request("POST", "/api/session", { role, model, overrides, seed });
  }

  sessionState(sessionId: string): Promise<SessionState> {
    return this.request("GET", `/api/session/${sessionId}`);
  }

  newRound(sessionId: string, condition?: string): Promise<NewRound> {
    return this.request("POST", "/api/round/new", { session_id: sessionId, condition });
  }

  roundState(roundId: string): Promise<RoundState> {
    return this.request("GET", `/api/round/${roundId}`);
  }

  speak(sessionId: string, roundId: string, utterance: string): Promise<SpeakResult> {
    return this.request("POST", "/api/round/speak", {
      session_id: sessionId,
      round_id: roundId,
      utterance,
    });
  }

  listen(sessionId: string, roundId: string, choice: number): Promise<ListenResult> {
    return this.request("POST", "/api/round/listen", {
      session_id: sessionId,
      round_id: roundId,
      choice,
    });
  }

  infer(
    colors: string[],
    query: { target?: number; utterance?: string },
    model: string,
    overrides?: Overrides,
    seed?: number,
  ): Promise<InferResult> {
    return this.request("POST", "/api/infer", { colors, ...query, model, overrides, seed });
  }

  health(): Promise<Record<string, unknown>> {
    return this.request("GET", "/api/health");
  }

  openapi(): Promise<Record<string, unknown>> {
    return this.request("GET", "/openapi.json");
  }
}
