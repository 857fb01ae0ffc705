/** Game view state: a pure function of server responses plus local input.
 *
 * The store never invents model output client-side; every distribution and
 * every reveal comes from a server response. For a human-listener session
 * the target index enters the state only through the listen reveal, so it
 * cannot leak before the choice is submitted.
 */

import {
  ApiError,
  GameClient,
  InferResult,
  Objective,
  Overrides,
  Role,
} from "./api.js";

export interface Settings {
  model: string;
  alpha: number;
  steps: number;
  lr: number;
  objective: Objective;
}

export const DEFAULT_SETTINGS: Settings = {
  model: "am",
  alpha: 1.17,
  steps: 9,
  lr: 0.357,
  objective: "le",
};

export interface RoundView {
  roundId: string;
  colors: string[];
  condition: string;
  /** Present only when the server reveals it (speaker role, or after play). */
  targetIndex?: number;
  /** The agent's description, shown to a human listener. */
  agentUtterance?: string;
  played: boolean;
}

export interface Reveal {
  correct: boolean;
  targetIndex: number;
  /** Played distribution: listener over 3 colors, or speaker over the vocabulary. */
  distribution: number[];
  support: string[] | number[];
  agentGuess?: number;
  agentUtterance?: string;
  /** What the human speaker typed (speaker role only). */
  playedUtterance?: string;
  /** The settings the round was actually played under. */
  settings: Settings;
  colors: string[];
}

export interface WhatIf {
  settings: Settings;
  distribution: number[];
  support: string[] | number[];
  traceLength?: number;
}

export interface GameViewState {
  sessionId?: string;
  role: Role;
  vocab: string[];
  settings: Settings;
  seed: number;
  round?: RoundView;
  reveal?: Reveal;
  whatIf?: WhatIf;
  score: { correct: number; total: number };
  busy: boolean;
  error?: string;
  suggestions: string[];
}

export function initialState(role: Role, seed: number): GameViewState {
  return {
    role,
    vocab: [],
    settings: { ...DEFAULT_SETTINGS },
    seed,
    score: { correct: 0, total: 0 },
    busy: false,
    suggestions: [],
  };
}

type Listener = (state: GameViewState) => void;

export class GameStore {
  state: GameViewState;
  private listeners: Listener[] = [];
  private inFlight = false;

  constructor(
    private client: GameClient,
    role: Role = "listener",
    seed: number = Math.floor(Math.random() * 2 ** 31),
  ) {
    this.state = initialState(role, seed);
  }

  subscribe(fn: Listener): void {
    this.listeners.push(fn);
  }

  private emit(patch: Partial<GameViewState>): void {
    this.state = { ...this.state, ...patch };
    for (const fn of this.listeners) fn(this.state);
  }

  private overrides(settings: Settings): Overrides {
    return {
      alpha: settings.alpha,
      steps: settings.model === "gd" ? settings.steps : undefined,
      lr: settings.model === "gd" ? settings.lr : undefined,
      objective: settings.model === "gd" ? settings.objective : undefined,
    };
  }

  /** One game request at a time; what-if requests may overlap. */
  private async exclusive<T>(work: () => Promise<T>): Promise<T> {
    if (this.inFlight) throw new Error("a game request is already in flight");
    this.inFlight = true;
    this.emit({ busy: true, error: undefined });
    try {
      return await work();
    } catch (err) {
      const suggestions = err instanceof ApiError ? err.suggestions : [];
      this.emit({ error: (err as Error).message, suggestions });
      throw err;
    } finally {
      this.inFlight = false;
      this.emit({ busy: false });
    }
  }

  async startSession(role?: Role, settings?: Partial<Settings>): Promise<void> {
    await this.exclusive(async () => {
      if (role) this.state = { ...this.state, role };
      const merged = { ...this.state.settings, ...settings };
      const info = await this.client.createSession(
        this.state.role,
        merged.model,
        this.overrides(merged),
        this.state.seed,
      );
      this.emit({
        sessionId: info.session_id,
        vocab: info.vocab,
        settings: merged,
        round: undefined,
        reveal: undefined,
        whatIf: undefined,
        score: { correct: 0, total: 0 },
        suggestions: [],
      });
    });
  }

  /** Changing model settings starts a fresh session so the next round uses them. */
  async applySettings(settings: Partial<Settings>): Promise<void> {
    await this.startSession(undefined, settings);
  }

  async nextRound(condition?: string): Promise<void> {
    await this.exclusive(async () => {
      const sessionId = this.requireSession();
      const created = await this.client.newRound(sessionId, condition);
      let agentUtterance: string | undefined;
      if (this.state.role === "listener") {
        const state = await this.client.roundState(created.round_id);
        agentUtterance = state.agent_utterance;
      }
      this.emit({
        round: {
          roundId: created.round_id,
          colors: created.colors,
          condition: created.condition,
          targetIndex: created.target_index,
          agentUtterance,
          played: false,
        },
        whatIf: undefined,
        suggestions: [],
      });
    });
  }

  async submitUtterance(utterance: string): Promise<void> {
    await this.exclusive(async () => {
      const sessionId = this.requireSession();
      const round = this.requireRound();
      const result = await this.client.speak(sessionId, round.roundId, utterance);
      this.emit({
        round: { ...round, played: true, targetIndex: result.target_index },
        reveal: {
          correct: result.correct,
          targetIndex: result.target_index,
          distribution: result.distribution,
          support: [0, 1, 2],
          agentGuess: result.agent_guess,
          playedUtterance: utterance,
          settings: { ...this.state.settings },
          colors: round.colors,
        },
        score: this.bump(result.correct),
      });
    });
  }

  async submitChoice(choice: number): Promise<void> {
    await this.exclusive(async () => {
      const sessionId = this.requireSession();
      const round = this.requireRound();
      if (round.played) throw new Error("round already played");
      const result = await this.client.listen(sessionId, round.roundId, choice);
      this.emit({
        round: { ...round, played: true, targetIndex: result.target_index },
        reveal: {
          correct: result.correct,
          targetIndex: result.target_index,
          distribution: result.distribution,
          support: this.state.vocab,
          agentUtterance: result.agent_utterance,
          settings: { ...this.state.settings },
          colors: round.colors,
        },
        score: this.bump(result.correct),
      });
    });
  }

  /** Counterfactual inference for the last reveal; never touches the score. */
  async whatIf(settings: Settings): Promise<InferResult> {
    const reveal = this.state.reveal;
    if (!reveal) throw new Error("no completed round to explore");
    // Listener role replays the agent speaker on the revealed target;
    // speaker role replays the agent listener on the typed utterance.
    const query = this.state.role === "listener"
      ? { target: reveal.targetIndex }
      : { utterance: reveal.playedUtterance };
    const result = await this.client.infer(
      reveal.colors,
      query,
      settings.model,
      this.overrides(settings),
      this.state.seed,
    );
    const trace = result.diagnostics["trace"];
    this.emit({
      whatIf: {
        settings,
        distribution: result.distribution,
        support: result.support,
        traceLength: Array.isArray(trace) ? trace.length : undefined,
      },
    });
    return result;
  }

  private bump(correct: boolean): { correct: number; total: number } {
    return {
      correct: this.state.score.correct + (correct ? 1 : 0),
      total: this.state.score.total + 1,
    };
  }

  private requireSession(): string {
    if (!this.state.sessionId) throw new Error("no active session");
    return this.state.sessionId;
  }

  private requireRound(): RoundView {
    if (!this.state.round) throw new Error("no active round");
    return this.state.round;
  }
}

/** Top-k bars plus an "other" bucket, for readable distribution charts. */
export function topKBars(
  distribution: number[],
  labels: string[] | number[],
  k = 10,
): { label: string; mass: number }[] {
  const indexed = distribution.map((mass, i) => ({ label: String(labels[i] ?? i), mass }));
  indexed.sort((a, b) => b.mass - a.mass);
  const top = indexed.slice(0, k);
  const rest = indexed.slice(k).reduce((acc, x) => acc + x.mass, 0);
  if (rest > 0) top.push({ label: "other", mass: rest });
  return top;
}
