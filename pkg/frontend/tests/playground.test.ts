import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiError, GameClient } from "../src/api.js";
import { GameStore, topKBars } from "../src/state.js";
import { SchemaChecker } from "./schema.js";
import { RunningServer, startServer } from "./server.js";

let server: RunningServer;
let client: GameClient;

beforeAll(async () => {
  server = await startServer(8931 + Math.floor(Math.random() * 500));
  client = new GameClient(server.baseUrl);
}, 60_000);

afterAll(() => {
  server?.stop();
});

describe("playground session (human listener)", () => {
  it("plays 3 rounds without ever seeing the target early, keeps score in sync, and reproduces the played distribution in the what-if panel", async () => {
    const store = new GameStore(client, "listener", 4242);
    await store.startSession(undefined, { model: "gd", steps: 3 });
    expect(store.state.vocab.length).toBeGreaterThan(2);

    let localCorrect = 0;
    for (let round = 0; round < 3; round++) {
      await store.nextRound();
      // the hidden target must be absent from client state before the choice:
      // nothing describing the current round carries any target key
      expect(store.state.round?.targetIndex).toBeUndefined();
      expect(store.state.round?.agentUtterance).toBeTruthy();
      const roundJson = JSON.stringify(store.state.round).toLowerCase();
      expect(roundJson).not.toContain("target");

      const choice = round % 3;
      await store.submitChoice(choice);
      const reveal = store.state.reveal;
      expect(reveal).toBeDefined();
      expect(reveal!.targetIndex).toBeGreaterThanOrEqual(0);
      expect(reveal!.correct).toBe(reveal!.targetIndex === choice);
      if (reveal!.correct) localCorrect += 1;

      // the revealed production distribution argmaxes at the spoken utterance
      const dist = reveal!.distribution;
      const spoken = store.state.vocab.indexOf(reveal!.agentUtterance!);
      expect(dist.indexOf(Math.max(...dist))).toBe(spoken);
    }

    expect(store.state.score).toEqual({ correct: localCorrect, total: 3 });
    const serverState = await client.sessionState(store.state.sessionId!);
    expect(serverState.score).toEqual(store.state.score);
    expect(serverState.history.length).toBe(3);

    // what-if at the played settings reproduces the played distribution exactly
    const played = store.state.reveal!;
    await store.whatIf(played.settings);
    expect(store.state.whatIf!.distribution).toEqual(played.distribution);
    // and the gd trace length tracks the steps setting
    expect(store.state.whatIf!.traceLength).toBe(played.settings.steps);

    // a counterfactual with different settings is allowed to differ and
    // never touches the score
    await store.whatIf({ ...played.settings, alpha: 0.0, model: "am" });
    expect(store.state.score).toEqual({ correct: localCorrect, total: 3 });
  }, 60_000);

  it("blocks double submission of the same round", async () => {
    const store = new GameStore(client, "listener", 7);
    await store.startSession(undefined, { model: "base" });
    await store.nextRound();
    await store.submitChoice(0);
    await expect(store.submitChoice(1)).rejects.toThrow(/already played/);
  }, 30_000);
});

describe("playground session (human speaker)", () => {
  it("submits a vocabulary word and renders the agent guess", async () => {
    const store = new GameStore(client, "speaker", 11);
    await store.startSession(undefined, { model: "am" });
    await store.nextRound();
    expect(store.state.round?.targetIndex).toBeGreaterThanOrEqual(0);
    await store.submitUtterance(store.state.vocab[0]);
    const reveal = store.state.reveal!;
    expect(reveal.agentGuess).toBeGreaterThanOrEqual(0);
    expect(reveal.distribution.length).toBe(3);
    const mass = reveal.distribution.reduce((a, b) => a + b, 0);
    expect(Math.abs(mass - 1)).toBeLessThanOrEqual(1e-9);
  }, 30_000);

  it("surfaces suggestions for out-of-vocabulary words", async () => {
    const store = new GameStore(client, "speaker", 13);
    await store.startSession(undefined, { model: "base" });
    await store.nextRound();
    await expect(store.submitUtterance("blurple")).rejects.toThrow();
    expect(store.state.suggestions).toContain("purple");
    expect(store.state.error).toBeTruthy();
  }, 30_000);
});

describe("api conformance", () => {
  it("responses validate against the published schemas and distributions sum to 1", async () => {
    const openapi = await client.openapi();
    const checker = new SchemaChecker(openapi);

    const session = await client.createSession("listener", "am", undefined, 3);
    checker.validate(session, checker.responseSchema("/api/session", "post"));

    const round = await client.newRound(session.session_id);
    checker.validate(round, checker.responseSchema("/api/round/new", "post"));

    const state = await client.roundState(round.round_id);
    checker.validate(state, checker.responseSchema("/api/round/{round_id}", "get"));

    const listen = await client.listen(session.session_id, round.round_id, 2);
    checker.validate(listen, checker.responseSchema("/api/round/listen", "post"));
    const mass = listen.distribution.reduce((a, b) => a + b, 0);
    expect(Math.abs(mass - 1)).toBeLessThanOrEqual(1e-9);

    const infer = await client.infer(round.colors, { target: 0 }, "gd", { steps: 2 }, 5);
    checker.validate(infer, checker.responseSchema("/api/infer", "post"));
    const inferMass = infer.distribution.reduce((a, b) => a + b, 0);
    expect(Math.abs(inferMass - 1)).toBeLessThanOrEqual(1e-9);

    const sessionState = await client.sessionState(session.session_id);
    checker.validate(sessionState, checker.responseSchema("/api/session/{session_id}", "get"));

    const health = await client.health();
    checker.validate(health, checker.responseSchema("/api/health", "get"));
  }, 30_000);

  it("unknown models get a 400 with detail", async () => {
    await expect(client.createSession("listener", "nonsense")).rejects.toThrowError(ApiError);
    try {
      await client.createSession("listener", "nonsense");
    } catch (err) {
      expect((err as ApiError).status).toBe(400);
    }
  });
});

describe("pure view helpers", () => {
  it("topKBars keeps the top mass and buckets the rest", () => {
    const dist = [0.4, 0.3, 0.1, 0.08, 0.06, 0.03, 0.02, 0.005, 0.004, 0.0005, 0.0005];
    const labels = dist.map((_, i) => `w${i}`);
    const bars = topKBars(dist, labels, 3);
    expect(bars.length).toBe(4);
    expect(bars[0]).toEqual({ label: "w0", mass: 0.4 });
    expect(bars[3].label).toBe("other");
    const total = bars.reduce((a, b) => a + b.mass, 0);
    expect(Math.abs(total - 1)).toBeLessThanOrEqual(1e-9);
  });
});
