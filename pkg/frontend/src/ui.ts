/** DOM rendering: the whole view is rebuilt from GameViewState on every
 * store update. No model inference happens here. */

import { GameStore, GameViewState, Settings, topKBars } from "./state.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) {
    if (k === "class") node.className = v;
    else node.setAttribute(k, v);
  }
  node.append(...children);
  return node;
}

function swatchRow(state: GameViewState, store: GameStore): HTMLElement {
  const round = state.round;
  const row = el("div", { class: "swatches" });
  if (!round) return row;
  round.colors.forEach((hex, i) => {
    const clickable = state.role === "listener" && !round.played && !state.busy;
    const button = el(
      "button",
      {
        class: "swatch" + (round.played && i === round.targetIndex ? " target" : ""),
        style: `background:${hex}`,
        title: hex,
        "aria-label": `color ${i + 1} ${hex}`,
        ...(clickable ? {} : { disabled: "true" }),
      },
      el("span", { class: "swatch-label" }, hex),
    );
    if (clickable) {
      button.addEventListener("click", () => void store.submitChoice(i).catch(() => undefined));
    }
    if (state.reveal && state.reveal.agentGuess === i) button.classList.add("guessed");
    row.append(button);
  });
  return row;
}

function utteranceForm(state: GameViewState, store: GameStore): HTMLElement {
  const wrap = el("div", { class: "speak-form" });
  const input = el("input", {
    type: "text",
    list: "vocab-list",
    placeholder: "describe the outlined target...",
    "aria-label": "utterance",
  });
  const datalist = el("datalist", { id: "vocab-list" });
  for (const word of state.vocab) datalist.append(el("option", { value: word }));
  const submit = el("button", { class: "primary" }, "say it");
  const update = () => {
    submit.toggleAttribute(
      "disabled",
      !input.value.trim() || state.busy || !state.round || state.round.played,
    );
  };
  input.addEventListener("input", update);
  submit.addEventListener("click", () => {
    const text = input.value.trim();
    if (text) void store.submitUtterance(text).catch(() => undefined);
  });
  update();
  wrap.append(input, datalist, submit);
  if (state.suggestions.length) {
    const hints = el("div", { class: "suggestions" }, "did you mean: ");
    for (const s of state.suggestions) {
      const chip = el("button", { class: "chip" }, s);
      chip.addEventListener("click", () => {
        input.value = s;
        update();
      });
      hints.append(chip);
    }
    wrap.append(hints);
  }
  return wrap;
}

function bars(distribution: number[], support: string[] | number[], highlight?: string): HTMLElement {
  const box = el("div", { class: "bars" });
  for (const { label, mass } of topKBars(distribution, support)) {
    const row = el(
      "div",
      { class: "bar-row" + (label === highlight ? " highlight" : "") },
      el("span", { class: "bar-label" }, label),
      el("div", { class: "bar-track" },
        el("div", { class: "bar-fill", style: `width:${(mass * 100).toFixed(2)}%` })),
      el("span", { class: "bar-value" }, mass.toFixed(3)),
    );
    box.append(row);
  }
  return box;
}

function revealPanel(state: GameViewState): HTMLElement {
  const panel = el("div", { class: "reveal" });
  const reveal = state.reveal;
  if (!reveal) return panel;
  panel.append(el("h3", {}, reveal.correct ? "correct" : "missed"));
  if (reveal.agentUtterance !== undefined) {
    panel.append(el("p", {}, `agent said: "${reveal.agentUtterance}"; its production distribution:`));
    panel.append(bars(reveal.distribution, reveal.support, reveal.agentUtterance));
  } else {
    panel.append(el("p", {}, "agent listener distribution over the three colors:"));
    panel.append(bars(reveal.distribution, reveal.colors));
  }
  return panel;
}

function controls(state: GameViewState, store: GameStore): HTMLElement {
  const panel = el("div", { class: "controls" });
  const s = state.settings;

  const modelSel = el("select", { "aria-label": "model" });
  for (const m of ["base", "am", "gd"]) {
    const opt = el("option", { value: m }, m);
    if (m === s.model) opt.setAttribute("selected", "true");
    modelSel.append(opt);
  }
  const alpha = el("input", {
    type: "range", min: "0", max: "4", step: "0.01", value: String(s.alpha),
    "aria-label": "alpha",
  });
  const alphaOut = el("span", { class: "value" }, s.alpha.toFixed(2));
  alpha.addEventListener("input", () => (alphaOut.textContent = Number(alpha.value).toFixed(2)));
  const steps = el("input", {
    type: "number", min: "1", max: "100", value: String(s.steps), "aria-label": "gd steps",
  });
  const objSel = el("select", { "aria-label": "objective" });
  for (const o of ["le", "rd"]) {
    const opt = el("option", { value: o }, o);
    if (o === s.objective) opt.setAttribute("selected", "true");
    objSel.append(opt);
  }
  const roleSel = el("select", { "aria-label": "role" });
  for (const r of ["listener", "speaker"]) {
    const opt = el("option", { value: r }, `play as ${r}`);
    if (r === state.role) opt.setAttribute("selected", "true");
    roleSel.append(opt);
  }
  const apply = el("button", {}, "apply (new session)");
  apply.addEventListener("click", () => {
    void store
      .startSession(roleSel.value as "speaker" | "listener", {
        model: modelSel.value,
        alpha: Number(alpha.value),
        steps: Number(steps.value),
        objective: objSel.value as "le" | "rd",
      })
      .catch(() => undefined);
  });

  panel.append(
    el("label", {}, "model ", modelSel),
    el("label", {}, "alpha ", alpha, alphaOut),
    el("label", {}, "steps ", steps),
    el("label", {}, "objective ", objSel),
    roleSel,
    apply,
  );
  return panel;
}

function whatIfPanel(state: GameViewState, store: GameStore): HTMLElement {
  const panel = el("div", { class: "what-if" });
  if (!state.reveal) return panel;
  panel.append(el("h3", {}, "what if?"));
  const s = state.whatIf?.settings ?? state.reveal.settings;
  const alpha = el("input", {
    type: "range", min: "0", max: "4", step: "0.01", value: String(s.alpha),
    "aria-label": "what-if alpha",
  });
  const objSel = el("select", { "aria-label": "what-if objective" });
  for (const o of ["le", "rd"]) {
    const opt = el("option", { value: o }, o);
    if (o === s.objective) opt.setAttribute("selected", "true");
    objSel.append(opt);
  }
  const run = () => {
    void store
      .whatIf({ ...s, alpha: Number(alpha.value), objective: objSel.value as "le" | "rd" })
      .catch(() => undefined);
  };
  alpha.addEventListener("change", run);
  objSel.addEventListener("change", run);
  panel.append(el("label", {}, "alpha ", alpha), el("label", {}, "objective ", objSel));

  const side = el("div", { class: "side-by-side" });
  side.append(
    el("div", {}, el("h4", {}, "played"),
      bars(state.reveal.distribution, state.reveal.support)),
  );
  if (state.whatIf) {
    const diag = state.whatIf.traceLength !== undefined
      ? ` (gd trace: ${state.whatIf.traceLength} steps)` : "";
    side.append(
      el("div", {}, el("h4", {}, `counterfactual${diag}`),
        bars(state.whatIf.distribution, state.whatIf.support)),
    );
  }
  panel.append(side);
  return panel;
}

export function render(root: HTMLElement, state: GameViewState, store: GameStore): void {
  root.replaceChildren();
  const header = el(
    "header",
    {},
    el("h1", {}, "pragmachine playground"),
    el("span", { class: "score", "aria-label": "score" },
      `score ${state.score.correct}/${state.score.total}`),
  );
  root.append(header, controls(state, store));

  const prompt = state.role === "listener"
    ? state.round?.agentUtterance
      ? `the agent says: "${state.round.agentUtterance}" - click the color it means`
      : "start a round"
    : "you are the speaker: describe the outlined target";
  root.append(el("p", { class: "prompt" }, state.busy ? "thinking..." : prompt));
  root.append(swatchRow(state, store));

  if (state.role === "speaker" && state.round && !state.round.played) {
    root.append(utteranceForm(state, store));
  }

  const next = el("button", { class: "primary next" }, state.round ? "next round" : "start round");
  next.toggleAttribute("disabled", state.busy || !state.sessionId
    || (state.round !== undefined && !state.round.played));
  next.addEventListener("click", () => void store.nextRound().catch(() => undefined));
  root.append(next);

  root.append(revealPanel(state), whatIfPanel(state, store));
  if (state.error) root.append(el("div", { class: "toast", role: "alert" }, state.error));
}
