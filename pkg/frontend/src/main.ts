import { GameClient } from "./api.js";
import { GameStore } from "./state.js";
import { render } from "./ui.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app element");

const store = new GameStore(new GameClient(""));
store.subscribe((state) => render(root, state, store));

void store
  .startSession()
  .then(() => store.nextRound())
  .catch((err) => {
    root.replaceChildren();
    const div = document.createElement("div");
    div.className = "toast";
    div.textContent = `could not reach the game server: ${(err as Error).message}`;
    root.append(div);
  });
