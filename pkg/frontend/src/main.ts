import { GatewayClient } from "./api.js";
import { render } from "./render.js";
import { SessionStore } from "./state.js";

export function boot(root: HTMLElement, base = ""): SessionStore {
  const store = new SessionStore(new GatewayClient(base));

  const start = document.createElement("form");
  start.className = "start";
  start.innerHTML =
    '<label>customization model id <input name="model" placeholder="m2"></label>' +
    "<button>start session</button>";
  root.append(start);

  const app = document.createElement("main");
  app.className = "app";
  root.append(app);

  store.subscribe(() => render(app, store));

  start.addEventListener("submit", (event) => {
    event.preventDefault();
    const input = start.querySelector<HTMLInputElement>("input[name=model]");
    if (input?.value) void store.load(input.value.trim());
  });

  const params = new URLSearchParams(window.location.search);
  const model = params.get("model");
  if (model) void store.load(model);

  return store;
}

if (typeof document !== "undefined" && document.getElementById("ovm-root")) {
  boot(document.getElementById("ovm-root") as HTMLElement);
}
