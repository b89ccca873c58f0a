import type { SessionStore } from "./state.js";
import type { CpInfo } from "./types.js";

const LAYERS: Array<CpInfo["layer"]> = ["process", "service", "component"];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderVariantRow(store: SessionStore, cp: string, variantId: string): HTMLElement {
  const { value, forced } = store.valueOf(cp, variantId);
  const tenant = store.isTenantDecision(cp, variantId);
  const row = el("div", "variant");
  row.dataset.cp = cp;
  row.dataset.variant = variantId;
  row.dataset.value = value;
  row.dataset.forced = String(forced);

  const button = el("button", "variant-toggle", variantId);
  if (forced && value === "selected") {
    row.classList.add("locked");
    button.disabled = true;
    button.title = "required by the customization model";
  } else if (forced && value === "deselected") {
    row.classList.add("forbidden");
    button.disabled = true;
    button.title = "excluded by your other selections";
  } else if (value === "selected") {
    row.classList.add(tenant ? "chosen" : "locked");
  }
  button.addEventListener("click", () => void store.toggle(cp, variantId));
  row.append(button);

  const badge =
    forced && value === "selected"
      ? "locked"
      : forced && value === "deselected"
        ? "forbidden"
        : value === "selected"
          ? "selected"
          : value === "deselected"
            ? "deselected"
            : "";
  if (badge) row.append(el("span", "badge", badge));

  const error = store.inlineError;
  if (error && error.cp === cp && error.variant === variantId) {
    row.append(el("span", "inline-error", error.message));
  }
  return row;
}

function renderCp(store: SessionStore, cp: CpInfo): HTMLElement {
  const card = el("section", "cp-card");
  card.id = `cp-${cp.id}`;
  card.append(el("h3", "cp-name", cp.id));
  const meter = store.state?.groups.find((g) => g.cp === cp.id);
  if (meter) {
    card.append(
      el("p", "group-meter", `selected ${meter.selected} of [${meter.min}..${meter.max}]`),
    );
    if (meter.selected < meter.min) card.classList.add("unsatisfied");
  }
  for (const variant of cp.variants) {
    card.append(renderVariantRow(store, cp.id, variant.id));
  }
  const offending = store.lastDiagnostics.filter((d) => d.subject[0] === cp.id);
  for (const d of offending) {
    card.append(el("p", "diagnostic", `${d.code}: ${d.message}`));
  }
  return card;
}

export function render(root: HTMLElement, store: SessionStore): void {
  root.textContent = "";
  if (store.connectionError) {
    const banner = el("div", "banner error", `connection problem: ${store.connectionError}`);
    const retry = el("button", "retry", "retry");
    retry.addEventListener("click", () => void store.refresh());
    banner.append(retry);
    root.append(banner);
  }
  const state = store.state;
  if (!state) return;

  const head = el("header", "session-head");
  head.append(el("h2", "", `customize ${state.model}`));
  head.append(el("span", "mode", `${state.mode} mode`));
  if (store.pending) head.append(el("span", "pending", "…"));
  root.append(head);

  if (state.conflict && store.conflictPair) {
    const banner = el(
      "div",
      "banner conflict",
      `no valid configuration remains after selecting ${store.conflictPair.variant} at ${store.conflictPair.cp}`,
    );
    const undo = el("button", "undo-conflict", "undo");
    undo.addEventListener("click", () => void store.undo());
    banner.append(undo);
    root.append(banner);
  }

  for (const layer of LAYERS) {
    const cps = state.cps.filter((cp) => cp.layer === layer);
    if (!cps.length) continue;
    const section = el("section", "layer");
    section.dataset.layer = layer;
    section.append(el("h2", "layer-name", layer));
    for (const cp of cps) section.append(renderCp(store, cp));
    root.append(section);
  }

  const general = store.lastDiagnostics.filter(
    (d) => !state.cps.some((cp) => cp.id === d.subject[0]),
  );
  for (const d of general) {
    root.append(el("p", "diagnostic", `${d.code}: ${d.message}`));
  }

  const controls = el("footer", "controls");
  const undoButton = el("button", "undo", `undo (${store.undoStack.length})`);
  undoButton.disabled = !store.undoStack.length;
  undoButton.addEventListener("click", () => void store.undo());
  const finishButton = el("button", "finish", "finish");
  finishButton.addEventListener("click", () => {
    void store.finish(browserSave).then((offendingCp) => {
      if (offendingCp) {
        document.getElementById(`cp-${offendingCp}`)?.scrollIntoView({ block: "start" });
      }
    });
  });
  controls.append(undoButton, finishButton);
  root.append(controls);
}

export function browserSave(filename: string, text: string): void {
  const blob = new Blob([text], { type: "application/json" });
  const url = URL.createObjectURL(blob);
  const a = document.createElement("a");
  a.href = url;
  a.download = filename;
  a.click();
  URL.revokeObjectURL(url);
}
