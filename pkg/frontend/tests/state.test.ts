import { describe, expect, it } from "vitest";

import { ApiError, GatewayClient } from "../src/api.js";
import { SessionStore } from "../src/state.js";
import type { DecisionResponse, SessionState } from "../src/types.js";
import { afterSelectingV3, fig6State } from "./fixtures.js";

class FakeClient extends GatewayClient {
  calls: string[] = [];
  inFlight = 0;
  maxInFlight = 0;
  decideResponse: DecisionResponse = afterSelectingV3();
  retractState: SessionState = fig6State();
  failWith: ApiError | null = null;

  private async step<T>(label: string, value: T): Promise<T> {
    this.calls.push(label);
    this.inFlight += 1;
    this.maxInFlight = Math.max(this.maxInFlight, this.inFlight);
    await new Promise((r) => setTimeout(r, 5));
    this.inFlight -= 1;
    if (this.failWith) throw this.failWith;
    return value;
  }

  override createSession(model: string) {
    return this.step(`create ${model}`, { id: "s1", state: fig6State() });
  }

  override getSession(id: string) {
    return this.step(`get ${id}`, fig6State());
  }

  override decide(_id: string, cp: string, variant: string, value: string) {
    return this.step(`decide ${cp}/${variant}=${value}`, this.decideResponse);
  }

  override retract(_id: string, cp: string, variant: string) {
    return this.step(`retract ${cp}/${variant}`, { state: this.retractState });
  }

  override validate(id: string) {
    return this.step(`validate ${id}`, {
      configuration: { model: "Fig4T-derived", selections: { CP1: ["V5"], CP2: ["V6"] } },
      diagnostics: [],
    });
  }
}

function makeStore() {
  const client = new FakeClient("");
  const store = new SessionStore(client);
  return { client, store };
}

describe("view state mirrors the server", () => {
  it("every marking comes from the latest payload, none is computed locally", async () => {
    const { store } = makeStore();
    await store.load("m2");
    expect(store.valueOf("CP1", "V5")).toEqual({ value: "selected", forced: true });
    expect(store.valueOf("CP1", "V4")).toEqual({ value: "undecided", forced: false });
    await store.toggle("CP1", "V3");
    // V4's forbidden state exists exactly because the response said so
    expect(store.valueOf("CP1", "V4")).toEqual({ value: "deselected", forced: true });
  });

  it("applies returned forced decisions and records the conflict flag", async () => {
    const { client, store } = makeStore();
    await store.load("m2");
    client.decideResponse = { ...afterSelectingV3(), conflict: true };
    client.decideResponse.state.conflict = true;
    await store.toggle("CP1", "V3");
    expect(store.state?.conflict).toBe(true);
    expect(store.conflictPair).toEqual({ cp: "CP1", variant: "V3" });
  });
});

describe("undo stack", () => {
  it("depth equals the number of tenant decisions", async () => {
    const { store } = makeStore();
    await store.load("m2");
    expect(store.undoStack).toHaveLength(0);
    await store.toggle("CP1", "V3");
    expect(store.undoStack).toHaveLength(1);
    await store.toggle("CP1", "V4");
    expect(store.undoStack).toHaveLength(2);
    await store.undo();
    expect(store.undoStack).toHaveLength(1);
    await store.toggle("CP1", "V3"); // toggling own decision retracts it
    expect(store.undoStack).toHaveLength(0);
  });

  it("undo issues a retract for the last tenant decision", async () => {
    const { client, store } = makeStore();
    await store.load("m2");
    await store.toggle("CP1", "V3");
    await store.undo();
    expect(client.calls.at(-1)).toBe("retract CP1/V3");
    expect(store.conflictPair).toBeNull();
  });
});

describe("request discipline", () => {
  it("serializes requests: never more than one in flight", async () => {
    const { client, store } = makeStore();
    void store.load("m2");
    void store.toggle("CP1", "V3");
    void store.toggle("CP1", "V4");
    void store.undo();
    await store.idle();
    expect(client.maxInFlight).toBe(1);
    expect(client.calls[0]).toBe("create m2");
  });

  it("renders 409s inline next to the variant", async () => {
    const { client, store } = makeStore();
    await store.load("m2");
    client.failWith = new ApiError(409, { code: "SES002", error: "'V5' is mandatory at 'CP1'" });
    await store.toggle("CP1", "V5");
    expect(store.inlineError).toMatchObject({ cp: "CP1", variant: "V5" });
    expect(store.connectionError).toBeNull();
    expect(store.undoStack).toHaveLength(0);
  });

  it("surfaces transport failures as a retryable banner state", async () => {
    const { client, store } = makeStore();
    await store.load("m2");
    client.failWith = new ApiError(500, { error: "boom" });
    await store.toggle("CP1", "V3");
    expect(store.connectionError).toBeTruthy();
  });
});

describe("finish", () => {
  it("downloads the configuration exactly as the gateway emitted it", async () => {
    const { store } = makeStore();
    await store.load("m2");
    let saved: { filename: string; text: string } | null = null;
    const offending = await store.finish((filename, text) => {
      saved = { filename, text };
    });
    expect(offending).toBeNull();
    expect(saved!.filename).toBe("Fig4T-derived.json");
    expect(JSON.parse(saved!.text)).toEqual({
      model: "Fig4T-derived",
      selections: { CP1: ["V5"], CP2: ["V6"] },
    });
  });

  it("returns the first offending CP on diagnostics", async () => {
    const { client, store } = makeStore();
    await store.load("m2");
    client.validate = () =>
      Promise.resolve({
        configuration: null,
        diagnostics: [
          { code: "CFG002", severity: "error", message: "group unmet", subject: ["CP1"] },
        ],
      });
    let saved = false;
    const offending = await store.finish(() => {
      saved = true;
    });
    expect(saved).toBe(false);
    expect(offending).toBe("CP1");
    expect(store.lastDiagnostics[0]?.code).toBe("CFG002");
  });
});
