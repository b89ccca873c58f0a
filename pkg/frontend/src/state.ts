import { ApiError, GatewayClient } from "./api.js";
import type { Diagnostic, SessionState } from "./types.js";

export interface TenantAction {
  cp: string;
  variant: string;
}

export interface InlineError {
  cp: string;
  variant: string;
  message: string;
}

/**
 * Client-side view state. Always derived from the most recent server
 * response; no constraint logic lives here. Requests are serialized through
 * one promise chain per store, matching the gateway's per-session contract.
 */
export class SessionStore {
  state: SessionState | null = null;
  pending = false;
  lastDiagnostics: Diagnostic[] = [];
  inlineError: InlineError | null = null;
  connectionError: string | null = null;
  conflictPair: TenantAction | null = null;
  undoStack: TenantAction[] = [];

  private queue: Promise<unknown> = Promise.resolve();
  private listeners: Array<() => void> = [];

  constructor(readonly client: GatewayClient) {}

  subscribe(listener: () => void): void {
    this.listeners.push(listener);
  }

  /** Resolves once every queued request has settled. */
  idle(): Promise<void> {
    return this.queue.then(
      () => undefined,
      () => undefined,
    );
  }

  private emit(): void {
    for (const l of this.listeners) l();
  }

  private enqueue<T>(work: () => Promise<T>): Promise<T> {
    const next = this.queue.then(work, work);
    this.queue = next.catch(() => undefined);
    return next;
  }

  private async track<T>(work: () => Promise<T>): Promise<T> {
    this.pending = true;
    this.connectionError = null;
    this.emit();
    try {
      return await work();
    } finally {
      this.pending = false;
      this.emit();
    }
  }

  valueOf(cp: string, variant: string): { value: string; forced: boolean } {
    const entry = this.state?.decisions.find((d) => d.cp === cp && d.variant === variant);
    return entry ? { value: entry.value, forced: entry.forced } : { value: "undecided", forced: false };
  }

  isTenantDecision(cp: string, variant: string): boolean {
    return this.undoStack.some((a) => a.cp === cp && a.variant === variant);
  }

  load(modelId: string): Promise<void> {
    return this.enqueue(() =>
      this.track(async () => {
        try {
          const created = await this.client.createSession(modelId);
          this.state = created.state;
          this.undoStack = [];
          this.lastDiagnostics = [];
          this.conflictPair = null;
        } catch (err) {
          this.fail(err);
        }
      }),
    );
  }

  refresh(): Promise<void> {
    return this.enqueue(() =>
      this.track(async () => {
        if (!this.state) return;
        try {
          this.state = await this.client.getSession(this.state.id);
        } catch (err) {
          this.fail(err);
        }
      }),
    );
  }

  /** Select an undecided variant, or take back this tab's own selection. */
  toggle(cp: string, variant: string): Promise<void> {
    return this.enqueue(() =>
      this.track(async () => {
        if (!this.state) return;
        const session = this.state.id;
        this.inlineError = null;
        try {
          if (this.isTenantDecision(cp, variant)) {
            const res = await this.client.retract(session, cp, variant);
            this.state = res.state;
            this.undoStack = this.undoStack.filter((a) => !(a.cp === cp && a.variant === variant));
            this.conflictPair = null;
          } else {
            const res = await this.client.decide(session, cp, variant, "selected");
            this.state = res.state;
            this.undoStack.push({ cp, variant });
            this.conflictPair = res.conflict ? { cp, variant } : null;
          }
        } catch (err) {
          if (err instanceof ApiError && (err.status === 409 || err.status === 422)) {
            this.inlineError = { cp, variant, message: String(err.body.error ?? err.message) };
          } else {
            this.fail(err);
          }
        }
      }),
    );
  }

  undo(): Promise<void> {
    return this.enqueue(() =>
      this.track(async () => {
        const last = this.undoStack[this.undoStack.length - 1];
        if (!this.state || !last) return;
        try {
          const res = await this.client.retract(this.state.id, last.cp, last.variant);
          this.state = res.state;
          this.undoStack.pop();
          this.conflictPair = null;
        } catch (err) {
          this.fail(err);
        }
      }),
    );
  }

  /**
   * Validate and hand the configuration document to `save` exactly as the
   * gateway emitted it. On diagnostics, records them and returns the first
   * offending CP so the caller can scroll to it.
   */
  finish(save: (filename: string, text: string) => void): Promise<string | null> {
    return this.enqueue(() =>
      this.track(async () => {
        if (!this.state) return null;
        try {
          const res = await this.client.validate(this.state.id);
          this.lastDiagnostics = res.diagnostics;
          if (res.configuration) {
            save(`${res.configuration.model || "configuration"}.json`, JSON.stringify(res.configuration));
            return null;
          }
          const first = res.diagnostics[0];
          return first?.subject[0] ?? null;
        } catch (err) {
          this.fail(err);
          return null;
        }
      }),
    );
  }

  private fail(err: unknown): void {
    this.connectionError = err instanceof Error ? err.message : String(err);
  }
}
