import type { DecisionResponse, SessionState, ValidateResponse } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: { code?: string; error?: string } & Record<string, unknown>,
  ) {
    super(body.error ? `${body.code ?? status}: ${body.error}` : `HTTP ${status}`);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const res = await fetch(url, init);
  const text = await res.text();
  let body: Record<string, unknown> = {};
  try {
    body = text ? JSON.parse(text) : {};
  } catch {
    body = { error: text };
  }
  if (!res.ok) throw new ApiError(res.status, body);
  return body as T;
}

export class GatewayClient {
  constructor(readonly base: string = "") {}

  createSession(modelId: string): Promise<{ id: string; state: SessionState }> {
    return request(`${this.base}/sessions`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ model: modelId }),
    });
  }

  getSession(sessionId: string): Promise<SessionState> {
    return request(`${this.base}/sessions/${sessionId}`);
  }

  decide(sessionId: string, cp: string, variant: string, value: "selected" | "deselected"): Promise<DecisionResponse> {
    return request(`${this.base}/sessions/${sessionId}/decisions`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ cp, variant, value }),
    });
  }

  retract(sessionId: string, cp: string, variant: string): Promise<{ state: SessionState }> {
    return request(`${this.base}/sessions/${sessionId}/decisions`, {
      method: "DELETE",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ cp, variant }),
    });
  }

  validate(sessionId: string): Promise<ValidateResponse> {
    return request(`${this.base}/sessions/${sessionId}/validate`, { method: "POST" });
  }
}
