// Wire types for the gateway session API. The engine is the sole authority:
// every marking the UI shows comes verbatim from these payloads.

export type DecisionValue = "selected" | "deselected" | "undecided";

export interface DecisionEntry {
  cp: string;
  variant: string;
  value: DecisionValue;
  forced: boolean;
}

export interface GroupMeter {
  cp: string;
  min: number;
  max: number;
  selected: number;
}

export interface VariantInfo {
  id: string;
  kind: "mandatory" | "optional";
  guard: string | null;
}

export interface CpInfo {
  id: string;
  layer: "process" | "service" | "component";
  variants: VariantInfo[];
}

export interface SessionState {
  id: string;
  model: string;
  mode: "exact" | "heuristic";
  conflict: boolean;
  decisions: DecisionEntry[];
  groups: GroupMeter[];
  cps: CpInfo[];
}

export interface ForcedPair {
  cp: string;
  variant: string;
  value: DecisionValue;
}

export interface DecisionResponse {
  conflict: boolean;
  forced: ForcedPair[];
  state: SessionState;
}

export interface Diagnostic {
  code: string;
  severity: string;
  message: string;
  subject: string[];
}

export interface ValidateResponse {
  configuration: { model: string; selections: Record<string, string[]> } | null;
  diagnostics: Diagnostic[];
}
