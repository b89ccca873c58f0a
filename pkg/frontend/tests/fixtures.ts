import type { DecisionResponse, SessionState } from "../src/types.js";

/** Session state shaped like the gateway's Fig-6 derivation of fig4_tenant:
 * CP1 carries mandatory V5, a [0..1] group over {V3, V4}, and V3 excludes V4. */
export function fig6State(overrides: Partial<SessionState> = {}): SessionState {
  return {
    id: "s1",
    model: "Fig4T-derived",
    mode: "exact",
    conflict: false,
    decisions: [
      { cp: "CP1", variant: "V5", value: "selected", forced: true },
      { cp: "CP1", variant: "V3", value: "undecided", forced: false },
      { cp: "CP1", variant: "V4", value: "undecided", forced: false },
      { cp: "CP2", variant: "V6", value: "selected", forced: true },
    ],
    groups: [{ cp: "CP1", min: 0, max: 1, selected: 0 }],
    cps: [
      {
        id: "CP1",
        layer: "service",
        variants: [
          { id: "V5", kind: "mandatory", guard: null },
          { id: "V3", kind: "optional", guard: null },
          { id: "V4", kind: "optional", guard: null },
        ],
      },
      {
        id: "CP2",
        layer: "process",
        variants: [{ id: "V6", kind: "mandatory", guard: null }],
      },
    ],
    ...overrides,
  };
}

export function afterSelectingV3(): DecisionResponse {
  const state = fig6State();
  state.decisions = state.decisions.map((d) =>
    d.variant === "V3"
      ? { ...d, value: "selected" }
      : d.variant === "V4"
        ? { ...d, value: "deselected", forced: true }
        : d,
  );
  state.groups = [{ cp: "CP1", min: 0, max: 1, selected: 1 }];
  return {
    conflict: false,
    forced: [{ cp: "CP1", variant: "V4", value: "deselected" }],
    state,
  };
}
