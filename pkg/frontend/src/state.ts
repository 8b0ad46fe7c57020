/** Cockpit view state: a pure fold over received frames.
 *
 * The UI holds no simulation state of its own — closing and reopening
 * mid-trial reproduces the same scene from the next tick frame.
 */

import { applyPatterns, darkIndicator, type HapticIndicator } from "./haptics.js";
import { parseFrame, ProtocolError, type ServerFrame, type TickFrame } from "./protocol.js";

export type ConnectionStatus =
  | "disconnected"
  | "connected"
  | "ended"
  | "protocol-error";

export interface LayerToggles {
  truth: boolean;
  estimate: boolean;
  plan: boolean;
  costmap: boolean;
  graph: boolean;
}

export interface ViewState {
  status: ConnectionStatus;
  session: string | null;
  lastSeq: number;
  mapDigest: string | null;
  dt: number;
  tick: TickFrame | null;
  haptic: HapticIndicator;
  announcement: string | null;
  warnings: string[];
  endReason: string | null;
  errorMessage: string | null;
  layers: LayerToggles;
}

export function initialState(): ViewState {
  return {
    status: "disconnected",
    session: null,
    lastSeq: 0,
    mapDigest: null,
    dt: 0.02,
    tick: null,
    haptic: darkIndicator(),
    announcement: null,
    warnings: [],
    endReason: null,
    errorMessage: null,
    layers: { truth: true, estimate: true, plan: true, costmap: true, graph: false },
  };
}

/** Apply one server frame. Never throws; protocol abuse lands in state. */
export function applyFrame(state: ViewState, frame: ServerFrame): ViewState {
  if (state.session !== null && frame.session === state.session && frame.seq <= state.lastSeq) {
    return fail(state, `sequence went backwards (${frame.seq} <= ${state.lastSeq})`);
  }
  const next: ViewState = { ...state, lastSeq: frame.seq };
  switch (frame.type) {
    case "hello":
      return {
        ...initialState(),
        status: "connected",
        session: frame.session,
        lastSeq: frame.seq,
        mapDigest: frame.map_digest,
        dt: frame.dt,
        layers: state.layers,
      };
    case "tick":
      return {
        ...next,
        session: frame.session,
        status: "connected",
        tick: frame,
        haptic: applyPatterns(state.haptic, frame.haptics, frame.t),
        announcement: frame.announcement ?? state.announcement,
      };
    case "trial_end":
      return { ...next, status: "ended", endReason: frame.reason };
    case "warning":
      return { ...next, warnings: [...state.warnings, frame.message].slice(-20) };
    case "error":
      return fail(next, frame.message);
    case "log":
      return next;
  }
}

export function applyRaw(state: ViewState, raw: string): ViewState {
  try {
    return applyFrame(state, parseFrame(raw));
  } catch (e) {
    if (e instanceof ProtocolError) return fail(state, e.message);
    throw e;
  }
}

function fail(state: ViewState, message: string): ViewState {
  return { ...state, status: "protocol-error", errorMessage: message };
}
