/** Wire types for the bridge WebSocket protocol.
 *
 * Frames are JSON objects carrying a session id and a strictly increasing
 * sequence number. The cockpit only ever *renders* what these frames say;
 * it never simulates locally.
 */

export interface HapticPattern {
  meaning: "left_ack" | "right_ack" | "slow_down";
  actuators: number[];
  duration: number;
}

export interface BaseFrame {
  type: string;
  session: string;
  seq: number;
}

export interface HelloFrame extends BaseFrame {
  type: "hello";
  map_digest: string;
  config: Record<string, unknown>;
  dt: number;
}

export interface TickFrame extends BaseFrame {
  type: "tick";
  k: number;
  t: number;
  truth: [number, number, number];
  est: [number, number, number];
  steer: number;
  brake: boolean;
  advisory: string;
  guidance: Record<string, unknown>;
  haptics: HapticPattern[];
  announcement: string | null;
  handle: Record<string, number>;
  events: string[];
  costmap: [number, number][];
}

export interface TrialEndFrame extends BaseFrame {
  type: "trial_end";
  reason: string;
  metrics: Record<string, unknown>;
}

export interface WarningFrame extends BaseFrame {
  type: "warning";
  message: string;
}

export interface ErrorFrame extends BaseFrame {
  type: "error";
  message: string;
}

export interface LogFrame extends BaseFrame {
  type: "log";
  text: string;
}

export type ServerFrame =
  | HelloFrame
  | TickFrame
  | TrialEndFrame
  | WarningFrame
  | ErrorFrame
  | LogFrame;

export interface InputMessage {
  type: "input";
  push_speed: number;
  torque: number;
}

export interface ControlMessage {
  type: "control";
  action: "start" | "pause" | "step" | "reset" | "log";
  ticks?: number;
}

const FRAME_TYPES = new Set([
  "hello",
  "tick",
  "trial_end",
  "warning",
  "error",
  "log",
]);

export class ProtocolError extends Error {}

/** Parse one wire message; throws ProtocolError on anything malformed. */
export function parseFrame(raw: string): ServerFrame {
  let obj: unknown;
  try {
    obj = JSON.parse(raw);
  } catch {
    throw new ProtocolError("frame is not valid JSON");
  }
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    throw new ProtocolError("frame is not a JSON object");
  }
  const frame = obj as Record<string, unknown>;
  if (typeof frame.type !== "string" || !FRAME_TYPES.has(frame.type)) {
    throw new ProtocolError(`unknown frame type ${JSON.stringify(frame.type)}`);
  }
  if (typeof frame.session !== "string" || typeof frame.seq !== "number") {
    throw new ProtocolError("frame missing session/seq");
  }
  if (frame.type === "tick") {
    for (const key of ["k", "t", "truth", "est", "haptics", "events"]) {
      if (!(key in frame)) {
        throw new ProtocolError(`tick frame missing ${key}`);
      }
    }
  }
  return frame as unknown as ServerFrame;
}
