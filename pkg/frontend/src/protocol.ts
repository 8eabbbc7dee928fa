// Wire types for the bus's operator WebSocket endpoint.
// One JSON document per message; same schema as the TCP device transport.

export const PROTOCOL_VERSION = "1.0.0";

export type MsgType =
  | "hello"
  | "register"
  | "command"
  | "ack"
  | "event"
  | "operator_input"
  | "state_snapshot"
  | "error"
  | "bye";

export interface Frame {
  protocol_version: string;
  type: MsgType;
  payload: Record<string, unknown>;
}

export interface BranchOption {
  choice_id: string;
  label: string;
  points: number;
}

export interface RowPayload {
  id: string;
  trigger: string;
  actions: string[];
  branch?: { prompt: string; options: BranchOption[] };
}

export interface EngineStatePayload {
  pc: [number, number] | null;
  row_id: string | null;
  phase: "idle" | "awaiting_gate" | "awaiting_acks" | "awaiting_choice" | "done";
  phase_detail: {
    signal?: string;
    pending?: [number, number][];
    pending_timers?: number;
    row?: string;
    prompt?: string;
    options?: BranchOption[];
    waiting_for?: string;
  };
  vars: Record<string, unknown>;
  points: number;
  seq: number;
}

export interface SnapshotPayload {
  title: string;
  state: EngineStatePayload;
  current_row: RowPayload | null;
  next_rows: RowPayload[];
  devices: { id: string; role: string; state: string }[];
  declared_devices: { id: string; role: string }[];
  done: boolean;
}

export interface EventPayload {
  event: string;
  [key: string]: unknown;
}

export type OperatorInput =
  | { type: "operator_signal"; name: string }
  | { type: "player_choice"; choice_id: string }
  | { type: "repair"; macro_id: string; args: Record<string, string> };

export function makeFrame(type: MsgType, payload: Record<string, unknown>): Frame {
  return { protocol_version: PROTOCOL_VERSION, type, payload };
}

export function helloFrame(): Frame {
  return makeFrame("hello", { client: "console" });
}

export function registerFrame(id: string): Frame {
  return makeFrame("register", { id, role: "operator", capabilities: [] });
}

export function operatorInputFrame(input: OperatorInput): Frame {
  return makeFrame("operator_input", { input });
}

export function parseFrame(raw: string): Frame | null {
  try {
    const doc = JSON.parse(raw);
    if (doc && typeof doc.type === "string" && typeof doc.payload === "object") {
      return doc as Frame;
    }
  } catch {
    // fall through: one bad message must never kill the console
  }
  return null;
}
