// The console view is a pure fold over received frames. Nothing here is
// authoritative: killing the console and reconnecting rebuilds the whole
// view from the next snapshot.

import type { EventPayload, Frame, RowPayload, SnapshotPayload } from "./protocol.js";

export type Connection = "connecting" | "connected" | "retrying";

export interface TranscriptEntry {
  kind: "speak" | "note";
  text: string;
}

export interface ConsoleView {
  connection: Connection;
  title: string;
  showDone: boolean;
  points: number;
  currentRow: RowPayload | null;
  nextRows: RowPayload[];
  phase: string;
  pendingGateSignal: string | null;
  branchPrompt: string | null;
  branchOptions: { choice_id: string; label: string; points: number }[];
  devices: { id: string; role: string; state: string }[];
  transcript: TranscriptEntry[];
  toast: string | null;
  haveSnapshot: boolean;
}

export const TRANSCRIPT_LIMIT = 200;

export function initialView(): ConsoleView {
  return {
    connection: "connecting",
    title: "",
    showDone: false,
    points: 0,
    currentRow: null,
    nextRows: [],
    phase: "idle",
    pendingGateSignal: null,
    branchPrompt: null,
    branchOptions: [],
    devices: [],
    transcript: [],
    toast: null,
    haveSnapshot: false,
  };
}

function pushTranscript(view: ConsoleView, entry: TranscriptEntry): ConsoleView {
  const transcript = [...view.transcript, entry].slice(-TRANSCRIPT_LIMIT);
  return { ...view, transcript };
}

export function applySnapshot(view: ConsoleView, snap: SnapshotPayload): ConsoleView {
  const detail = snap.state.phase_detail;
  return {
    ...view,
    title: snap.title,
    showDone: snap.done,
    points: snap.state.points,
    currentRow: snap.current_row,
    nextRows: snap.next_rows,
    phase: snap.state.phase,
    pendingGateSignal: snap.state.phase === "awaiting_gate" ? detail.signal ?? null : null,
    branchPrompt: snap.state.phase === "awaiting_choice" ? detail.prompt ?? null : null,
    branchOptions: snap.state.phase === "awaiting_choice" ? detail.options ?? [] : [],
    devices: snap.devices,
    haveSnapshot: true,
  };
}

export function applyEvent(view: ConsoleView, event: EventPayload): ConsoleView {
  switch (event.event) {
    case "speak":
      return pushTranscript(view, {
        kind: "speak",
        text: `${event.actor}: ${event.text}`,
      });
    case "points":
      return pushTranscript(view, { kind: "note", text: `points -> ${event.points}` });
    case "repair":
      return pushTranscript(view, {
        kind: "note",
        text: `repair ${event.macro} -> ${event.target}`,
      });
    case "session":
      return pushTranscript(view, {
        kind: "note",
        text: `device ${event.id} ${event.state}`,
      });
    case "device_lost":
      return pushTranscript(view, {
        kind: "note",
        text: `dropped command for ${event.device} (device lost)`,
      });
    case "show_done":
      return pushTranscript(view, { kind: "note", text: "show complete" });
    default:
      return view;
  }
}

export function applyFrame(view: ConsoleView, frame: Frame): ConsoleView {
  if (frame.type === "state_snapshot") {
    return applySnapshot(view, frame.payload as unknown as SnapshotPayload);
  }
  if (frame.type === "event") {
    return applyEvent(view, frame.payload as unknown as EventPayload);
  }
  if (frame.type === "error") {
    const code = (frame.payload as { code?: string }).code ?? "Error";
    const message = (frame.payload as { message?: string }).message ?? "";
    return { ...view, toast: `${code}: ${message}` };
  }
  return view;
}

export function setConnection(view: ConsoleView, connection: Connection): ConsoleView {
  if (connection === "connected") {
    return { ...view, connection };
  }
  // a dropped link invalidates everything except the transcript we saw
  return { ...view, connection, haveSnapshot: false };
}

export function clearToast(view: ConsoleView): ConsoleView {
  return { ...view, toast: null };
}
