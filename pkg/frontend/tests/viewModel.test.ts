import { describe, expect, it } from "vitest";

import { makeFrame } from "../src/protocol.js";
import type { SnapshotPayload } from "../src/protocol.js";
import {
  applyFrame,
  applySnapshot,
  initialView,
  setConnection,
  TRANSCRIPT_LIMIT,
} from "../src/viewModel.js";
import { renderView } from "../src/render.js";

function snapshot(partial: Partial<SnapshotPayload> = {}): SnapshotPayload {
  return {
    title: "REMind Lite",
    state: {
      pc: [0, 0],
      row_id: "p1_gate",
      phase: "awaiting_gate",
      phase_detail: { signal: "let_the_adventure_begin" },
      vars: {},
      points: 0,
      seq: 0,
    },
    current_row: {
      id: "p1_gate",
      trigger: "operator_gate:let_the_adventure_begin",
      actions: ["light", "video"],
    },
    next_rows: [
      { id: "p1_wake", trigger: "auto", actions: ["speak"] },
      { id: "p1_glitch", trigger: "auto", actions: ["speak", "gui_show"] },
      { id: "p1_help", trigger: "auto", actions: ["speak"] },
    ],
    devices: [{ id: "AVATAR", role: "robot_actor", state: "connected" }],
    declared_devices: [],
    done: false,
    ...partial,
  };
}

describe("view fold", () => {
  it("derives the whole view from a snapshot", () => {
    const view = applySnapshot(initialView(), snapshot());
    expect(view.title).toBe("REMind Lite");
    expect(view.pendingGateSignal).toBe("let_the_adventure_begin");
    expect(view.nextRows.map((r) => r.id)).toEqual(["p1_wake", "p1_glitch", "p1_help"]);
    expect(view.nextRows.length).toBe(3);
    expect(view.devices[0]).toEqual({ id: "AVATAR", role: "robot_actor", state: "connected" });
  });

  it("clears gate state when the phase moves on", () => {
    let view = applySnapshot(initialView(), snapshot());
    view = applySnapshot(
      view,
      snapshot({
        state: { ...snapshot().state, phase: "awaiting_acks", phase_detail: { pending: [[1, 0]] } },
      }),
    );
    expect(view.pendingGateSignal).toBeNull();
  });

  it("exposes branch options only while awaiting a choice", () => {
    const options = [
      { choice_id: "comfort", label: "Comfort JITTER", points: 500 },
      { choice_id: "firm", label: "Be Firm with FUSE", points: 1000 },
    ];
    const view = applySnapshot(
      initialView(),
      snapshot({
        state: {
          ...snapshot().state,
          phase: "awaiting_choice",
          phase_detail: { row: "p4_strategies", prompt: "Choose an intervention", options },
        },
      }),
    );
    expect(view.branchOptions).toEqual(options);
    expect(view.branchPrompt).toBe("Choose an intervention");
  });

  it("accumulates speak and repair events in the transcript", () => {
    let view = initialView();
    view = applyFrame(view, makeFrame("event", { event: "speak", actor: "AVATAR", text: "Hello" }));
    view = applyFrame(view, makeFrame("event", { event: "repair", macro: "redirect_gaze", target: "AVATAR" }));
    view = applyFrame(view, makeFrame("event", { event: "points", points: 1000 }));
    expect(view.transcript.map((t) => t.text)).toEqual([
      "AVATAR: Hello",
      "repair redirect_gaze -> AVATAR",
      "points -> 1000",
    ]);
  });

  it("caps the transcript", () => {
    let view = initialView();
    for (let i = 0; i < TRANSCRIPT_LIMIT + 50; i++) {
      view = applyFrame(view, makeFrame("event", { event: "speak", actor: "A", text: `${i}` }));
    }
    expect(view.transcript.length).toBe(TRANSCRIPT_LIMIT);
    expect(view.transcript.at(-1)?.text).toBe(`A: ${TRANSCRIPT_LIMIT + 49}`);
  });

  it("error frames surface as toasts", () => {
    const view = applyFrame(initialView(), makeFrame("error", { code: "UnknownChoice", message: "no such option" }));
    expect(view.toast).toBe("UnknownChoice: no such option");
  });

  it("a reconnect rebuilds from the next snapshot", () => {
    let view = applySnapshot(initialView(), snapshot());
    view = setConnection(view, "retrying");
    expect(view.haveSnapshot).toBe(false);
    view = setConnection(view, "connected");
    view = applySnapshot(view, snapshot({ state: { ...snapshot().state, points: 1000 } }));
    expect(view.haveSnapshot).toBe(true);
    expect(view.points).toBe(1000);
  });
});

describe("render", () => {
  it("shows the gate button labeled with the signal, enabled", () => {
    const view = applySnapshot(initialView(), snapshot());
    const html = renderView(view, { readOnly: false, armed: true });
    expect(html).toContain('data-signal="let_the_adventure_begin"');
    expect(html).not.toContain("disabled>let_the_adventure_begin");
  });

  it("joker view hides controls but keeps cues and transcript", () => {
    let view = applySnapshot(initialView(), snapshot());
    view = applyFrame(view, makeFrame("event", { event: "speak", actor: "AVATAR", text: "Hi" }));
    const html = renderView(view, { readOnly: true, armed: true });
    expect(html).not.toContain("<button");
    expect(html).toContain("p1_wake");
    expect(html).toContain("AVATAR: Hi");
  });

  it("controls disable while disarmed", () => {
    const view = applySnapshot(initialView(), snapshot());
    const html = renderView(view, { readOnly: false, armed: false });
    expect(html).toContain('data-signal="let_the_adventure_begin" disabled');
  });

  it("retry banner shows without a crash when the bus is down", () => {
    const view = setConnection(initialView(), "retrying");
    const html = renderView(view, { readOnly: false, armed: true });
    expect(html).toContain("retrying");
  });

  it("escapes hostile text", () => {
    let view = initialView();
    view = applyFrame(
      view,
      makeFrame("event", { event: "speak", actor: "A", text: "<script>alert(1)</script>" }),
    );
    const html = renderView(view, { readOnly: false, armed: true });
    expect(html).not.toContain("<script>alert");
    expect(html).toContain("&lt;script&gt;");
  });
});
