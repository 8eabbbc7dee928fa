import { describe, expect, it } from "vitest";

import { OperatorControls } from "../src/controls.js";
import type { Frame } from "../src/protocol.js";

class CountingBus {
  frames: Frame[] = [];

  sendFrame(frame: Frame): void {
    this.frames.push(frame);
  }

  operatorInputs(): Frame[] {
    return this.frames.filter((f) => f.type === "operator_input");
  }
}

describe("single-fire property", () => {
  it("one activation sends exactly one operator_input frame", () => {
    const bus = new CountingBus();
    const controls = new OperatorControls(bus);
    expect(controls.sendSignal("thumbs_up")).toBe(true);
    expect(bus.operatorInputs().length).toBe(1);
  });

  it("hammering a control before the next snapshot sends nothing more", () => {
    const bus = new CountingBus();
    const controls = new OperatorControls(bus);
    controls.sendSignal("thumbs_up");
    for (let i = 0; i < 25; i++) {
      expect(controls.sendSignal("thumbs_up")).toBe(false);
      expect(controls.sendChoice("firm")).toBe(false);
    }
    expect(bus.operatorInputs().length).toBe(1);
  });

  it("the next snapshot re-arms the controls", () => {
    const bus = new CountingBus();
    const controls = new OperatorControls(bus);
    controls.sendSignal("thumbs_up");
    controls.onSnapshot();
    expect(controls.sendChoice("firm")).toBe(true);
    const inputs = bus.operatorInputs();
    expect(inputs.length).toBe(2);
    expect(inputs[1]?.payload).toEqual({
      input: { type: "player_choice", choice_id: "firm" },
    });
  });

  it("repairs fire out-of-band without consuming the armed state", () => {
    const bus = new CountingBus();
    const controls = new OperatorControls(bus);
    controls.sendRepair("redirect_gaze", { actor: "AVATAR" });
    expect(controls.isArmed).toBe(true);
    expect(controls.sendSignal("go")).toBe(true);
    expect(bus.operatorInputs().length).toBe(2);
  });
});
