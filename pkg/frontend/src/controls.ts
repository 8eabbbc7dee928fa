// Single-fire guard: every control press emits at most one operator_input
// frame, and controls stay disarmed until the next snapshot arrives.

import type { Frame, OperatorInput } from "./protocol.js";
import { operatorInputFrame } from "./protocol.js";

export interface FrameSender {
  sendFrame(frame: Frame): void;
}

export class OperatorControls {
  private armed = true;

  constructor(private readonly sender: FrameSender) {}

  get isArmed(): boolean {
    return this.armed;
  }

  /** Called for every incoming snapshot: re-arms the controls. */
  onSnapshot(): void {
    this.armed = true;
  }

  private fire(input: OperatorInput): boolean {
    if (!this.armed) {
      return false;
    }
    this.armed = false;
    this.sender.sendFrame(operatorInputFrame(input));
    return true;
  }

  sendSignal(name: string): boolean {
    return this.fire({ type: "operator_signal", name });
  }

  sendChoice(choiceId: string): boolean {
    return this.fire({ type: "player_choice", choice_id: choiceId });
  }

  /** Repairs are out-of-band and may fire at any time, but still one
      frame per activation: they do not consume the armed state. */
  sendRepair(macroId: string, args: Record<string, string>): boolean {
    this.sender.sendFrame(operatorInputFrame({ type: "repair", macro_id: macroId, args }));
    return true;
  }
}
