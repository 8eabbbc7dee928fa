// Browser entry: wires the socket session, view fold, single-fire
// controls and renderer onto the page.

import { OperatorControls } from "./controls.js";
import { renderView } from "./render.js";
import { BusSession } from "./transport.js";
import type { WebSocketLike } from "./transport.js";
import { applyFrame, clearToast, initialView, setConnection } from "./viewModel.js";
import type { ConsoleView } from "./viewModel.js";

const root = document.getElementById("console-root");
const jokerToggle = document.getElementById("joker-toggle") as HTMLInputElement | null;
if (root === null) {
  throw new Error("console-root element missing");
}

const params = new URLSearchParams(window.location.search);
const defaultUrl = `ws://${window.location.hostname || "127.0.0.1"}:7711`;
const url = params.get("bus") ?? defaultUrl;
const operatorId = params.get("id") ?? `console-${Math.random().toString(36).slice(2, 8)}`;

let view: ConsoleView = initialView();
let toastTimer: ReturnType<typeof setTimeout> | null = null;

function draw(): void {
  root!.innerHTML = renderView(view, {
    readOnly: jokerToggle?.checked ?? false,
    armed: controls.isArmed,
  });
}

const session = new BusSession(
  url,
  operatorId,
  {
    onFrame(frame) {
      view = applyFrame(view, frame);
      if (frame.type === "state_snapshot") {
        controls.onSnapshot();
      }
      if (frame.type === "error" && toastTimer === null) {
        toastTimer = setTimeout(() => {
          view = clearToast(view);
          toastTimer = null;
          draw();
        }, 4000);
      }
      draw();
    },
    onStatus(status) {
      view = setConnection(view, status);
      draw();
    },
  },
  (wsUrl) => new WebSocket(wsUrl) as unknown as WebSocketLike,
);

const controls = new OperatorControls(session);

root.addEventListener("click", (ev) => {
  const target = ev.target as HTMLElement | null;
  const button = target?.closest("button");
  if (!button || button.hasAttribute("disabled")) {
    return;
  }
  const signal = button.dataset.signal;
  const choice = button.dataset.choice;
  const repair = button.dataset.repair;
  if (signal !== undefined) {
    controls.sendSignal(signal);
  } else if (choice !== undefined) {
    controls.sendChoice(choice);
  } else if (repair !== undefined) {
    const args: Record<string, string> = {};
    if (button.dataset.actor !== undefined) {
      args.actor = button.dataset.actor;
    }
    controls.sendRepair(repair, args);
  }
  draw();
});

jokerToggle?.addEventListener("change", draw);

session.connect();
draw();
