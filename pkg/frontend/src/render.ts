// View -> HTML. Pure string building so tests can assert on markup
// without a DOM. Buttons carry data-* attributes; main.ts delegates.

import type { ConsoleView } from "./viewModel.js";
import type { RowPayload } from "./protocol.js";

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function rowCard(row: RowPayload | null, label: string): string {
  if (row === null) {
    return `<div class="row-card empty"><span class="label">${label}</span><span>-</span></div>`;
  }
  const actions = row.actions.map((a) => `<span class="chip">${esc(a)}</span>`).join("");
  return `<div class="row-card"><span class="label">${label}</span>` +
    `<strong>${esc(row.id)}</strong> <code>${esc(row.trigger)}</code>${actions}</div>`;
}

function gatePanel(view: ConsoleView, disabled: boolean): string {
  if (view.pendingGateSignal === null) {
    return "";
  }
  const attr = disabled ? " disabled" : "";
  return `<div class="panel gate"><h3>Waiting on gate</h3>` +
    `<button data-signal="${esc(view.pendingGateSignal)}"${attr}>` +
    `${esc(view.pendingGateSignal)}</button></div>`;
}

function branchPanel(view: ConsoleView, disabled: boolean): string {
  if (view.branchOptions.length === 0) {
    return "";
  }
  const attr = disabled ? " disabled" : "";
  const buttons = view.branchOptions
    .map(
      (o) =>
        `<button data-choice="${esc(o.choice_id)}"${attr}>` +
        `${esc(o.label)} <small>+${o.points}</small></button>`,
    )
    .join("");
  return `<div class="panel branch"><h3>${esc(view.branchPrompt ?? "Choose")}</h3>${buttons}</div>`;
}

function repairPanel(view: ConsoleView): string {
  const actors = view.devices.filter((d) => d.role === "robot_actor").map((d) => d.id);
  const gazeButtons = actors
    .map((a) => `<button data-repair="redirect_gaze" data-actor="${esc(a)}">gaze ${esc(a)}</button>`)
    .join("");
  const repeatButtons = actors
    .map(
      (a) =>
        `<button data-repair="repeat_last_utterance" data-actor="${esc(a)}">repeat ${esc(a)}</button>`,
    )
    .join("");
  return `<div class="panel repair"><h3>Repair</h3>${gazeButtons}${repeatButtons}` +
    `<button data-repair="resync_scene">resync scene</button></div>`;
}

function deviceGrid(view: ConsoleView): string {
  const cells = view.devices
    .map(
      (d) =>
        `<div class="device ${esc(d.state)}"><strong>${esc(d.id)}</strong>` +
        `<span>${esc(d.role)}</span><span class="state">${esc(d.state)}</span></div>`,
    )
    .join("");
  return `<div class="devices">${cells || "<em>no devices connected</em>"}</div>`;
}

function transcript(view: ConsoleView): string {
  const lines = view.transcript
    .map((t) => `<li class="${t.kind}">${esc(t.text)}</li>`)
    .join("");
  return `<ol class="transcript">${lines}</ol>`;
}

export function renderView(view: ConsoleView, options: { readOnly: boolean; armed: boolean }): string {
  const banner =
    view.connection === "connected"
      ? ""
      : `<div class="banner">${view.connection === "retrying" ? "connection lost, retrying..." : "connecting..."}</div>`;
  const toast = view.toast === null ? "" : `<div class="toast">${esc(view.toast)}</div>`;
  const disabled = options.readOnly || !options.armed || !view.haveSnapshot;
  const controls = options.readOnly
    ? ""
    : gatePanel(view, disabled) + branchPanel(view, disabled) + repairPanel(view);
  const done = view.showDone ? `<div class="done">SHOW COMPLETE</div>` : "";
  return (
    banner +
    toast +
    `<header><h1>${esc(view.title || "(untitled show)")}</h1>` +
    `<div class="points">points: ${view.points}</div>` +
    `<div class="phase">${esc(view.phase)}</div></header>` +
    done +
    rowCard(view.currentRow, "now") +
    view.nextRows.map((r, i) => rowCard(r, `next ${i + 1}`)).join("") +
    controls +
    deviceGrid(view) +
    transcript(view)
  );
}
