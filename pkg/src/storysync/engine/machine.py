"""Deterministic cue state machine.

The engine never reads a clock: logical time arrives with each input,
and pacing (delays, speech durations) lives outside, entering as
TimerFired and DeviceAck inputs.  All inputs must be serialized through
one totally ordered queue; given the same script and the same
timestamped input sequence, two runs emit byte-identical cue logs.

Row lifecycle: a row fires (its actions become one command batch), then
completes on a barrier of every expects_ack command plus every wait
timer of the row; only then does the pointer advance.  Commands of an
operator-gated row are never emitted before the gate's signal has been
injected.  Out-of-phase inputs are logged and ignored, never fatal: a
live show must tolerate operator slips and stray device traffic.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

from .. import markup as mk
from ..script import model as m
from ..script.expr import ExprError, eval_expr
from ..script.registry import GestureRegistry
from ..script.validate import has_errors, validate_script
from .inputs import (
    DeviceAck,
    DeviceCommand,
    EngineInput,
    OperatorSignal,
    PlayerChoice,
    RepairCommand,
    TimerFired,
    TimerRequest,
)
from .log import CueLogEntry

PHASES = ("idle", "awaiting_gate", "awaiting_acks", "awaiting_choice", "done")

REPAIR_MACROS = ("redirect_gaze", "repeat_last_utterance", "resync_scene")


class InvalidScriptError(ValueError):
    """Script failed validation (or has no rows); the engine refuses it."""


@dataclass(frozen=True)
class EngineState:
    """Immutable snapshot handed to observers."""

    pc: Optional[tuple[int, int]]
    row_id: Optional[str]
    phase: str
    phase_detail: dict[str, Any]
    vars: dict[str, Any]
    points: int
    seq: int

    def to_payload(self) -> dict[str, Any]:
        return {
            "pc": list(self.pc) if self.pc is not None else None,
            "row_id": self.row_id,
            "phase": self.phase,
            "phase_detail": self.phase_detail,
            "vars": self.vars,
            "points": self.points,
            "seq": self.seq,
        }


@dataclass
class StepResult:
    commands: list[DeviceCommand] = field(default_factory=list)
    timers: list[TimerRequest] = field(default_factory=list)
    entries: list[CueLogEntry] = field(default_factory=list)


class ShowEngine:
    """One show run. Not thread-safe; callers serialize inputs."""

    def __init__(self, script: m.ShowScript, registry: Optional[GestureRegistry] = None):
        diagnostics = validate_script(script)
        if has_errors(diagnostics):
            bad = "; ".join(str(d) for d in diagnostics if d.severity == "error")
            raise InvalidScriptError(f"script fails validation: {bad}")
        if not script.scenes:
            raise InvalidScriptError("script has no scenes")
        self.script = script
        self.registry = registry
        self._rows: dict[tuple[int, int], m.CueRow] = {
            (si, ri): row for si, _sc, ri, row in script.iter_rows()
        }
        self._locs = script.row_locations()
        self._signals = script.gate_signals()

        self.log: list[CueLogEntry] = []
        self._started = False
        self._now = 0

        self._pc: Optional[tuple[int, int]] = None
        self._phase = "idle"
        self._vars: dict[str, Any] = {v.name: v.initial for v in script.variables}
        self._points = 0
        self._seq = 0
        self._gate_signal: Optional[str] = None
        self._pending_acks: set[tuple[int, int]] = set()
        self._pending_timers: dict[str, int] = {}
        self._pending_trigger_row: Optional[str] = None
        self._emitted: set[tuple[int, int]] = set()
        self._acked: set[tuple[int, int]] = set()
        self._last_utterance: dict[str, dict[str, Any]] = {}
        self._ambience: dict[str, dict[str, Any]] = {}

    # -- public surface ------------------------------------------------

    def start(self, at_ms: int = 0) -> StepResult:
        if self._started:
            raise RuntimeError("engine already started")
        self._started = True
        self._now = at_ms
        out = StepResult()
        self._log(out, "state_change", {"change": "show_started", "title": self.script.title})
        self._pc = (0, 0)
        self._proceed(out)
        return out

    def inject(self, inp: EngineInput, at_ms: int) -> StepResult:
        if not self._started:
            raise RuntimeError("engine not started")
        self._now = max(self._now, at_ms)
        out = StepResult()
        if self._phase == "done":
            self._log_input(out, inp, "ignored")
            return out
        if isinstance(inp, OperatorSignal):
            self._on_signal(out, inp)
        elif isinstance(inp, PlayerChoice):
            self._on_choice(out, inp)
        elif isinstance(inp, DeviceAck):
            self._on_ack(out, inp)
        elif isinstance(inp, TimerFired):
            self._on_timer(out, inp)
        elif isinstance(inp, RepairCommand):
            self._on_repair(out, inp)
        else:
            raise TypeError(f"unknown input {inp!r}")
        return out

    def repair(self, macro_id: str, at_ms: int, **args: str) -> StepResult:
        return self.inject(RepairCommand.make(macro_id, **args), at_ms)

    def note_device_event(self, device_id: str, note: str, at_ms: int) -> StepResult:
        """Record a bus-observed device event (e.g. device_lost) in the log."""
        self._now = max(self._now, at_ms)
        out = StepResult()
        self._log(out, "state_change", {"change": "device_note", "device": device_id, "note": note})
        return out

    @property
    def phase(self) -> str:
        return self._phase

    @property
    def done(self) -> bool:
        return self._phase == "done"

    @property
    def points(self) -> int:
        return self._points

    def current_row(self) -> Optional[m.CueRow]:
        return self._rows.get(self._pc) if self._pc is not None else None

    def preview_rows(self, count: int = 3) -> list[m.CueRow]:
        """Upcoming rows by sequential flow (branch targets not expanded)."""
        out: list[m.CueRow] = []
        loc = self._pc
        for _ in range(count):
            if loc is None:
                break
            loc = self._next_loc(loc)
            if loc is None:
                break
            out.append(self._rows[loc])
        return out

    def state(self) -> EngineState:
        detail: dict[str, Any] = {}
        if self._phase == "awaiting_gate":
            detail["signal"] = self._gate_signal
        elif self._phase == "awaiting_acks":
            detail["pending"] = sorted(list(c) for c in self._pending_acks)
            detail["pending_timers"] = sum(self._pending_timers.values())
        elif self._phase == "awaiting_choice":
            row = self.current_row()
            assert row is not None and row.branch is not None
            detail["row"] = row.id
            detail["prompt"] = row.branch.prompt
            detail["options"] = [
                {"choice_id": o.choice_id, "label": o.label, "points": o.points}
                for o in row.branch.options
            ]
        elif self._phase == "idle" and self._pending_trigger_row is not None:
            detail["waiting_for"] = "timer"
            detail["row"] = self._pending_trigger_row
        row = self.current_row()
        return EngineState(
            pc=self._pc,
            row_id=row.id if row is not None else None,
            phase=self._phase,
            phase_detail=detail,
            vars=dict(self._vars),
            points=self._points,
            seq=self._seq,
        )

    # -- input handling --------------------------------------------------

    def _on_signal(self, out: StepResult, inp: OperatorSignal) -> None:
        if inp.name not in self._signals:
            self._log_input(out, inp, "error:UnknownSignal")
            return
        if self._phase == "awaiting_gate" and inp.name == self._gate_signal:
            self._log_input(out, inp, "applied")
            self._gate_signal = None
            row = self.current_row()
            assert row is not None
            self._fire_row(out, row)
            if self._post_fire(out, row):
                self._proceed(out)
        else:
            self._log_input(out, inp, "ignored")

    def _on_choice(self, out: StepResult, inp: PlayerChoice) -> None:
        if self._phase != "awaiting_choice":
            self._log_input(out, inp, "ignored")
            return
        row = self.current_row()
        assert row is not None and row.branch is not None
        option = next((o for o in row.branch.options if o.choice_id == inp.choice_id), None)
        if option is None:
            self._log_input(out, inp, "error:UnknownChoice")
            return
        self._log_input(out, inp, "applied")
        if option.points:
            self._points += option.points
            self._log(out, "state_change", {
                "change": "points", "points": self._points,
                "delta": option.points, "source": f"choice:{option.choice_id}",
            })
        target = self._locs[option.target_row_id]
        self._log(out, "state_change", {"change": "jump", "to_row": option.target_row_id})
        self._pc = target
        self._phase = "idle"
        self._proceed(out)

    def _on_ack(self, out: StepResult, inp: DeviceAck) -> None:
        cid = inp.command_id
        if cid in self._pending_acks:
            self._log_input(out, inp, "applied")
            self._pending_acks.discard(cid)
            self._acked.add(cid)
            self._settle(out)
        else:
            self._log_input(out, inp, "error:AckForUnknownCommand")

    def _on_timer(self, out: StepResult, inp: TimerFired) -> None:
        if self._pending_trigger_row == inp.row_id and self._phase == "idle":
            self._log_input(out, inp, "applied")
            self._pending_trigger_row = None
            row = self.current_row()
            assert row is not None
            self._fire_row(out, row)
            if self._post_fire(out, row):
                self._proceed(out)
            return
        if self._pending_timers.get(inp.row_id, 0) > 0:
            self._log_input(out, inp, "applied")
            self._pending_timers[inp.row_id] -= 1
            if self._pending_timers[inp.row_id] == 0:
                del self._pending_timers[inp.row_id]
            self._settle(out)
            return
        self._log_input(out, inp, "ignored")

    def _on_repair(self, out: StepResult, inp: RepairCommand) -> None:
        if inp.macro_id not in REPAIR_MACROS:
            self._log_input(out, inp, "error:UnknownMacro")
            return
        if inp.macro_id == "redirect_gaze":
            actor = inp.arg("actor") or ""
            if actor not in self.script.device_map():
                self._log_input(out, inp, "error:UnknownDevice")
                return
            self._log_input(out, inp, "applied")
            self._emit_oob(out, actor, {"kind": "gaze", "target": "player"},
                           origin=f"repair:{inp.macro_id}")
            return
        if inp.macro_id == "repeat_last_utterance":
            actor = inp.arg("actor") or ""
            if actor not in self.script.device_map():
                self._log_input(out, inp, "error:UnknownDevice")
                return
            body = self._last_utterance.get(actor)
            if body is None:
                self._log_input(out, inp, "error:NoUtteranceToRepeat")
                return
            self._log_input(out, inp, "applied")
            self._emit_oob(out, actor, dict(body), origin=f"repair:{inp.macro_id}")
            return
        # resync_scene: re-emit steady-state ambience currently in effect
        self._log_input(out, inp, "applied")
        for device in sorted(self._ambience):
            self._emit_oob(out, device, dict(self._ambience[device]),
                           origin=f"repair:{inp.macro_id}")

    # -- row machinery ---------------------------------------------------

    def _proceed(self, out: StepResult) -> None:
        """Walk rows from pc until something blocks or the show ends."""
        while True:
            if self._pc is None:
                self._finish(out)
                return
            row = self._rows[self._pc]
            if row.guard is not None and not self._eval_guard(out, row):
                self._log(out, "state_change",
                          {"change": "row_skipped", "row": row.id, "reason": "guard_false"})
                self._pc = self._next_loc(self._pc)
                continue
            trig = row.trigger
            if trig.mode == "auto":
                self._fire_row(out, row)
                if not self._post_fire(out, row):
                    return
                continue
            if trig.mode == "after_prev_delay":
                self._pending_trigger_row = row.id
                out.timers.append(TimerRequest(row.id, trig.delay_ms, "trigger"))
                self._log(out, "state_change", {
                    "change": "timer_requested", "row": row.id,
                    "delay_ms": trig.delay_ms, "purpose": "trigger",
                })
                self._set_phase(out, "idle")
                return
            # operator gate
            self._gate_signal = trig.signal
            self._set_phase(out, "awaiting_gate")
            return

    def _eval_guard(self, out: StepResult, row: m.CueRow) -> bool:
        try:
            value = eval_expr(row.guard, self._vars)
        except ExprError:
            # validation guarantees this cannot happen; fail closed if forced
            value = False
        return bool(value)

    def _fire_row(self, out: StepResult, row: m.CueRow) -> None:
        self._log(out, "state_change", {"change": "row_fired", "row": row.id})
        self._seq += 1
        sub = 0
        for action in row.actions:
            if isinstance(action, m.SetVar):
                value = eval_expr(action.expression, self._vars)
                self._vars[action.name] = value
                self._log(out, "state_change",
                          {"change": "var", "name": action.name, "value": value})
                continue
            if isinstance(action, m.AwardPoints):
                self._points += action.amount
                self._log(out, "state_change", {
                    "change": "points", "points": self._points,
                    "delta": action.amount, "source": f"award:{row.id}",
                })
                continue
            if isinstance(action, m.WaitMs):
                self._pending_timers[row.id] = self._pending_timers.get(row.id, 0) + 1
                out.timers.append(TimerRequest(row.id, action.duration_ms, "wait"))
                self._log(out, "state_change", {
                    "change": "timer_requested", "row": row.id,
                    "delay_ms": action.duration_ms, "purpose": "wait",
                })
                continue
            body = self._render_body(action)
            target = m.action_device(action)
            assert target is not None
            command = DeviceCommand(
                command_id=(self._seq, sub), target=target, body=body, expects_ack=True
            )
            sub += 1
            self._emit(out, command, origin=f"row:{row.id}")
            self._pending_acks.add(command.command_id)
            if isinstance(action, m.Speak):
                self._last_utterance[target] = body
            if isinstance(action, m.Light):
                self._ambience[target] = body
            elif isinstance(action, m.Sound) and action.looped:
                self._ambience[target] = body

    def _post_fire(self, out: StepResult, row: m.CueRow) -> bool:
        """Block on the barrier or branch; True means the pointer advanced."""
        if self._barrier_open():
            self._set_phase(out, "awaiting_acks")
            return False
        if row.branch is not None:
            self._set_phase(out, "awaiting_choice")
            return False
        self._advance(out, row)
        return True

    def _settle(self, out: StepResult) -> None:
        """Advance when the current row's barrier has fully cleared."""
        if self._phase != "awaiting_acks" or self._barrier_open():
            return
        row = self.current_row()
        assert row is not None
        if row.branch is not None:
            self._set_phase(out, "awaiting_choice")
            return
        self._advance(out, row)
        self._proceed(out)

    def _advance(self, out: StepResult, row: m.CueRow) -> None:
        self._log(out, "state_change", {"change": "row_complete", "row": row.id})
        assert self._pc is not None
        self._pc = self._next_loc(self._pc)
        self._phase = "idle"

    def _finish(self, out: StepResult) -> None:
        self._pc = None
        self._set_phase(out, "done")

    def _next_loc(self, loc: tuple[int, int]) -> Optional[tuple[int, int]]:
        si, ri = loc
        if ri + 1 < len(self.script.scenes[si].rows):
            return (si, ri + 1)
        if si + 1 < len(self.script.scenes):
            return (si + 1, 0)
        return None

    def _barrier_open(self) -> bool:
        return bool(self._pending_acks) or bool(self._pending_timers)

    # -- emission and logging ---------------------------------------------

    def _render_body(self, action: m.Action) -> dict[str, Any]:
        if isinstance(action, m.Speak):
            cu = mk.compile_ssml(action.markup, action.voice, action.default_style)
            return {
                "kind": "speak",
                "ssml": cu.ssml,
                "markers": [list(pair) for pair in cu.markers],
                "plain_text": cu.plain_text,
                "rate_delta_pct": cu.rate_delta_pct,
            }
        if isinstance(action, m.PlayGesture):
            body: dict[str, Any] = {"kind": "play_gesture", "gesture": action.gesture_ref}
            if self.registry is not None:
                duration = self.registry.clip_duration_ms(action.gesture_ref)
                if duration is not None:
                    body["duration_ms"] = duration
            return body
        if isinstance(action, m.Light):
            body = {
                "kind": "light",
                "color": list(action.color),
                "pattern": action.pattern,
                "brightness": action.brightness,
            }
            if action.pattern == "pulse":
                body["rate_hz"] = action.pulse_rate_hz
            return body
        if isinstance(action, m.Sound):
            return {
                "kind": "sound",
                "clip": action.clip_ref,
                "looped": action.looped,
                "gain": action.gain,
            }
        if isinstance(action, m.Video):
            return {"kind": "video", "asset": action.asset_ref}
        if isinstance(action, m.GuiShow):
            return {
                "kind": "gui_show",
                "screen": action.screen_ref,
                "payload": {k: v for k, v in action.payload},
            }
        assert isinstance(action, m.PuppetPlayback)
        body = {"kind": "puppet_playback", "clip": action.clip_ref}
        if self.registry is not None:
            duration = self.registry.clip_duration_ms(action.clip_ref)
            if duration is not None:
                body["duration_ms"] = duration
            clip = self.registry.clips.get(action.clip_ref)
            if clip is not None and clip.paired_audio is not None:
                body["audio"] = clip.paired_audio
        return body

    def _emit(self, out: StepResult, command: DeviceCommand, origin: str) -> None:
        self._emitted.add(command.command_id)
        out.commands.append(command)
        self._log(out, "command", {"command": command.to_payload(), "origin": origin})

    def _emit_oob(self, out: StepResult, target: str, body: dict[str, Any], origin: str) -> None:
        self._seq += 1
        command = DeviceCommand(
            command_id=(self._seq, 0), target=target, body=body, expects_ack=False
        )
        self._emit(out, command, origin=origin)

    def _set_phase(self, out: StepResult, phase: str) -> None:
        self._phase = phase
        state = self.state()
        self._log(out, "state_change", {
            "change": "phase", "phase": phase, "detail": state.phase_detail,
        })

    def _log_input(self, out: StepResult, inp: EngineInput, disposition: str) -> None:
        self._log(out, "input", {"input": inp.to_payload(), "disposition": disposition})

    def _log(self, out: StepResult, kind: str, payload: dict[str, Any]) -> None:
        entry = CueLogEntry(t=self._now, kind=kind, payload=payload)
        self.log.append(entry)
        out.entries.append(entry)
