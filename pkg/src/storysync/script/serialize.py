"""Canonical writer for the ``.ssync.tsv`` format.

serialize_script(parse_script(text)) re-parses to a structurally equal
script; authoring tools can round-trip files through the model.
"""
from __future__ import annotations

import re
import shlex

from . import model as m
from .expr import render_expr

_HEADER_LINE = "\t".join(
    ("row_id", "scene_id", "trigger", "action_kind", "device", "payload", "branch")
)

_SAFE = re.compile(r"^[A-Za-z0-9_@%+:,./#-]+$")


def _q(value: str) -> str:
    if not value:
        return "''"
    if _SAFE.match(value):
        return value
    if '"' not in value and "\\" not in value:
        return f'"{value}"'
    return shlex.quote(value)


def _kv(*pairs: tuple[str, str]) -> str:
    return " ".join(f"{k}={_q(v)}" for k, v in pairs)


def _render_action(a: m.Action) -> tuple[str, str, str]:
    """(action_kind, device_cell, payload_cell)."""
    if isinstance(a, m.Speak):
        pairs = [("text", a.markup.render()), ("voice", a.voice)]
        if a.default_style is not None:
            pairs.append(("style", a.default_style))
        return "speak", a.actor, _kv(*pairs)
    if isinstance(a, m.PlayGesture):
        return "play_gesture", a.actor, _kv(("gesture", a.gesture_ref))
    if isinstance(a, m.Light):
        pairs = [("color", "#%02X%02X%02X" % a.color), ("pattern", a.pattern)]
        if a.pattern == "pulse":
            pairs.append(("rate", repr(a.pulse_rate_hz)))
        pairs.append(("brightness", repr(a.brightness)))
        return "light", a.device, _kv(*pairs)
    if isinstance(a, m.Sound):
        return "sound", a.device, _kv(
            ("clip", a.clip_ref),
            ("loop", "true" if a.looped else "false"),
            ("gain", repr(a.gain)),
        )
    if isinstance(a, m.Video):
        return "video", a.device, _kv(("asset", a.asset_ref))
    if isinstance(a, m.GuiShow):
        return "gui_show", a.device, _kv(("screen", a.screen_ref), *a.payload)
    if isinstance(a, m.SetVar):
        return "set_var", "", _kv(("var", a.name), ("expr", render_expr(a.expression)))
    if isinstance(a, m.AwardPoints):
        return "award_points", "", _kv(("amount", str(a.amount)))
    if isinstance(a, m.PuppetPlayback):
        return "puppet_playback", a.actor, _kv(("clip", a.clip_ref))
    assert isinstance(a, m.WaitMs)
    return "wait_ms", "", _kv(("ms", str(a.duration_ms)))


def _render_trigger(row: m.CueRow) -> str:
    text = row.trigger.render()
    if row.guard is not None:
        text += f" if {render_expr(row.guard)}"
    return text


def _render_branch(b: m.BranchSpec) -> str:
    parts = [_q(b.prompt)]
    for opt in b.options:
        parts.append(";")
        parts.append(f"{opt.choice_id} {_q(opt.label)} {opt.points} {opt.target_row_id}")
    return " ".join(parts)


def _literal(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def serialize_script(script: m.ShowScript) -> str:
    lines = [_HEADER_LINE]

    def emit(row_id, scene_id, trigger, kind, device, payload, branch):
        lines.append("\t".join((row_id, scene_id, trigger, kind, device, payload, branch)))

    if script.title:
        emit("@title", "", "", "", "", script.title, "")
    for d in script.devices:
        emit("@device", "", "", "", d.id,
             _kv(("role", d.role), ("caps", ",".join(sorted(d.capabilities)))), "")
    for v in script.variables:
        emit("@var", "", "", "", "", _kv(("name", v.name), ("value", _literal(v.initial))), "")
    for g in script.gestures:
        pairs = [("id", g.id), ("label", g.label)]
        if g.context_note:
            pairs.append(("context", g.context_note))
        pairs.append(("source", g.source))
        emit("@gesture", "", "", "", "", _kv(*pairs), "")

    for scene in script.scenes:
        for row in scene.rows:
            branch_cell = _render_branch(row.branch) if row.branch is not None else ""
            if not row.actions:
                emit(row.id, scene.id, _render_trigger(row), "", "", "", branch_cell)
                continue
            for i, action in enumerate(row.actions):
                kind, device, payload = _render_action(action)
                emit(
                    row.id,
                    scene.id,
                    _render_trigger(row) if i == 0 else "",
                    kind,
                    device,
                    payload,
                    branch_cell if i == 0 else "",
                )
    return "\n".join(lines) + "\n"
