"""Parser for the ``.ssync.tsv`` show-script format.

A script is UTF-8 tab-separated values with the fixed header

    row_id	scene_id	trigger	action_kind	device	payload	branch

Each line after the header is either a directive or a cue line.  Blank
lines and lines whose first cell starts with ``#`` are skipped.

Directives declare script-level data; their ``row_id`` cell names them:

    @title    payload = show title (plain text)
    @device   device = id, payload = role=<role> caps=<kind,kind,...>
    @var      payload = name=<name> value=<int|true|false|string>
    @gesture  payload = id=<id> label=<text> [context=<text>]
              source=builtin | source=clip:<relative path>

A cue line contributes one action to a row; consecutive lines sharing a
``row_id`` form one multi-action row (the batch completes on a barrier
of all acknowledged commands).  ``trigger`` is ``auto``,
``after_prev_delay:<ms>`` or ``operator_gate:<signal>``, optionally
followed by `` if <expr>`` to guard the whole row.  ``payload`` cells
hold shell-style ``key=value`` tokens (quote values containing spaces).
The ``branch`` cell, on at most one line of a row, reads

    "Prompt text" ; choice_id "Label" <points> <target_row_id> ; ...
"""
from __future__ import annotations

import shlex
from dataclasses import dataclass
from typing import Optional, Union

from .. import markup as mk
from . import model as m
from .expr import Expr, ExprError, parse_expr

HEADER = ("row_id", "scene_id", "trigger", "action_kind", "device", "payload", "branch")

_DIRECTIVES = ("@title", "@device", "@var", "@gesture")


@dataclass(frozen=True)
class ParseError:
    line: int
    column: str
    code: str
    message: str

    def __str__(self) -> str:
        return f"line {self.line}, {self.column}: {self.code}: {self.message}"


class ScriptParseError(ValueError):
    """Raised when a script fails to parse; carries every error found."""

    def __init__(self, errors: list[ParseError]):
        self.errors = errors
        super().__init__("\n".join(str(e) for e in errors))


class _Collector:
    def __init__(self):
        self.errors: list[ParseError] = []

    def error(self, line: int, column: str, code: str, message: str) -> None:
        self.errors.append(ParseError(line, column, code, message))


def _split_kv(cell: str, line: int, column: str, errs: _Collector) -> Optional[dict[str, str]]:
    try:
        tokens = shlex.split(cell, posix=True)
    except ValueError as exc:
        errs.error(line, column, "BadPayload", f"unbalanced quoting: {exc}")
        return None
    out: dict[str, str] = {}
    for tok in tokens:
        key, sep, value = tok.partition("=")
        if not sep or not key:
            errs.error(line, column, "BadPayload", f"expected key=value, got {tok!r}")
            return None
        if key in out:
            errs.error(line, column, "BadPayload", f"duplicate key {key!r}")
            return None
        out[key] = value
    return out


def _require(
    kv: dict[str, str], keys: tuple[str, ...], line: int, column: str, errs: _Collector
) -> bool:
    missing = [k for k in keys if k not in kv]
    if missing:
        errs.error(line, column, "BadPayload", f"missing key(s): {', '.join(missing)}")
        return False
    return True


def _reject_extras(
    kv: dict[str, str], allowed: tuple[str, ...], line: int, column: str, errs: _Collector
) -> None:
    extras = [k for k in kv if k not in allowed]
    if extras:
        errs.error(line, column, "BadPayload", f"unknown key(s): {', '.join(extras)}")


def _parse_unit(value: str, what: str, line: int, column: str, errs: _Collector) -> Optional[float]:
    try:
        out = float(value)
    except ValueError:
        errs.error(line, column, "BadPayload", f"{what} must be a number, got {value!r}")
        return None
    if not 0.0 <= out <= 1.0:
        errs.error(line, column, "BadPayload", f"{what} must be in [0, 1], got {value}")
        return None
    return out


def _parse_int(value: str, what: str, line: int, column: str, errs: _Collector) -> Optional[int]:
    try:
        return int(value)
    except ValueError:
        errs.error(line, column, "BadPayload", f"{what} must be an integer, got {value!r}")
        return None


def _parse_bool(value: str, what: str, line: int, column: str, errs: _Collector) -> Optional[bool]:
    if value in ("true", "false"):
        return value == "true"
    errs.error(line, column, "BadPayload", f"{what} must be true or false, got {value!r}")
    return None


def _parse_color(value: str, line: int, errs: _Collector) -> Optional[tuple[int, int, int]]:
    if value.startswith("#"):
        hexpart = value[1:]
        if len(hexpart) == 6:
            try:
                return tuple(int(hexpart[i : i + 2], 16) for i in (0, 2, 4))  # type: ignore[return-value]
            except ValueError:
                pass
        errs.error(line, "payload", "BadColor", f"bad hex color {value!r} (want #RRGGBB)")
        return None
    parts = value.split(",")
    if len(parts) == 3:
        try:
            rgb = tuple(int(p) for p in parts)
        except ValueError:
            rgb = None
        if rgb is not None and all(0 <= c <= 255 for c in rgb):
            return rgb  # type: ignore[return-value]
    errs.error(line, "payload", "BadColor", f"bad color {value!r} (want #RRGGBB or r,g,b 0-255)")
    return None


def _parse_trigger(cell: str, line: int, errs: _Collector) -> tuple[Optional[m.Trigger], Optional[Expr]]:
    text = cell.strip()
    guard: Optional[Expr] = None
    if " if " in text:
        text, _, guard_src = text.partition(" if ")
        text = text.strip()
        try:
            guard = parse_expr(guard_src)
        except ExprError as exc:
            errs.error(line, "trigger", "MalformedExpression", str(exc))
            return None, None
    if text == "auto":
        return m.AUTO, guard
    if text.startswith("after_prev_delay:"):
        raw = text.split(":", 1)[1]
        try:
            ms = int(raw)
        except ValueError:
            ms = -1
        if ms < 0:
            errs.error(line, "trigger", "BadTrigger", f"delay must be an integer >= 0 ms, got {raw!r}")
            return None, None
        return m.Trigger("after_prev_delay", delay_ms=ms), guard
    if text.startswith("operator_gate:"):
        signal = text.split(":", 1)[1]
        if not signal:
            errs.error(line, "trigger", "BadTrigger", "operator_gate needs a signal name")
            return None, None
        return m.Trigger("operator_gate", signal=signal), guard
    errs.error(
        line,
        "trigger",
        "BadTrigger",
        f"unknown trigger {text!r} (auto, after_prev_delay:<ms>, operator_gate:<signal>)",
    )
    return None, None


def _parse_action(
    kind: str, device: str, payload: str, line: int, errs: _Collector
) -> Optional[m.Action]:
    kv = _split_kv(payload, line, "payload", errs)
    if kv is None:
        return None

    if kind in m.INTERNAL_KINDS:
        if device:
            errs.error(line, "device", "BadPayload", f"{kind} takes no device, got {device!r}")
            return None
    elif not device:
        errs.error(line, "device", "BadPayload", f"{kind} needs a device id")
        return None

    if kind == "speak":
        if not _require(kv, ("text", "voice"), line, "payload", errs):
            return None
        _reject_extras(kv, ("text", "voice", "style"), line, "payload", errs)
        style = kv.get("style")
        if style is not None and style not in mk.STYLES:
            errs.error(
                line, "payload", "BadPayload",
                f"unknown style {style!r}; legal styles: {', '.join(mk.STYLES)}",
            )
            return None
        try:
            markup = mk.tokenize(kv["text"])
        except mk.MarkupError as exc:
            errs.error(line, "payload", "BadMarkup", str(exc))
            return None
        return m.Speak(actor=device, markup=markup, voice=kv["voice"], default_style=style)

    if kind == "play_gesture":
        if not _require(kv, ("gesture",), line, "payload", errs):
            return None
        _reject_extras(kv, ("gesture",), line, "payload", errs)
        return m.PlayGesture(actor=device, gesture_ref=kv["gesture"])

    if kind == "light":
        if not _require(kv, ("color",), line, "payload", errs):
            return None
        _reject_extras(kv, ("color", "pattern", "rate", "brightness"), line, "payload", errs)
        color = _parse_color(kv["color"], line, errs)
        if color is None:
            return None
        pattern = kv.get("pattern", "steady")
        rate = None
        if pattern == "pulse":
            if "rate" not in kv:
                errs.error(line, "payload", "BadPayload", "pulse pattern needs rate=<hz>")
                return None
            try:
                rate = float(kv["rate"])
            except ValueError:
                rate = 0.0
            if rate <= 0:
                errs.error(line, "payload", "BadPayload", f"pulse rate must be positive, got {kv['rate']!r}")
                return None
        elif pattern != "steady":
            errs.error(line, "payload", "BadPayload", f"pattern must be steady or pulse, got {pattern!r}")
            return None
        elif "rate" in kv:
            errs.error(line, "payload", "BadPayload", "rate only applies to pattern=pulse")
            return None
        brightness = _parse_unit(kv.get("brightness", "1.0"), "brightness", line, "payload", errs)
        if brightness is None:
            return None
        return m.Light(device=device, color=color, pattern=pattern, pulse_rate_hz=rate, brightness=brightness)

    if kind == "sound":
        if not _require(kv, ("clip",), line, "payload", errs):
            return None
        _reject_extras(kv, ("clip", "loop", "gain"), line, "payload", errs)
        looped = False
        if "loop" in kv:
            parsed = _parse_bool(kv["loop"], "loop", line, "payload", errs)
            if parsed is None:
                return None
            looped = parsed
        gain = _parse_unit(kv.get("gain", "1.0"), "gain", line, "payload", errs)
        if gain is None:
            return None
        return m.Sound(device=device, clip_ref=kv["clip"], looped=looped, gain=gain)

    if kind == "video":
        if not _require(kv, ("asset",), line, "payload", errs):
            return None
        _reject_extras(kv, ("asset",), line, "payload", errs)
        return m.Video(device=device, asset_ref=kv["asset"])

    if kind == "gui_show":
        if not _require(kv, ("screen",), line, "payload", errs):
            return None
        extras = tuple(sorted((k, v) for k, v in kv.items() if k != "screen"))
        return m.GuiShow(device=device, screen_ref=kv["screen"], payload=extras)

    if kind == "set_var":
        if not _require(kv, ("var", "expr"), line, "payload", errs):
            return None
        _reject_extras(kv, ("var", "expr"), line, "payload", errs)
        try:
            expr = parse_expr(kv["expr"])
        except ExprError as exc:
            errs.error(line, "payload", "MalformedExpression", str(exc))
            return None
        return m.SetVar(name=kv["var"], expression=expr)

    if kind == "award_points":
        if not _require(kv, ("amount",), line, "payload", errs):
            return None
        _reject_extras(kv, ("amount",), line, "payload", errs)
        amount = _parse_int(kv["amount"], "amount", line, "payload", errs)
        if amount is None:
            return None
        return m.AwardPoints(amount=amount)

    if kind == "puppet_playback":
        if not _require(kv, ("clip",), line, "payload", errs):
            return None
        _reject_extras(kv, ("clip",), line, "payload", errs)
        return m.PuppetPlayback(actor=device, clip_ref=kv["clip"])

    if kind == "wait_ms":
        if not _require(kv, ("ms",), line, "payload", errs):
            return None
        _reject_extras(kv, ("ms",), line, "payload", errs)
        ms = _parse_int(kv["ms"], "ms", line, "payload", errs)
        if ms is None:
            return None
        if ms < 0:
            errs.error(line, "payload", "BadPayload", f"wait duration must be >= 0, got {ms}")
            return None
        return m.WaitMs(duration_ms=ms)

    errs.error(
        line, "action_kind", "UnknownActionKind",
        f"unknown action kind {kind!r}; legal kinds: {', '.join(sorted(m.ACTION_KINDS))}",
    )
    return None


def _parse_branch(cell: str, line: int, errs: _Collector) -> Optional[m.BranchSpec]:
    lex = shlex.shlex(cell, posix=True, punctuation_chars=";")
    lex.whitespace_split = True
    lex.commenters = ""
    try:
        tokens = list(lex)
    except ValueError as exc:
        errs.error(line, "branch", "BadBranch", f"unbalanced quoting: {exc}")
        return None
    if not tokens:
        errs.error(line, "branch", "BadBranch", "empty branch cell")
        return None
    prompt = tokens[0]
    rest = tokens[1:]
    options: list[m.BranchOption] = []
    seen: set[str] = set()
    while rest:
        if rest[0] != ";":
            errs.error(line, "branch", "BadBranch", f"expected ';' before option, got {rest[0]!r}")
            return None
        chunk, rest = rest[1:5], rest[5:]
        if len(chunk) != 4:
            errs.error(
                line, "branch", "BadBranch",
                'each option reads: choice_id "Label" <points> <target_row_id>',
            )
            return None
        choice_id, label, points_raw, target = chunk
        try:
            points = int(points_raw)
        except ValueError:
            errs.error(line, "branch", "BadBranch", f"option points must be an integer, got {points_raw!r}")
            return None
        if choice_id in seen:
            errs.error(line, "branch", "BadBranch", f"duplicate choice id {choice_id!r}")
            return None
        seen.add(choice_id)
        options.append(m.BranchOption(choice_id, label, points, target))
    if not options:
        errs.error(line, "branch", "BadBranch", "branch needs at least one option")
        return None
    return m.BranchSpec(prompt=prompt, options=tuple(options))


@dataclass
class _PendingRow:
    id: str
    scene_id: str
    trigger: m.Trigger
    guard: Optional[Expr]
    actions: list[m.Action]
    branch: Optional[m.BranchSpec]
    line_no: int
    broken: bool = False


def parse_script(source: Union[str, bytes]) -> m.ShowScript:
    """Parse script text into a ShowScript.

    Collects every error it can find before raising ScriptParseError;
    cross-reference checks (device ids, branch targets, gesture refs)
    are deferred to validate_script.
    """
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    errs = _Collector()

    lines = source.splitlines()
    if not lines:
        raise ScriptParseError([ParseError(1, "row_id", "BadHeader", "empty file")])
    header = tuple(c.strip() for c in lines[0].split("\t"))
    if header != HEADER:
        raise ScriptParseError(
            [ParseError(1, "row_id", "BadHeader", f"header must be: {chr(9).join(HEADER)}")]
        )

    title = ""
    devices: list[m.DeviceDecl] = []
    variables: list[m.VarDecl] = []
    gestures: list[m.GestureEntry] = []
    scene_order: list[str] = []
    scene_rows: dict[str, list[m.CueRow]] = {}
    seen_row_ids: set[str] = set()
    pending: Optional[_PendingRow] = None

    def flush_pending():
        nonlocal pending
        if pending is None:
            return
        if not pending.broken:
            if not pending.actions and pending.branch is None:
                errs.error(pending.line_no, "action_kind", "EmptyRow",
                           f"row {pending.id!r} has neither actions nor a branch")
            else:
                row = m.CueRow(
                    id=pending.id,
                    trigger=pending.trigger,
                    actions=tuple(pending.actions),
                    branch=pending.branch,
                    guard=pending.guard,
                    line_no=pending.line_no,
                )
                if pending.scene_id not in scene_rows:
                    scene_order.append(pending.scene_id)
                    scene_rows[pending.scene_id] = []
                scene_rows[pending.scene_id].append(row)
        pending = None

    for line_no, raw_line in enumerate(lines[1:], start=2):
        if not raw_line.strip():
            continue
        cells = raw_line.split("\t")
        if cells[0].lstrip().startswith("#"):
            continue
        if len(cells) != len(HEADER):
            errs.error(line_no, "row_id", "BadHeader",
                       f"expected {len(HEADER)} tab-separated cells, got {len(cells)}")
            flush_pending()
            continue
        row_id, scene_id, trigger_cell, action_kind, device, payload, branch_cell = (
            c.strip() for c in cells
        )

        if row_id.startswith("@"):
            flush_pending()
            _parse_directive(
                row_id, device, payload, line_no, errs,
                devices, variables, gestures,
            )
            if row_id == "@title":
                title = payload
            continue

        if not row_id:
            errs.error(line_no, "row_id", "BadPayload", "cue line needs a row_id")
            continue

        continuation = pending is not None and pending.id == row_id
        if continuation:
            assert pending is not None
            if scene_id and scene_id != pending.scene_id:
                errs.error(line_no, "scene_id", "BadPayload",
                           f"row {row_id!r} continues in a different scene {scene_id!r}")
                pending.broken = True
            if trigger_cell:
                # continuation lines leave the trigger cell empty or repeat it
                trig, guard = _parse_trigger(trigger_cell, line_no, errs)
                if trig is None:
                    pending.broken = True
                elif trig != pending.trigger or guard != pending.guard:
                    errs.error(line_no, "trigger", "BadTrigger",
                               f"row {row_id!r} restates a different trigger")
                    pending.broken = True
        else:
            flush_pending()
            if row_id in seen_row_ids:
                errs.error(line_no, "row_id", "DuplicateId",
                           f"row id {row_id!r} already used (actions of one row must be consecutive lines)")
                continue
            seen_row_ids.add(row_id)
            if not scene_id:
                errs.error(line_no, "scene_id", "BadPayload", f"row {row_id!r} needs a scene_id")
                continue
            trig, guard = _parse_trigger(trigger_cell, line_no, errs)
            if trig is None:
                trig, guard = m.AUTO, None  # placeholder so later lines still parse
                broken = True
            else:
                broken = False
            pending = _PendingRow(
                id=row_id, scene_id=scene_id, trigger=trig, guard=guard,
                actions=[], branch=None, line_no=line_no, broken=broken,
            )

        assert pending is not None
        if action_kind:
            action = _parse_action(action_kind, device, payload, line_no, errs)
            if action is None:
                pending.broken = True
            else:
                pending.actions.append(action)
        elif device or payload:
            errs.error(line_no, "action_kind", "BadPayload",
                       "device/payload cells need an action_kind")
            pending.broken = True

        if branch_cell:
            if pending.branch is not None:
                errs.error(line_no, "branch", "BadBranch",
                           f"row {row_id!r} declares more than one branch cell")
                pending.broken = True
            else:
                branch = _parse_branch(branch_cell, line_no, errs)
                if branch is None:
                    pending.broken = True
                else:
                    pending.branch = branch

    flush_pending()

    if errs.errors:
        raise ScriptParseError(errs.errors)

    scenes = tuple(m.Scene(id=sid, rows=tuple(scene_rows[sid])) for sid in scene_order)
    return m.ShowScript(
        title=title,
        devices=tuple(devices),
        variables=tuple(variables),
        gestures=tuple(gestures),
        scenes=scenes,
    )


def _parse_directive(
    name: str,
    device_cell: str,
    payload: str,
    line_no: int,
    errs: _Collector,
    devices: list[m.DeviceDecl],
    variables: list[m.VarDecl],
    gestures: list[m.GestureEntry],
) -> None:
    if name == "@title":
        if not payload:
            errs.error(line_no, "payload", "BadDirective", "@title needs a payload")
        return

    if name == "@device":
        if not device_cell:
            errs.error(line_no, "device", "BadDirective", "@device needs a device id")
            return
        kv = _split_kv(payload, line_no, "payload", errs)
        if kv is None or not _require(kv, ("role", "caps"), line_no, "payload", errs):
            return
        _reject_extras(kv, ("role", "caps"), line_no, "payload", errs)
        role = kv["role"]
        if role not in m.ROLES:
            errs.error(line_no, "payload", "BadDirective",
                       f"unknown role {role!r}; legal roles: {', '.join(m.ROLES)}")
            return
        caps = frozenset(c for c in kv["caps"].split(",") if c)
        unknown = caps - m.ACTION_KINDS
        if unknown:
            errs.error(line_no, "payload", "UnknownActionKind",
                       f"unknown capability kind(s): {', '.join(sorted(unknown))}")
            return
        if not caps:
            errs.error(line_no, "payload", "BadDirective", "caps must be non-empty")
            return
        if any(d.id == device_cell for d in devices):
            errs.error(line_no, "device", "DuplicateId", f"device {device_cell!r} already declared")
            return
        devices.append(m.DeviceDecl(id=device_cell, role=role, capabilities=caps))
        return

    if name == "@var":
        kv = _split_kv(payload, line_no, "payload", errs)
        if kv is None or not _require(kv, ("name", "value"), line_no, "payload", errs):
            return
        _reject_extras(kv, ("name", "value"), line_no, "payload", errs)
        if any(v.name == kv["name"] for v in variables):
            errs.error(line_no, "payload", "DuplicateId", f"variable {kv['name']!r} already declared")
            return
        raw = kv["value"]
        value: Union[int, str, bool]
        if raw in ("true", "false"):
            value = raw == "true"
        elif raw.lstrip("-").isdigit():
            value = int(raw)
        else:
            value = raw
        variables.append(m.VarDecl(name=kv["name"], initial=value))
        return

    if name == "@gesture":
        kv = _split_kv(payload, line_no, "payload", errs)
        if kv is None or not _require(kv, ("id", "source"), line_no, "payload", errs):
            return
        _reject_extras(kv, ("id", "label", "context", "source"), line_no, "payload", errs)
        if any(g.id == kv["id"] for g in gestures):
            errs.error(line_no, "payload", "DuplicateId", f"gesture {kv['id']!r} already declared")
            return
        source = kv["source"]
        clip_path: Optional[str] = None
        if source.startswith("clip:"):
            clip_path = source[len("clip:"):]
            if not clip_path:
                errs.error(line_no, "payload", "BadDirective", "clip source needs a path")
                return
        elif source != "builtin":
            errs.error(line_no, "payload", "BadDirective",
                       f"source must be builtin or clip:<path>, got {source!r}")
            return
        gestures.append(
            m.GestureEntry(
                id=kv["id"],
                label=kv.get("label", kv["id"]),
                context_note=kv.get("context", ""),
                clip_path=clip_path,
            )
        )
        return

    errs.error(line_no, "row_id", "BadDirective",
               f"unknown directive {name!r}; legal: {', '.join(_DIRECTIVES)}")
