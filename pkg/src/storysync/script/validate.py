"""Cross-reference and safety checks over a parsed ShowScript.

validate_script is pure: the same script always yields the same
diagnostic list, ordered by scene then row.  A script is runnable iff
no diagnostic has severity "error"; warnings flag authoring smells
(unreachable rows, single-option branches) without blocking a run.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from . import model as m
from .expr import ExprError, expr_names, infer_type

SEVERITIES = ("error", "warning")


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    row_id: str  # "-" for script-level findings
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity}\t{self.row_id}\t{self.code}\t{self.message}"


def validate_script(script: m.ShowScript) -> list[Diagnostic]:
    out: list[Diagnostic] = []

    def error(row_id: str, code: str, message: str) -> None:
        out.append(Diagnostic("error", row_id, code, message))

    def warning(row_id: str, code: str, message: str) -> None:
        out.append(Diagnostic("warning", row_id, code, message))

    devices = script.device_map()
    var_types = {v.name: v.type_name for v in script.variables}
    gesture_ids = script.gesture_ids()
    locations = script.row_locations()

    if not script.scenes:
        error("-", "EmptyScript", "script declares no cue rows")

    for decl in script.devices:
        bad = decl.capabilities - m.ROLE_ACTIONS[decl.role]
        if bad:
            error(
                "-", "InvalidCapability",
                f"device {decl.id!r} (role {decl.role}) cannot accept: {', '.join(sorted(bad))}",
            )

    def check_gesture_ref(row_id: str, ref: str) -> None:
        if not m.is_clip_ref(ref) and ref not in gesture_ids:
            error(
                row_id, "UnknownGesture",
                f"gesture {ref!r} is not in the registry and is not a *{m.CLIP_SUFFIX} clip path",
            )

    def check_expr(row_id: str, expr, expect: str, what: str) -> None:
        missing = sorted(expr_names(expr) - set(var_types))
        if missing:
            error(row_id, "UnknownVariable", f"{what} references undeclared: {', '.join(missing)}")
            return
        try:
            actual = infer_type(expr, var_types)
        except ExprError as exc:
            error(row_id, "TypeMismatch", f"{what}: {exc}")
            return
        if actual != expect:
            error(row_id, "TypeMismatch", f"{what} must be {expect}, evaluates to {actual}")

    for _si, _scene, _ri, row in script.iter_rows():
        if row.guard is not None:
            check_expr(row.id, row.guard, "bool", "guard")

        for action in row.actions:
            device_id = m.action_device(action)
            if device_id is not None:
                decl = devices.get(device_id)
                if decl is None:
                    error(row.id, "UnknownDevice", f"device {device_id!r} is not declared")
                elif action.kind not in decl.capabilities:
                    error(
                        row.id, "CapabilityMismatch",
                        f"device {device_id!r} (role {decl.role}, caps "
                        f"{','.join(sorted(decl.capabilities))}) does not accept {action.kind}",
                    )
            if isinstance(action, m.Speak):
                for ref in action.markup.gesture_refs:
                    check_gesture_ref(row.id, ref)
            elif isinstance(action, m.PlayGesture):
                check_gesture_ref(row.id, action.gesture_ref)
            elif isinstance(action, m.Light):
                if action.pattern == "pulse" and action.pulse_rate_hz is not None:
                    if action.pulse_rate_hz > m.MAX_PULSE_RATE_HZ:
                        error(
                            row.id, "PulseRateTooHigh",
                            f"pulse rate {action.pulse_rate_hz:g} Hz exceeds the "
                            f"{m.MAX_PULSE_RATE_HZ:g} Hz photosensitivity cap",
                        )
            elif isinstance(action, m.AwardPoints):
                if action.amount < 0:
                    error(row.id, "NegativePoints", f"award of {action.amount} would decrease points")
            elif isinstance(action, m.SetVar):
                if action.name not in var_types:
                    error(row.id, "UnknownVariable", f"set_var targets undeclared {action.name!r}")
                else:
                    check_expr(row.id, action.expression, var_types[action.name],
                               f"set_var {action.name}")

        if row.branch is not None:
            if len(row.branch.options) == 1:
                warning(row.id, "DegenerateBranch",
                        "branch has a single option (stub scene?)")
            for opt in row.branch.options:
                if opt.target_row_id not in locations:
                    error(row.id, "DanglingBranchTarget",
                          f"option {opt.choice_id!r} targets missing row {opt.target_row_id!r}")
                if opt.points < 0:
                    error(row.id, "NegativePoints",
                          f"option {opt.choice_id!r} awards {opt.points}, which would decrease points")

    out.extend(_unreachable_rows(script, locations))
    return out


def _unreachable_rows(
    script: m.ShowScript, locations: dict[str, tuple[int, int]]
) -> list[Diagnostic]:
    """Reachability over sequential flow plus branch targets, seeded at
    every scene entry. Branch rows never fall through."""
    reached: set[tuple[int, int]] = set()
    queue: deque[tuple[int, int]] = deque()
    for si, scene in enumerate(script.scenes):
        if scene.rows:
            queue.append((si, 0))

    flat: dict[tuple[int, int], m.CueRow] = {
        (si, ri): row for si, _scene, ri, row in script.iter_rows()
    }

    while queue:
        loc = queue.popleft()
        if loc in reached or loc not in flat:
            continue
        reached.add(loc)
        si, ri = loc
        row = flat[loc]
        if row.branch is not None:
            for opt in row.branch.options:
                target = locations.get(opt.target_row_id)
                if target is not None:
                    queue.append(target)
        else:
            if ri + 1 < len(script.scenes[si].rows):
                queue.append((si, ri + 1))
            elif si + 1 < len(script.scenes):
                queue.append((si + 1, 0))

    out = []
    for si, _scene, ri, row in script.iter_rows():
        if (si, ri) not in reached:
            out.append(
                Diagnostic("warning", row.id, "UnreachableRow",
                           "row cannot be reached from any scene entry")
            )
    return out


def has_errors(diagnostics: list[Diagnostic]) -> bool:
    return any(d.severity == "error" for d in diagnostics)


def format_diagnostics(diagnostics: list[Diagnostic]) -> str:
    return "\n".join(str(d) for d in diagnostics)
