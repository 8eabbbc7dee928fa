from .expr import ExprError, eval_expr, parse_expr
from .model import (
    ACTION_KINDS,
    AUTO,
    Action,
    AwardPoints,
    BranchOption,
    BranchSpec,
    CueRow,
    DeviceDecl,
    GestureEntry,
    GuiShow,
    Light,
    PlayGesture,
    PuppetPlayback,
    ROLE_ACTIONS,
    Scene,
    SetVar,
    ShowScript,
    Sound,
    Speak,
    Trigger,
    VarDecl,
    Video,
    WaitMs,
    action_device,
)
from .parse import HEADER, ParseError, ScriptParseError, parse_script
from .registry import GestureRegistry, ResolvedGesture, load_gesture_registry
from .serialize import serialize_script
from .validate import Diagnostic, format_diagnostics, has_errors, validate_script

__all__ = [
    "ACTION_KINDS",
    "AUTO",
    "Action",
    "AwardPoints",
    "BranchOption",
    "BranchSpec",
    "CueRow",
    "DeviceDecl",
    "Diagnostic",
    "ExprError",
    "GestureEntry",
    "GestureRegistry",
    "GuiShow",
    "HEADER",
    "Light",
    "ParseError",
    "PlayGesture",
    "PuppetPlayback",
    "ROLE_ACTIONS",
    "ResolvedGesture",
    "Scene",
    "ScriptParseError",
    "SetVar",
    "ShowScript",
    "Sound",
    "Speak",
    "Trigger",
    "VarDecl",
    "Video",
    "WaitMs",
    "action_device",
    "eval_expr",
    "format_diagnostics",
    "has_errors",
    "load_gesture_registry",
    "parse_expr",
    "parse_script",
    "serialize_script",
    "validate_script",
]
