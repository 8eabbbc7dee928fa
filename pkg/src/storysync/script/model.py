"""Typed model of a parsed show script."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from ..markup import DialogueMarkup
from .expr import Expr

ROLES = ("robot_actor", "light", "audio", "screen", "prop")

# Which action kinds each device role accepts. Declared capabilities must be
# a subset of the role's row here.
ROLE_ACTIONS: dict[str, frozenset[str]] = {
    "robot_actor": frozenset({"speak", "play_gesture", "puppet_playback"}),
    "light": frozenset({"light"}),
    "audio": frozenset({"sound"}),
    "screen": frozenset({"gui_show", "video"}),
    "prop": frozenset({"sound", "gui_show"}),
}

ACTION_KINDS = frozenset(
    {
        "speak",
        "play_gesture",
        "light",
        "sound",
        "video",
        "gui_show",
        "set_var",
        "award_points",
        "puppet_playback",
        "wait_ms",
    }
)

# Kinds handled inside the engine; never routed to a device.
INTERNAL_KINDS = frozenset({"set_var", "award_points", "wait_ms"})

CLIP_SUFFIX = ".gesture.json"

MAX_PULSE_RATE_HZ = 20.0  # photosensitivity cap


@dataclass(frozen=True)
class DeviceDecl:
    id: str
    role: str
    capabilities: frozenset[str]


@dataclass(frozen=True)
class VarDecl:
    name: str
    initial: Union[int, str, bool]

    @property
    def type_name(self) -> str:
        if isinstance(self.initial, bool):
            return "bool"
        if isinstance(self.initial, int):
            return "int"
        return "str"


@dataclass(frozen=True)
class GestureEntry:
    id: str
    label: str
    context_note: str = ""
    clip_path: Optional[str] = None  # None for builtin library gestures

    @property
    def source(self) -> str:
        return "builtin" if self.clip_path is None else f"clip:{self.clip_path}"


@dataclass(frozen=True)
class Speak:
    kind = "speak"
    actor: str
    markup: DialogueMarkup
    voice: str
    default_style: Optional[str] = None


@dataclass(frozen=True)
class PlayGesture:
    kind = "play_gesture"
    actor: str
    gesture_ref: str


@dataclass(frozen=True)
class Light:
    kind = "light"
    device: str
    color: tuple[int, int, int]
    pattern: str = "steady"  # steady | pulse
    pulse_rate_hz: Optional[float] = None
    brightness: float = 1.0


@dataclass(frozen=True)
class Sound:
    kind = "sound"
    device: str
    clip_ref: str
    looped: bool = False
    gain: float = 1.0


@dataclass(frozen=True)
class Video:
    kind = "video"
    device: str
    asset_ref: str


@dataclass(frozen=True)
class GuiShow:
    kind = "gui_show"
    device: str
    screen_ref: str
    payload: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class SetVar:
    kind = "set_var"
    name: str
    expression: Expr


@dataclass(frozen=True)
class AwardPoints:
    kind = "award_points"
    amount: int


@dataclass(frozen=True)
class PuppetPlayback:
    kind = "puppet_playback"
    actor: str
    clip_ref: str


@dataclass(frozen=True)
class WaitMs:
    kind = "wait_ms"
    duration_ms: int


Action = Union[
    Speak, PlayGesture, Light, Sound, Video, GuiShow, SetVar, AwardPoints, PuppetPlayback, WaitMs
]


def action_device(a: Action) -> Optional[str]:
    """Device id an action is routed to; None for engine-internal actions."""
    if isinstance(a, (Speak, PlayGesture, PuppetPlayback)):
        return a.actor
    if isinstance(a, (Light, Sound, Video, GuiShow)):
        return a.device
    return None


@dataclass(frozen=True)
class Trigger:
    mode: str  # auto | after_prev_delay | operator_gate
    delay_ms: int = 0
    signal: Optional[str] = None

    def render(self) -> str:
        if self.mode == "auto":
            return "auto"
        if self.mode == "after_prev_delay":
            return f"after_prev_delay:{self.delay_ms}"
        return f"operator_gate:{self.signal}"


AUTO = Trigger("auto")


@dataclass(frozen=True)
class BranchOption:
    choice_id: str
    label: str
    points: int
    target_row_id: str


@dataclass(frozen=True)
class BranchSpec:
    prompt: str
    options: tuple[BranchOption, ...]


@dataclass(frozen=True)
class CueRow:
    id: str
    trigger: Trigger
    actions: tuple[Action, ...]
    branch: Optional[BranchSpec] = None
    guard: Optional[Expr] = None
    line_no: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Scene:
    id: str
    rows: tuple[CueRow, ...]


@dataclass(frozen=True)
class ShowScript:
    title: str
    devices: tuple[DeviceDecl, ...]
    variables: tuple[VarDecl, ...]
    gestures: tuple[GestureEntry, ...]
    scenes: tuple[Scene, ...]

    def device_map(self) -> dict[str, DeviceDecl]:
        return {d.id: d for d in self.devices}

    def var_map(self) -> dict[str, VarDecl]:
        return {v.name: v for v in self.variables}

    def gesture_ids(self) -> frozenset[str]:
        return frozenset(g.id for g in self.gestures)

    def row_locations(self) -> dict[str, tuple[int, int]]:
        """row id -> (scene_index, row_index)."""
        locs: dict[str, tuple[int, int]] = {}
        for si, scene in enumerate(self.scenes):
            for ri, row in enumerate(scene.rows):
                locs[row.id] = (si, ri)
        return locs

    def gate_signals(self) -> frozenset[str]:
        return frozenset(
            row.trigger.signal
            for scene in self.scenes
            for row in scene.rows
            if row.trigger.mode == "operator_gate" and row.trigger.signal
        )

    def iter_rows(self):
        for si, scene in enumerate(self.scenes):
            for ri, row in enumerate(scene.rows):
                yield si, scene, ri, row


def is_clip_ref(ref: str) -> bool:
    """File-backed gesture references are clip paths, not registry ids."""
    return ref.endswith(CLIP_SUFFIX)
