"""Engine input variants and their wire/log encoding."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Union


@dataclass(frozen=True)
class OperatorSignal:
    name: str

    def to_payload(self) -> dict:
        return {"type": "operator_signal", "name": self.name}


@dataclass(frozen=True)
class PlayerChoice:
    choice_id: str

    def to_payload(self) -> dict:
        return {"type": "player_choice", "choice_id": self.choice_id}


@dataclass(frozen=True)
class DeviceAck:
    command_id: tuple[int, int]

    def to_payload(self) -> dict:
        return {"type": "device_ack", "command_id": list(self.command_id)}


@dataclass(frozen=True)
class TimerFired:
    row_id: str

    def to_payload(self) -> dict:
        return {"type": "timer_fired", "row_id": self.row_id}


@dataclass(frozen=True)
class RepairCommand:
    macro_id: str
    args: tuple[tuple[str, str], ...] = ()

    @classmethod
    def make(cls, macro_id: str, **args: str) -> "RepairCommand":
        return cls(macro_id=macro_id, args=tuple(sorted(args.items())))

    def arg(self, name: str) -> Union[str, None]:
        return dict(self.args).get(name)

    def to_payload(self) -> dict:
        return {"type": "repair", "macro_id": self.macro_id, "args": dict(self.args)}


EngineInput = Union[OperatorSignal, PlayerChoice, DeviceAck, TimerFired, RepairCommand]


def input_from_payload(payload: dict) -> EngineInput:
    kind = payload.get("type")
    if kind == "operator_signal":
        return OperatorSignal(str(payload["name"]))
    if kind == "player_choice":
        return PlayerChoice(str(payload["choice_id"]))
    if kind == "device_ack":
        cid = payload["command_id"]
        return DeviceAck((int(cid[0]), int(cid[1])))
    if kind == "timer_fired":
        return TimerFired(str(payload["row_id"]))
    if kind == "repair":
        args = payload.get("args", {})
        return RepairCommand(
            macro_id=str(payload["macro_id"]),
            args=tuple(sorted((str(k), str(v)) for k, v in args.items())),
        )
    raise ValueError(f"unknown engine input type {kind!r}")


@dataclass(frozen=True)
class DeviceCommand:
    command_id: tuple[int, int]  # (seq, sub_index), strictly ordered per run
    target: str
    body: dict[str, Any] = field(hash=False)
    expects_ack: bool = True

    def to_payload(self) -> dict:
        return {
            "command_id": list(self.command_id),
            "target": self.target,
            "body": self.body,
            "expects_ack": self.expects_ack,
        }


@dataclass(frozen=True)
class TimerRequest:
    """Ask the bus to fire TimerFired(row_id) after delay_ms of scaled time."""

    row_id: str
    delay_ms: int
    purpose: str  # "trigger" (after_prev_delay) | "wait" (wait_ms action)

    def to_payload(self) -> dict:
        return {"row_id": self.row_id, "delay_ms": self.delay_ms, "purpose": self.purpose}
