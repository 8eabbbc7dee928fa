from .inputs import (
    DeviceAck,
    DeviceCommand,
    EngineInput,
    OperatorSignal,
    PlayerChoice,
    RepairCommand,
    TimerFired,
    TimerRequest,
    input_from_payload,
)
from .log import CueLogEntry, dump_log, parse_log_line, read_log, write_log
from .machine import EngineState, InvalidScriptError, REPAIR_MACROS, ShowEngine, StepResult
from .replay import DivergenceDetected, assert_replay_matches, extract_inputs, replay

__all__ = [
    "CueLogEntry",
    "DeviceAck",
    "DeviceCommand",
    "DivergenceDetected",
    "EngineInput",
    "EngineState",
    "InvalidScriptError",
    "OperatorSignal",
    "PlayerChoice",
    "REPAIR_MACROS",
    "RepairCommand",
    "ShowEngine",
    "StepResult",
    "TimerFired",
    "TimerRequest",
    "assert_replay_matches",
    "dump_log",
    "extract_inputs",
    "input_from_payload",
    "parse_log_line",
    "read_log",
    "replay",
    "write_log",
]
