from .frames import (
    Frame,
    FrameDecoder,
    FrameError,
    FrameTooLarge,
    HEADER_SIZE,
    MalformedJson,
    MAX_PAYLOAD_BYTES,
    MSG_TYPES,
    UnknownType,
    decode_frame,
    encode_frame,
    frame_from_json,
)
from .headless import DeadlockError, HeadlessResult, RunawayShowError, run_headless
from .sim import SimulatedDevice, speak_duration_ms

__all__ = [
    "DeadlockError",
    "Frame",
    "FrameDecoder",
    "FrameError",
    "FrameTooLarge",
    "HEADER_SIZE",
    "HeadlessResult",
    "MalformedJson",
    "MAX_PAYLOAD_BYTES",
    "MSG_TYPES",
    "RunawayShowError",
    "SimulatedDevice",
    "UnknownType",
    "decode_frame",
    "encode_frame",
    "frame_from_json",
    "run_headless",
    "speak_duration_ms",
]
