"""Length-prefixed JSON frames: the device bus wire format.

Layout: a 4-byte big-endian payload byte count, then that many bytes of
UTF-8 JSON: {"protocol_version": ..., "type": ..., "payload": {...}}.
Payloads above 1 MiB are refused.  The operator console speaks the same
JSON documents over a message-per-frame WebSocket (no length prefix).
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import Any, Union

from .. import PROTOCOL_VERSION

MSG_TYPES = frozenset(
    {
        "hello",
        "register",
        "command",
        "ack",
        "event",
        "operator_input",
        "state_snapshot",
        "error",
        "bye",
    }
)

HEADER_SIZE = 4
MAX_PAYLOAD_BYTES = 1024 * 1024  # 1 MiB


class FrameError(ValueError):
    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(f"{code}: {message}")


class FrameTooLarge(FrameError):
    def __init__(self, size: int):
        super().__init__("FrameTooLarge", f"payload is {size} bytes (max {MAX_PAYLOAD_BYTES})")


class MalformedJson(FrameError):
    def __init__(self, message: str):
        super().__init__("MalformedJson", message)


class UnknownType(FrameError):
    def __init__(self, msg_type: Any):
        super().__init__("UnknownType", f"unknown msg_type {msg_type!r}")


@dataclass(frozen=True)
class Frame:
    msg_type: str
    payload: dict[str, Any] = field(default_factory=dict)
    protocol_version: str = PROTOCOL_VERSION

    def to_json(self) -> str:
        return json.dumps(
            {
                "protocol_version": self.protocol_version,
                "type": self.msg_type,
                "payload": self.payload,
            },
            sort_keys=True,
            separators=(",", ":"),
        )


def frame_from_document(doc: Any) -> Frame:
    if not isinstance(doc, dict):
        raise MalformedJson("frame must be a JSON object")
    msg_type = doc.get("type")
    if msg_type not in MSG_TYPES:
        raise UnknownType(msg_type)
    payload = doc.get("payload", {})
    if not isinstance(payload, dict):
        raise MalformedJson("payload must be a JSON object")
    return Frame(
        msg_type=msg_type,
        payload=payload,
        protocol_version=str(doc.get("protocol_version", "")),
    )


def frame_from_json(text: str) -> Frame:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedJson(str(exc)) from exc
    return frame_from_document(doc)


def encode_frame(frame: Frame) -> bytes:
    body = frame.to_json().encode("utf-8")
    if len(body) > MAX_PAYLOAD_BYTES:
        raise FrameTooLarge(len(body))
    return struct.pack(">I", len(body)) + body


def decode_frame(data: bytes) -> Frame:
    """Decode exactly one complete frame (prefix plus body)."""
    decoder = FrameDecoder()
    frames = decoder.feed(data)
    if len(frames) != 1 or decoder.pending_bytes:
        raise MalformedJson(f"expected exactly one frame, got {len(frames)}")
    return frames[0]


class FrameDecoder:
    """Incremental decoder: feed arbitrary chunks, collect whole frames.

    Bytes may arrive one at a time; a frame is produced only once its
    full body is buffered.  feed() raises on the first malformed frame;
    feed_events() instead yields FrameError objects in-stream so a
    server can answer one bad frame and keep the session open.  A
    FrameTooLarge length prefix is unrecoverable either way (the stream
    can no longer be re-synchronized).
    """

    def __init__(self):
        self._buf = bytearray()

    @property
    def pending_bytes(self) -> int:
        return len(self._buf)

    def _next(self) -> Union[Frame, FrameError, None]:
        if len(self._buf) < HEADER_SIZE:
            return None
        (size,) = struct.unpack(">I", self._buf[:HEADER_SIZE])
        if size > MAX_PAYLOAD_BYTES:
            raise FrameTooLarge(size)
        if len(self._buf) < HEADER_SIZE + size:
            return None
        body = bytes(self._buf[HEADER_SIZE : HEADER_SIZE + size])
        del self._buf[: HEADER_SIZE + size]
        try:
            return frame_from_json(body.decode("utf-8"))
        except UnicodeDecodeError as exc:
            return MalformedJson(f"body is not UTF-8: {exc}")
        except FrameError as exc:
            return exc

    def feed(self, data: bytes) -> list[Frame]:
        frames: list[Frame] = []
        for item in self.feed_events(data):
            if isinstance(item, FrameError):
                raise item
            frames.append(item)
        return frames

    def feed_events(self, data: bytes) -> list[Union[Frame, FrameError]]:
        self._buf.extend(data)
        out: list[Union[Frame, FrameError]] = []
        while True:
            item = self._next()
            if item is None:
                return out
            out.append(item)
