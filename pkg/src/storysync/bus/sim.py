"""Deterministic simulated devices for headless runs and rehearsal math.

A robot actor "speaks" for 300 ms plus 60 ms per character of plain
text, scaled by the utterance's rate delta; gesture and puppet playback
take their clip duration when the command carries one.  Lights, audio,
screens and props acknowledge instantly.  The constants are fixed and
documented here, never derived from a real speech engine.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

SPEAK_BASE_MS = 300
SPEAK_PER_CHAR_MS = 60


def speak_duration_ms(plain_text: str, rate_delta_pct: int = 0) -> int:
    raw = SPEAK_BASE_MS + SPEAK_PER_CHAR_MS * len(plain_text)
    return int(round(raw * 100.0 / (100 + rate_delta_pct)))


@dataclass(frozen=True)
class SimulatedDevice:
    id: str
    role: str

    def ack_delay_ms(self, body: dict[str, Any]) -> int:
        """Logical milliseconds between receiving a command and acking it."""
        kind = body.get("kind")
        if self.role == "robot_actor":
            if kind == "speak":
                return speak_duration_ms(
                    body.get("plain_text", ""), int(body.get("rate_delta_pct", 0))
                )
            if kind in ("play_gesture", "puppet_playback"):
                return int(round(float(body.get("duration_ms", 0.0))))
        return 0
