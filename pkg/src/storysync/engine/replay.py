"""Re-run a show from its recorded inputs and verify determinism."""
from __future__ import annotations

from typing import Optional

from ..script import model as m
from ..script.registry import GestureRegistry
from .inputs import EngineInput, input_from_payload
from .log import CueLogEntry
from .machine import ShowEngine


class DivergenceDetected(AssertionError):
    """A replay produced a log that differs from the reference run."""

    def __init__(self, line_no: int, expected: Optional[str], actual: Optional[str]):
        self.line_no = line_no
        self.expected = expected
        self.actual = actual
        super().__init__(
            f"replay diverged at log line {line_no}:\n"
            f"  reference: {expected!r}\n"
            f"  replay:    {actual!r}"
        )


def extract_inputs(log: list[CueLogEntry]) -> list[tuple[int, EngineInput]]:
    """The timestamped inputs of a run, in injection order."""
    out: list[tuple[int, EngineInput]] = []
    for entry in log:
        if entry.kind == "input":
            out.append((entry.t, input_from_payload(entry.payload["input"])))
    return out


def replay(
    script: m.ShowScript,
    inputs: list[tuple[int, EngineInput]],
    registry: Optional[GestureRegistry] = None,
    start_at_ms: int = 0,
) -> list[CueLogEntry]:
    engine = ShowEngine(script, registry=registry)
    engine.start(at_ms=start_at_ms)
    for t, inp in inputs:
        engine.inject(inp, at_ms=t)
    return engine.log


def assert_replay_matches(
    script: m.ShowScript,
    reference: list[CueLogEntry],
    registry: Optional[GestureRegistry] = None,
) -> list[CueLogEntry]:
    """Replay a run from its own extracted inputs; raise DivergenceDetected
    on the first differing log line."""
    start = reference[0].t if reference else 0
    produced = replay(script, extract_inputs(reference), registry=registry, start_at_ms=start)
    for i, (want, got) in enumerate(zip(reference, produced), start=1):
        if want.to_json() != got.to_json():
            raise DivergenceDetected(i, want.to_json(), got.to_json())
    if len(reference) != len(produced):
        longer, shorter = (reference, produced) if len(reference) > len(produced) else (produced, reference)
        extra = longer[len(shorter)]
        if len(reference) > len(produced):
            raise DivergenceDetected(len(shorter) + 1, extra.to_json(), None)
        raise DivergenceDetected(len(shorter) + 1, None, extra.to_json())
    return produced
