"""Headless simulation harness: a whole show without wall-clock or sockets.

Logical time is fully simulated off a single event queue, so a run's
cue log is byte-identical at any time_scale; finite scales only throttle
wall pacing between events (time_scale=inf runs as fast as possible).
Simulated devices ack per the duration model in sim.py; an auto operator
can answer every gate with its signal and every branch with its first
option, standing in for the human pair during CI runs.
"""
from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass
from pathlib import Path
from random import Random
from typing import Optional, Union

from ..engine import (
    DeviceAck,
    EngineInput,
    OperatorSignal,
    PlayerChoice,
    ShowEngine,
    StepResult,
    TimerFired,
)
from ..engine.log import CueLogEntry
from ..script import model as m
from ..script.registry import GestureRegistry
from .sim import SimulatedDevice


class DeadlockError(RuntimeError):
    """No pending event can advance the show."""

    def __init__(self, row_id: Optional[str], phase: str, detail: dict):
        self.row_id = row_id
        self.phase = phase
        super().__init__(
            f"deadlock at row {row_id!r}: phase {phase}, detail {detail}"
        )


class RunawayShowError(RuntimeError):
    """Event budget exhausted; the script probably loops via branches."""


@dataclass
class HeadlessResult:
    log: list[CueLogEntry]
    points: int
    done: bool


def run_headless(
    script: m.ShowScript,
    operator_script: Optional[list[tuple[int, EngineInput]]] = None,
    auto_operator: bool = False,
    time_scale: float = math.inf,
    registry: Optional[GestureRegistry] = None,
    ack_shuffle_seed: Optional[int] = None,
    log_path: Optional[Union[str, Path]] = None,
    max_events: int = 100_000,
) -> HeadlessResult:
    """Run a validated script to completion against simulated devices.

    operator_script entries are (logical_ms, input) pairs merged into
    the event queue.  Raises DeadlockError when the queue drains before
    the show is done, naming the stuck row.
    """
    devices = {d.id: SimulatedDevice(id=d.id, role=d.role) for d in script.devices}
    engine = ShowEngine(script, registry=registry)
    rng = Random(ack_shuffle_seed) if ack_shuffle_seed is not None else None

    queue: list[tuple[int, int, EngineInput]] = []
    tie = 0

    def push(at: int, inp: EngineInput) -> None:
        nonlocal tie
        heapq.heappush(queue, (at, tie, inp))
        tie += 1

    for at, inp in operator_script or []:
        push(at, inp)

    log_file = open(log_path, "w", encoding="utf-8", buffering=1) if log_path else None
    seen_log = 0

    def absorb(now: int, result: StepResult) -> None:
        """Schedule the consequences of an engine step."""
        nonlocal seen_log
        delays = [
            devices[c.target].ack_delay_ms(c.body)
            for c in result.commands
            if c.expects_ack
        ]
        if rng is not None and len(delays) > 1:
            rng.shuffle(delays)
        ackable = [c for c in result.commands if c.expects_ack]
        for command, delay in zip(ackable, delays):
            push(now + delay, DeviceAck(command.command_id))
        for timer in result.timers:
            push(now + timer.delay_ms, TimerFired(timer.row_id))
        if log_file is not None:
            for entry in result.entries:
                log_file.write(entry.to_json() + "\n")
        if auto_operator:
            for entry in engine.log[seen_log:]:
                if entry.kind != "state_change" or entry.payload.get("change") != "phase":
                    continue
                phase = entry.payload["phase"]
                detail = entry.payload["detail"]
                if phase == "awaiting_gate":
                    push(now, OperatorSignal(detail["signal"]))
                elif phase == "awaiting_choice":
                    push(now, PlayerChoice(detail["options"][0]["choice_id"]))
        seen_log = len(engine.log)

    try:
        absorb(0, engine.start(at_ms=0))
        events = 0
        last_wall_t = 0
        while queue:
            events += 1
            if events > max_events:
                raise RunawayShowError(
                    f"exceeded {max_events} events; does the script loop via branches?"
                )
            now, _tie, inp = heapq.heappop(queue)
            if math.isfinite(time_scale) and time_scale > 0 and now > last_wall_t:
                time.sleep((now - last_wall_t) / 1000.0 / time_scale)
                last_wall_t = now
            absorb(now, engine.inject(inp, at_ms=now))

        if not engine.done:
            state = engine.state()
            stuck = state.row_id
            if stuck is None and state.phase_detail.get("row"):
                stuck = state.phase_detail["row"]
            raise DeadlockError(stuck, state.phase, state.phase_detail)
    finally:
        if log_file is not None:
            log_file.close()

    return HeadlessResult(log=engine.log, points=engine.points, done=engine.done)
