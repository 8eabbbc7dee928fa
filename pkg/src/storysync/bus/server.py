"""Live bus: routes engine commands to connected devices and operators.

Devices speak length-prefixed JSON frames over TCP; operator consoles
speak the same JSON documents over a WebSocket one port above.  All
engine-bound traffic funnels through a single ordered queue, so the
engine remains one logical state machine; outbound snapshots are
fan-out copies.  The bus owns pacing: row-trigger delays and wait
timers fire here under time_scale, then enter the engine as TimerFired
inputs.  A device session that misses heartbeats degrades and is then
declared lost; commands routed to a lost or absent device surface as
device_lost events, never silent drops.
"""
from __future__ import annotations

import asyncio
import contextlib
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

import websockets
from websockets.asyncio.server import ServerConnection

from .. import PROTOCOL_VERSION
from ..engine import DeviceAck, ShowEngine, StepResult, TimerFired, input_from_payload
from ..script import model as m
from ..script.registry import GestureRegistry
from .frames import Frame, FrameDecoder, FrameError, FrameTooLarge, encode_frame, frame_from_json

log = logging.getLogger(__name__)

HEARTBEAT_INTERVAL_MS = 2000
HEARTBEAT_DEGRADED_MISSES = 3
HEARTBEAT_LOST_MISSES = 6


def _version_compatible(version: str) -> bool:
    return version.split(".", 1)[0] == PROTOCOL_VERSION.split(".", 1)[0]


@dataclass
class Session:
    id: str
    role: str
    capabilities: frozenset[str]
    transport: Union[asyncio.StreamWriter, ServerConnection]
    kind: str  # "tcp" | "ws"
    state: str = "connected"  # connected | degraded | lost
    last_heartbeat_ms: int = 0
    outbox: asyncio.Queue = field(default_factory=asyncio.Queue)

    @property
    def is_operator(self) -> bool:
        return self.role == "operator"


class BusServer:
    def __init__(
        self,
        script: m.ShowScript,
        registry: Optional[GestureRegistry] = None,
        host: str = "127.0.0.1",
        port: int = 7710,
        ws_port: Optional[int] = None,
        time_scale: float = 1.0,
        log_path: Optional[Union[str, Path]] = None,
        heartbeat_interval_ms: int = HEARTBEAT_INTERVAL_MS,
    ):
        if not math.isfinite(time_scale) or time_scale <= 0:
            raise ValueError("live serving needs a finite positive time_scale")
        self.script = script
        self.engine = ShowEngine(script, registry=registry)
        self.host = host
        self.port = port
        self.ws_port = ws_port if ws_port is not None else (port + 1 if port else 0)
        self.time_scale = time_scale
        self.heartbeat_interval_ms = heartbeat_interval_ms
        self._log_path = Path(log_path) if log_path is not None else None
        self._log_file = None
        self._sessions: dict[str, Session] = {}
        self._inbox: asyncio.Queue = asyncio.Queue()
        self._tcp_server: Optional[asyncio.Server] = None
        self._ws_server = None
        self._tasks: list[asyncio.Task] = []
        self._t0: float = 0.0
        self._started = asyncio.Event()
        self._stopped = asyncio.Event()

    # -- lifecycle -------------------------------------------------------

    async def start(self) -> None:
        loop = asyncio.get_running_loop()
        self._tcp_server = await asyncio.start_server(self._handle_tcp, self.host, self.port)
        self.port = self._tcp_server.sockets[0].getsockname()[1]
        self._ws_server = await websockets.serve(self._handle_ws, self.host, self.ws_port)
        self.ws_port = next(iter(self._ws_server.sockets)).getsockname()[1]
        if self._log_path is not None:
            self._log_file = open(self._log_path, "w", encoding="utf-8", buffering=1)
        self._t0 = loop.time()
        self._absorb(self.engine.start(at_ms=0))
        self._tasks.append(asyncio.create_task(self._engine_task()))
        self._tasks.append(asyncio.create_task(self._heartbeat_task()))
        self._started.set()
        log.info("bus serving on tcp %s:%d, ws %s:%d", self.host, self.port, self.host, self.ws_port)

    async def stop(self) -> None:
        for task in self._tasks:
            task.cancel()
        for task in self._tasks:
            with contextlib.suppress(asyncio.CancelledError):
                await task
        if self._tcp_server is not None:
            self._tcp_server.close()
            await self._tcp_server.wait_closed()
        if self._ws_server is not None:
            self._ws_server.close()
            await self._ws_server.wait_closed()
        if self._log_file is not None:
            self._log_file.close()
            self._log_file = None
        self._stopped.set()

    async def serve_forever(self) -> None:
        await self.start()
        try:
            await asyncio.Event().wait()
        finally:
            await self.stop()

    # -- time ---------------------------------------------------------------

    def now_ms(self) -> int:
        loop = asyncio.get_running_loop()
        return int((loop.time() - self._t0) * 1000.0 * self.time_scale)

    # -- session plumbing ----------------------------------------------------

    async def _handle_tcp(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        decoder = FrameDecoder()
        session: Optional[Session] = None
        sender: Optional[asyncio.Task] = None

        async def send(frame: Frame):
            writer.write(encode_frame(frame))
            await writer.drain()

        try:
            hello_ok = False
            while True:
                data = await reader.read(4096)
                if not data:
                    break
                try:
                    events = decoder.feed_events(data)
                except FrameTooLarge as exc:
                    await send(Frame("error", {"code": exc.code, "message": str(exc)}))
                    break
                for item in events:
                    if isinstance(item, FrameError):
                        await send(Frame("error", {"code": item.code, "message": str(item)}))
                        continue
                    if not hello_ok:
                        ok = await self._handshake(item, send)
                        if ok is None:
                            return
                        hello_ok = ok
                        continue
                    if session is None:
                        session = await self._register(item, writer, "tcp", send)
                        if session is None:
                            return
                        sender = asyncio.create_task(self._pump_tcp(session, writer))
                        continue
                    if item.msg_type == "bye":
                        return
                    await self._on_frame(session, item, send)
        except (ConnectionResetError, BrokenPipeError):
            pass
        finally:
            if sender is not None:
                sender.cancel()
            if session is not None:
                self._drop_session(session)
            with contextlib.suppress(Exception):
                writer.close()
                await writer.wait_closed()

    async def _handle_ws(self, ws: ServerConnection):
        session: Optional[Session] = None
        sender: Optional[asyncio.Task] = None

        async def send(frame: Frame):
            await ws.send(frame.to_json())

        try:
            hello_ok = False
            async for message in ws:
                try:
                    frame = frame_from_json(
                        message if isinstance(message, str) else message.decode("utf-8")
                    )
                except FrameError as exc:
                    await send(Frame("error", {"code": exc.code, "message": str(exc)}))
                    continue
                if not hello_ok:
                    ok = await self._handshake(frame, send)
                    if ok is None:
                        return
                    hello_ok = ok
                    continue
                if session is None:
                    session = await self._register(frame, ws, "ws", send)
                    if session is None:
                        return
                    sender = asyncio.create_task(self._pump_ws(session, ws))
                    continue
                if frame.msg_type == "bye":
                    return
                await self._on_frame(session, frame, send)
        except websockets.ConnectionClosed:
            pass
        finally:
            if sender is not None:
                sender.cancel()
            if session is not None:
                self._drop_session(session)

    async def _handshake(self, frame: Frame, send) -> Optional[bool]:
        """True when the hello checks out; None means the session was refused."""
        if frame.msg_type != "hello":
            await send(Frame("error", {
                "code": "ExpectedHello", "message": "first frame must be hello",
            }))
            return False
        if not _version_compatible(frame.protocol_version):
            await send(Frame("error", {
                "code": "ProtocolVersionMismatch",
                "message": f"server speaks {PROTOCOL_VERSION}, client sent "
                           f"{frame.protocol_version or 'nothing'}",
            }))
            return None
        await send(Frame("hello", {"server": "storysync", "title": self.script.title}))
        return True

    async def _register(self, frame: Frame, transport, kind: str, send) -> Optional[Session]:
        if frame.msg_type != "register":
            await send(Frame("error", {
                "code": "ExpectedRegister", "message": "register before anything else",
            }))
            return None
        payload = frame.payload
        sid = str(payload.get("id", ""))
        role = str(payload.get("role", ""))
        caps = frozenset(str(c) for c in payload.get("capabilities", []))
        if not sid or not role:
            await send(Frame("error", {
                "code": "BadRegistration", "message": "register needs id and role",
            }))
            return None
        existing = self._sessions.get(sid)
        if existing is not None and existing.state != "lost":
            await send(Frame("error", {
                "code": "DuplicateDevice", "message": f"session id {sid!r} already connected",
            }))
            return None
        session = Session(
            id=sid, role=role, capabilities=caps, transport=transport, kind=kind,
            last_heartbeat_ms=self.now_ms(),
        )
        self._sessions[sid] = session
        self._broadcast_event({"event": "session", "id": sid, "role": role, "state": "connected"})
        if session.is_operator:
            session.outbox.put_nowait(self._snapshot_frame())
        return session

    async def _pump_tcp(self, session: Session, writer: asyncio.StreamWriter):
        with contextlib.suppress(ConnectionResetError, BrokenPipeError, asyncio.CancelledError):
            while True:
                frame = await session.outbox.get()
                writer.write(encode_frame(frame))
                await writer.drain()

    async def _pump_ws(self, session: Session, ws: ServerConnection):
        with contextlib.suppress(websockets.ConnectionClosed, asyncio.CancelledError):
            while True:
                frame = await session.outbox.get()
                await ws.send(frame.to_json())

    def _drop_session(self, session: Session):
        current = self._sessions.get(session.id)
        if current is session:
            del self._sessions[session.id]
            self._broadcast_event({
                "event": "session", "id": session.id, "role": session.role, "state": "gone",
            })

    # -- inbound frames ----------------------------------------------------

    async def _on_frame(self, session: Session, frame: Frame, send) -> None:
        if frame.msg_type == "ack":
            cid = frame.payload.get("command_id")
            try:
                ack = DeviceAck((int(cid[0]), int(cid[1])))
            except (TypeError, ValueError, IndexError):
                await send(Frame("error", {
                    "code": "BadAck", "message": f"bad command_id {cid!r}",
                }))
                return
            await self._inbox.put((ack, session))
            return
        if frame.msg_type == "event":
            if frame.payload.get("event") == "heartbeat":
                session.last_heartbeat_ms = self.now_ms()
                if session.state == "degraded":
                    session.state = "connected"
                    self._broadcast_event({
                        "event": "session", "id": session.id,
                        "role": session.role, "state": "connected",
                    })
            return
        if frame.msg_type == "operator_input":
            if not session.is_operator:
                await send(Frame("error", {
                    "code": "NotAnOperator", "message": "only operator sessions drive the show",
                }))
                return
            try:
                engine_input = input_from_payload(frame.payload.get("input", {}))
            except (ValueError, KeyError, TypeError) as exc:
                await send(Frame("error", {"code": "BadInput", "message": str(exc)}))
                return
            await self._inbox.put((engine_input, session))
            return
        await send(Frame("error", {
            "code": "UnexpectedType",
            "message": f"{frame.msg_type} frames are not accepted from clients",
        }))

    # -- engine loop ---------------------------------------------------------

    async def _engine_task(self):
        while True:
            item, origin = await self._inbox.get()
            if self.engine.done:
                continue
            result = self.engine.inject(item, at_ms=self.now_ms())
            self._refuse_if_rejected(result, origin)
            self._absorb(result)

    def _refuse_if_rejected(self, result: StepResult, origin: Optional[Session]) -> None:
        """Engine-refused inputs answer their sender with an error frame."""
        if origin is None:
            return
        for entry in result.entries:
            if entry.kind != "input":
                continue
            disposition = entry.payload["disposition"]
            if disposition.startswith("error:"):
                origin.outbox.put_nowait(Frame("error", {
                    "code": disposition.split(":", 1)[1],
                    "message": f"input refused: {entry.payload['input']}",
                }))
            return

    def _absorb(self, result: StepResult) -> None:
        for command in result.commands:
            self._dispatch(command)
        for timer in result.timers:
            delay_s = timer.delay_ms / 1000.0 / self.time_scale
            self._tasks.append(
                asyncio.get_running_loop().create_task(
                    self._fire_timer(delay_s, timer.row_id)
                )
            )
        if self._log_file is not None:
            for entry in result.entries:
                self._log_file.write(entry.to_json() + "\n")
        for entry in result.entries:
            if entry.kind == "command" and entry.payload["command"]["body"].get("kind") == "speak":
                body = entry.payload["command"]["body"]
                self._broadcast_event({
                    "event": "speak",
                    "actor": entry.payload["command"]["target"],
                    "text": body.get("plain_text", ""),
                })
            elif entry.kind == "command" and entry.payload["origin"].startswith("repair:"):
                self._broadcast_event({
                    "event": "repair",
                    "macro": entry.payload["origin"].split(":", 1)[1],
                    "target": entry.payload["command"]["target"],
                })
            elif entry.kind == "state_change" and entry.payload.get("change") == "points":
                self._broadcast_event({"event": "points", "points": entry.payload["points"]})
            elif entry.kind == "state_change" and entry.payload.get("change") == "phase":
                if entry.payload.get("phase") == "done":
                    self._broadcast_event({"event": "show_done"})
        self._broadcast_snapshot()

    async def _fire_timer(self, delay_s: float, row_id: str):
        await asyncio.sleep(delay_s)
        await self._inbox.put((TimerFired(row_id), None))

    def _dispatch(self, command) -> None:
        session = self._sessions.get(command.target)
        if session is None or session.state == "lost":
            # Surface the drop, then complete the barrier on the device's
            # behalf so one dead lamp cannot stall the whole show.
            self.engine.note_device_event(command.target, "device_lost", self.now_ms())
            self._broadcast_event({
                "event": "device_lost",
                "device": command.target,
                "command_id": list(command.command_id),
            })
            if command.expects_ack:
                self._inbox.put_nowait((DeviceAck(command.command_id), None))
            return
        kind = command.body.get("kind")
        if kind in m.ACTION_KINDS and kind not in session.capabilities:
            self.engine.note_device_event(command.target, "capability_refused", self.now_ms())
            self._broadcast_event({
                "event": "capability_refused",
                "device": command.target,
                "kind": command.body.get("kind"),
            })
            if command.expects_ack:
                self._inbox.put_nowait((DeviceAck(command.command_id), None))
            return
        session.outbox.put_nowait(Frame("command", command.to_payload()))

    # -- heartbeats ---------------------------------------------------------

    async def _heartbeat_task(self):
        interval_s = self.heartbeat_interval_ms / 1000.0 / self.time_scale
        while True:
            await asyncio.sleep(interval_s)
            now = self.now_ms()
            for session in list(self._sessions.values()):
                if session.is_operator:
                    continue
                missed = (now - session.last_heartbeat_ms) / self.heartbeat_interval_ms
                new_state = session.state
                if missed >= HEARTBEAT_LOST_MISSES:
                    new_state = "lost"
                elif missed >= HEARTBEAT_DEGRADED_MISSES:
                    new_state = "degraded"
                if new_state != session.state:
                    session.state = new_state
                    self._broadcast_event({
                        "event": "session", "id": session.id,
                        "role": session.role, "state": new_state,
                    })
                    if new_state == "lost":
                        self.engine.note_device_event(session.id, "device_lost", now)
                        self._broadcast_snapshot()

    # -- outbound -----------------------------------------------------------

    def _snapshot_frame(self) -> Frame:
        state = self.engine.state()
        current = self.engine.current_row()
        return Frame("state_snapshot", {
            "title": self.script.title,
            "state": state.to_payload(),
            "current_row": _row_payload(current),
            "next_rows": [_row_payload(r) for r in self.engine.preview_rows(3)],
            "devices": [
                {"id": s.id, "role": s.role, "state": s.state}
                for s in sorted(self._sessions.values(), key=lambda s: s.id)
                if not s.is_operator
            ],
            "declared_devices": [
                {"id": d.id, "role": d.role} for d in self.script.devices
            ],
            "done": self.engine.done,
        })

    def _broadcast_snapshot(self) -> None:
        frame = self._snapshot_frame()
        for session in self._sessions.values():
            if session.is_operator:
                session.outbox.put_nowait(frame)

    def _broadcast_event(self, payload: dict[str, Any]) -> None:
        frame = Frame("event", payload)
        for session in self._sessions.values():
            if session.is_operator:
                session.outbox.put_nowait(frame)


def _row_payload(row: Optional[m.CueRow]) -> Optional[dict[str, Any]]:
    if row is None:
        return None
    payload: dict[str, Any] = {
        "id": row.id,
        "trigger": row.trigger.render(),
        "actions": [a.kind for a in row.actions],
    }
    if row.branch is not None:
        payload["branch"] = {
            "prompt": row.branch.prompt,
            "options": [
                {"choice_id": o.choice_id, "label": o.label, "points": o.points}
                for o in row.branch.options
            ],
        }
    return payload
