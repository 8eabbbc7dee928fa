"""Operator-facing command line.

Exit codes are a stable contract:

    validate   0 clean, 1 validation errors, 2 parse failure / unreadable file
    run        0 reached done, 2 parse/validation failure, 3 deadlock,
               4 bind failure
    convert    0 written, 1 conversion error (UnmappedParam, bad mapping),
               2 unreadable or malformed capture input

Every flag can also be set through a STORYSYNC_-prefixed environment
variable (e.g. STORYSYNC_BIND, STORYSYNC_TIME_SCALE).
"""
from __future__ import annotations

import asyncio
import json
import math
import sys
from pathlib import Path

import click

from . import gesture as g
from .bus.headless import DeadlockError, run_headless
from .engine import input_from_payload
from .script import (
    ScriptParseError,
    format_diagnostics,
    has_errors,
    load_gesture_registry,
    parse_script,
    validate_script,
)


class _TimeScale(click.ParamType):
    name = "time_scale"

    def convert(self, value, param, ctx):
        if isinstance(value, float):
            return value
        if str(value).lower() in ("inf", "infinity", "max"):
            return math.inf
        try:
            out = float(value)
        except ValueError:
            self.fail(f"{value!r} is not a number or 'inf'", param, ctx)
        if out <= 0:
            self.fail("time scale must be positive", param, ctx)
        return out


TIME_SCALE = _TimeScale()


def _load_script(path: Path):
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        click.echo(f"cannot read {path}: {exc}", err=True)
        sys.exit(2)
    try:
        return parse_script(text)
    except ScriptParseError as exc:
        for err in exc.errors:
            click.echo(str(err), err=True)
        sys.exit(2)


@click.group(context_settings={"auto_envvar_prefix": "STORYSYNC"})
def main():
    """Author, validate, simulate and serve row-scripted shows."""


@main.command("validate")
@click.argument("script_path", type=click.Path(path_type=Path))
def cmd_validate(script_path: Path):
    """Parse a show script and print diagnostics (severity<TAB>row<TAB>code<TAB>message)."""
    script = _load_script(script_path)
    diagnostics = validate_script(script)
    if diagnostics:
        click.echo(format_diagnostics(diagnostics))
    sys.exit(1 if has_errors(diagnostics) else 0)


@main.command("run")
@click.argument("script_path", type=click.Path(path_type=Path))
@click.option("--serve", "mode", flag_value="serve", help="Serve devices and operators over the bus.")
@click.option("--headless", "mode", flag_value="headless", default=True,
              help="Run against simulated devices and exit (default).")
@click.option("--bind", default="127.0.0.1:7710", show_default=True, envvar="STORYSYNC_BIND",
              help="host:port for the device bus (serve mode); operator WebSocket binds port+1.")
@click.option("--time-scale", type=TIME_SCALE, default=None, envvar="STORYSYNC_TIME_SCALE",
              help="Pacing multiplier [default: inf headless, 1.0 serving]. "
                   "'inf' runs as fast as possible (headless only).")
@click.option("--log", "log_path", type=click.Path(path_type=Path), default=None, envvar="STORYSYNC_LOG",
              help="Write the cue log (newline-delimited JSON) here, streamed as the show runs.")
@click.option("--assets", "assets_root", type=click.Path(path_type=Path), default=None, envvar="STORYSYNC_ASSETS",
              help="Root for gesture clips and media [default: the script's directory].")
@click.option("--auto-operator", is_flag=True, envvar="STORYSYNC_AUTO_OPERATOR",
              help="Answer every gate with its signal and every branch with its first option.")
@click.option("--operator-script", type=click.Path(path_type=Path), default=None, envvar="STORYSYNC_OPERATOR_SCRIPT",
              help="Timed operator inputs: JSON lines {\"t\": ms, \"input\": {...}}.")
def cmd_run(script_path, mode, bind, time_scale, log_path, assets_root, auto_operator, operator_script):
    """Run a show: headless simulation or live bus serving."""
    script = _load_script(script_path)
    diagnostics = validate_script(script)
    if has_errors(diagnostics):
        click.echo(format_diagnostics(diagnostics), err=True)
        sys.exit(2)

    root = assets_root if assets_root is not None else script_path.parent
    try:
        registry = load_gesture_registry(script, root)
    except g.CaptureError as exc:
        click.echo(str(exc), err=True)
        sys.exit(2)

    if mode == "serve":
        if time_scale is not None and math.isinf(time_scale):
            click.echo("serve mode needs a finite --time-scale (live shows are paced)", err=True)
            sys.exit(2)
        _serve(script, registry, bind, time_scale if time_scale is not None else 1.0, log_path)
        return

    if time_scale is None:
        time_scale = math.inf
    if not auto_operator and operator_script is None:
        click.echo("headless mode needs --auto-operator or --operator-script", err=True)
        sys.exit(2)
    inputs = None
    if operator_script is not None:
        inputs = []
        for line in Path(operator_script).read_text(encoding="utf-8").splitlines():
            if line.strip():
                doc = json.loads(line)
                inputs.append((int(doc["t"]), input_from_payload(doc["input"])))
    try:
        result = run_headless(
            script,
            operator_script=inputs,
            auto_operator=auto_operator,
            time_scale=time_scale,
            registry=registry,
            log_path=log_path,
        )
    except DeadlockError as exc:
        click.echo(f"deadlock: {exc}", err=True)
        sys.exit(3)
    click.echo(f"show complete: points={result.points} entries={len(result.log)}")
    sys.exit(0)


def _serve(script, registry, bind, time_scale, log_path):
    from .bus.server import BusServer  # heavy import kept out of headless paths

    host, _, port_text = bind.partition(":")
    try:
        port = int(port_text)
    except ValueError:
        click.echo(f"bad --bind {bind!r} (want host:port)", err=True)
        sys.exit(2)
    server = BusServer(
        script,
        registry=registry,
        host=host or "127.0.0.1",
        port=port,
        time_scale=time_scale,
        log_path=log_path,
    )

    async def run_server():
        await server.start()
        print(f"serving: tcp {server.host}:{server.port} ws {server.host}:{server.ws_port}",
              flush=True)
        try:
            await asyncio.Event().wait()
        finally:
            await server.stop()

    try:
        asyncio.run(run_server())
    except OSError as exc:
        click.echo(f"bind failure on {bind}: {exc}", err=True)
        sys.exit(4)
    except KeyboardInterrupt:
        click.echo("interrupted; cue log flushed")
    sys.exit(0)


@main.command("convert")
@click.argument("capture_csv", type=click.Path(path_type=Path))
@click.option("--out", "-o", "out_path", type=click.Path(path_type=Path), default=None,
              help="Output clip path [default: capture name + .gesture.json].")
@click.option("--mapping", "mapping_path", type=click.Path(path_type=Path), default=None,
              help="Param mapping JSON; identity mapping when omitted.")
@click.option("--rate", type=float, default=g.DEFAULT_ROBOT_RATE_HZ, show_default=True,
              help="Robot playback rate in Hz.")
@click.option("--nominal-rate", type=float, default=g.DEFAULT_CAPTURE_RATE_HZ, show_default=True,
              help="Capture rate used to read HH:MM:SS:FF timecodes.")
@click.option("--audio", "audio_ref", default=None, help="Pair this audio asset (by reference).")
@click.option("--audio-duration-ms", type=float, default=None,
              help="Duration of the paired audio; required with --audio.")
def cmd_convert(capture_csv, out_path, mapping_path, rate, nominal_rate, audio_ref, audio_duration_ms):
    """Convert a facial-capture CSV into a .gesture.json clip."""
    try:
        data = capture_csv.read_bytes()
    except OSError as exc:
        click.echo(f"cannot read {capture_csv}: {exc}", err=True)
        sys.exit(2)
    try:
        recording = g.parse_capture_csv(data, nominal_rate=nominal_rate)
    except g.CaptureError as exc:
        click.echo(str(exc), err=True)
        sys.exit(2)

    mapping = None
    if mapping_path is not None:
        try:
            mapping = g.ParamMapping.from_json(mapping_path.read_text(encoding="utf-8"))
        except (OSError, g.CaptureError) as exc:
            click.echo(str(exc), err=True)
            sys.exit(1)

    try:
        resampled = g.resample(recording, rate)
        clip = g.convert(resampled, mapping, name=capture_csv.stem)
    except g.CaptureError as exc:
        click.echo(str(exc), err=True)
        sys.exit(1)

    if audio_ref is not None:
        if audio_duration_ms is None:
            click.echo("--audio needs --audio-duration-ms", err=True)
            sys.exit(1)
        clip = g.pair_audio(clip, audio_ref, audio_duration_ms)

    out = out_path if out_path is not None else capture_csv.with_suffix("").with_suffix(".gesture.json")
    g.write_clip(clip, out)
    params = sorted({k for f in clip.frames for k, _ in f.params})
    click.echo(f"wrote {out}: {len(clip.frames)} frames, {clip.duration_ms:g} ms, "
               f"params: {', '.join(params)}")
    sys.exit(0)


if __name__ == "__main__":
    main()
