"""Facial-capture conversion: blendshape CSV to robot gesture clips.

A capture app exports one CSV row per frame: a timecode column plus one
column per facial coefficient, values in [0, 1].  This module parses
those recordings, resamples them to a robot playback rate (linear
interpolation, endpoints preserved exactly), maps capture parameters
into robot parameter space, and writes ``.gesture.json`` clips that can
be paired with the performer's audio for Puppet Mode playback.

Clip schema::

    {"name": ..., "frames": [{"time_ms": ..., "params": {...}}, ...],
     "duration_ms": ..., "persist": false, "paired_audio": null}
"""
from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Union

import numpy as np

log = logging.getLogger(__name__)

DEFAULT_CAPTURE_RATE_HZ = 60.0
DEFAULT_ROBOT_RATE_HZ = 25.0

_TIME_COLUMNS = ("timecode", "time", "timestamp")


class CaptureError(ValueError):
    """Malformed capture CSV or clip file.

    Codes: EmptyCapture, MissingTimecode, ValueOutOfRange, RaggedRow,
    NonMonotoneTimecode, MissingClipFile, CorruptClip, UnmappedParam.
    """

    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(f"{code}: {message}")


@dataclass
class CaptureRecording:
    times: np.ndarray  # seconds, strictly increasing
    values: np.ndarray  # shape (n_frames, n_params), all in [0, 1]
    params: tuple[str, ...]
    nominal_rate: float = DEFAULT_CAPTURE_RATE_HZ

    def __post_init__(self):
        assert self.times.ndim == 1 and self.values.shape == (len(self.times), len(self.params))

    @property
    def frame_count(self) -> int:
        return len(self.times)

    @property
    def duration_s(self) -> float:
        return float(self.times[-1] - self.times[0]) if self.frame_count else 0.0


@dataclass(frozen=True)
class ParamMapping:
    """capture param -> (robot param, scale, offset); output clamped to [0, 1]."""

    entries: tuple[tuple[str, str, float, float], ...]

    @classmethod
    def identity(cls) -> "ParamMapping":
        return cls(entries=())

    def is_identity(self) -> bool:
        return not self.entries

    def lookup(self) -> dict[str, tuple[str, float, float]]:
        return {src: (dst, scale, offset) for src, dst, scale, offset in self.entries}

    @classmethod
    def from_json(cls, text: str) -> "ParamMapping":
        try:
            doc = json.loads(text)
            entries = tuple(
                (src, spec["target"], float(spec.get("scale", 1.0)), float(spec.get("offset", 0.0)))
                for src, spec in doc["entries"].items()
            )
        except (json.JSONDecodeError, KeyError, TypeError, AttributeError) as exc:
            raise CaptureError("CorruptClip", f"bad mapping file: {exc}") from exc
        robots = [dst for _, dst, _, _ in entries]
        if len(set(robots)) != len(robots):
            raise CaptureError("CorruptClip", "mapping targets must be unique")
        return cls(entries=entries)


@dataclass(frozen=True)
class ClipFrame:
    time_ms: float
    params: tuple[tuple[str, float], ...]


@dataclass(frozen=True)
class GestureClip:
    name: str
    frames: tuple[ClipFrame, ...]
    duration_ms: float
    persist: bool = False
    paired_audio: Optional[str] = None


def _parse_timecode(raw: str, nominal_rate: float) -> Optional[float]:
    raw = raw.strip()
    try:
        return float(raw)
    except ValueError:
        pass
    # HH:MM:SS:FF.mmm, FF.mmm = (fractional) frame index at the nominal rate
    parts = raw.split(":")
    if len(parts) != 4:
        return None
    try:
        hh, mm, ss = (int(p) for p in parts[:3])
        frame = float(parts[3])
    except ValueError:
        return None
    return hh * 3600 + mm * 60 + ss + frame / nominal_rate


def parse_capture_csv(
    data: Union[bytes, str], nominal_rate: float = DEFAULT_CAPTURE_RATE_HZ
) -> CaptureRecording:
    """Parse a capture CSV export into a recording.

    The header must contain a timecode column (named timecode, time or
    timestamp, any case); every other column is a facial parameter.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    reader = csv.reader(io.StringIO(data))
    try:
        header = next(reader)
    except StopIteration:
        raise CaptureError("EmptyCapture", "no header row") from None
    header = [h.strip() for h in header]

    time_idx = next(
        (i for i, name in enumerate(header) if name.lower() in _TIME_COLUMNS), None
    )
    if time_idx is None:
        raise CaptureError(
            "MissingTimecode",
            f"header has no timecode column (looked for: {', '.join(_TIME_COLUMNS)})",
        )
    params = tuple(name for i, name in enumerate(header) if i != time_idx)
    if not params:
        raise CaptureError("MissingTimecode", "header has no parameter columns")

    times: list[float] = []
    rows: list[list[float]] = []
    for row_no, cells in enumerate(reader, start=2):
        if not cells or (len(cells) == 1 and not cells[0].strip()):
            continue
        if len(cells) != len(header):
            raise CaptureError(
                "RaggedRow", f"row {row_no} has {len(cells)} cells, header has {len(header)}"
            )
        t = _parse_timecode(cells[time_idx], nominal_rate)
        if t is None:
            raise CaptureError(
                "MissingTimecode", f"row {row_no}: bad timecode {cells[time_idx]!r}"
            )
        if times and t <= times[-1]:
            raise CaptureError(
                "NonMonotoneTimecode",
                f"row {row_no}: timecode {t:g} s does not increase past {times[-1]:g} s",
            )
        values: list[float] = []
        for i, cell in enumerate(cells):
            if i == time_idx:
                continue
            name = header[i]
            try:
                v = float(cell)
            except ValueError:
                raise CaptureError(
                    "ValueOutOfRange", f"row {row_no}, column {name!r}: not a number: {cell!r}"
                ) from None
            if not 0.0 <= v <= 1.0:
                raise CaptureError(
                    "ValueOutOfRange", f"row {row_no}, column {name!r}: {v:g} outside [0, 1]"
                )
            values.append(v)
        times.append(t)
        rows.append(values)

    if not rows:
        raise CaptureError("EmptyCapture", "no frames after the header")
    return CaptureRecording(
        times=np.asarray(times, dtype=np.float64),
        values=np.asarray(rows, dtype=np.float64),
        params=params,
        nominal_rate=nominal_rate,
    )


def resample(rec: CaptureRecording, target_rate: float) -> CaptureRecording:
    """Resample to uniform 1/target_rate spacing over [first, last].

    Values are linearly interpolated; the first and last frames of the
    input are preserved exactly. A final off-grid tick is appended when
    the span is not a whole number of steps.
    """
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    if rec.frame_count == 1:
        return CaptureRecording(
            times=rec.times.copy(), values=rec.values.copy(),
            params=rec.params, nominal_rate=target_rate,
        )
    t0, t1 = float(rec.times[0]), float(rec.times[-1])
    step = 1.0 / target_rate
    span = t1 - t0
    # snap to the grid when span/step is within float noise of an integer
    n_steps = int(np.floor(span / step + 1e-9))
    ticks = t0 + np.arange(n_steps + 1) * step
    ticks[0] = t0
    if abs(ticks[-1] - t1) <= 1e-9 * max(1.0, abs(t1)):
        ticks[-1] = t1
    elif ticks[-1] < t1:
        ticks = np.append(ticks, t1)
    # ticks that coincide with source samples (within float noise) snap onto
    # them, so resampling a uniform recording at its own rate is lossless
    idx = np.searchsorted(rec.times, ticks)
    for neighbor in (np.clip(idx - 1, 0, len(rec.times) - 1), np.clip(idx, 0, len(rec.times) - 1)):
        near = rec.times[neighbor]
        close = np.abs(ticks - near) <= 1e-9 * np.maximum(1.0, np.abs(ticks))
        ticks[close] = near[close]
    columns = [np.interp(ticks, rec.times, rec.values[:, j]) for j in range(len(rec.params))]
    values = np.column_stack(columns) if columns else np.zeros((len(ticks), 0))
    values[0, :] = rec.values[0, :]
    values[-1, :] = rec.values[-1, :]
    return CaptureRecording(
        times=ticks, values=values, params=rec.params, nominal_rate=target_rate
    )


def convert(rec: CaptureRecording, mapping: Optional[ParamMapping] = None,
            name: str = "capture") -> GestureClip:
    """Map a recording into robot parameter space as a gesture clip.

    Per frame: robot_value = clamp(scale * capture_value + offset, 0, 1);
    times are rebased so the first frame is at 0 ms.
    """
    if mapping is None or mapping.is_identity():
        targets = [(p, 1.0, 0.0) for p in rec.params]
    else:
        table = mapping.lookup()
        missing = [p for p in rec.params if p not in table]
        if missing:
            raise CaptureError(
                "UnmappedParam", f"no mapping for: {', '.join(sorted(missing))}"
            )
        targets = [table[p] for p in rec.params]

    t0 = float(rec.times[0]) if rec.frame_count else 0.0
    frames = []
    for i in range(rec.frame_count):
        time_ms = (float(rec.times[i]) - t0) * 1000.0
        params = tuple(
            sorted(
                (dst, float(np.clip(scale * rec.values[i, j] + offset, 0.0, 1.0)))
                for j, (dst, scale, offset) in enumerate(targets)
            )
        )
        frames.append(ClipFrame(time_ms=time_ms, params=params))
    duration = frames[-1].time_ms if frames else 0.0
    return GestureClip(name=name, frames=tuple(frames), duration_ms=duration)


def pair_audio(clip: GestureClip, audio_ref: str, audio_duration_ms: float) -> GestureClip:
    """Attach an audio asset by reference; playback covers both tracks."""
    if clip.paired_audio is not None:
        log.info("replacing paired audio %r with %r on clip %r",
                 clip.paired_audio, audio_ref, clip.name)
    return replace(
        clip,
        paired_audio=audio_ref,
        duration_ms=max(clip.duration_ms, float(audio_duration_ms)),
    )


def clip_to_json(clip: GestureClip) -> str:
    doc = {
        "name": clip.name,
        "frames": [
            {"time_ms": f.time_ms, "params": {k: v for k, v in f.params}}
            for f in clip.frames
        ],
        "duration_ms": clip.duration_ms,
        "persist": clip.persist,
        "paired_audio": clip.paired_audio,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def clip_from_json(text: str, name_hint: str = "clip") -> GestureClip:
    try:
        doc = json.loads(text)
        frames = tuple(
            ClipFrame(
                time_ms=float(f["time_ms"]),
                params=tuple(sorted((str(k), float(v)) for k, v in f["params"].items())),
            )
            for f in doc["frames"]
        )
        clip = GestureClip(
            name=str(doc.get("name", name_hint)),
            frames=frames,
            duration_ms=float(doc["duration_ms"]),
            persist=bool(doc.get("persist", False)),
            paired_audio=doc.get("paired_audio"),
        )
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise CaptureError("CorruptClip", f"bad clip file: {exc}") from exc
    _check_clip(clip)
    return clip


def _check_clip(clip: GestureClip) -> None:
    if clip.frames and clip.frames[0].time_ms != 0.0:
        raise CaptureError("CorruptClip", "first frame must be at 0 ms")
    last = -1.0
    for f in clip.frames:
        if f.time_ms <= last:
            raise CaptureError("CorruptClip", "frame times must strictly increase")
        last = f.time_ms
        for k, v in f.params:
            if not 0.0 <= v <= 1.0:
                raise CaptureError("CorruptClip", f"param {k!r} value {v:g} outside [0, 1]")
    if clip.frames and clip.duration_ms < clip.frames[-1].time_ms:
        raise CaptureError("CorruptClip", "duration_ms shorter than the last frame")


def write_clip(clip: GestureClip, path: Union[str, Path]) -> None:
    Path(path).write_text(clip_to_json(clip), encoding="utf-8")


def read_clip(path: Union[str, Path]) -> GestureClip:
    p = Path(path)
    if not p.is_file():
        raise CaptureError("MissingClipFile", f"no clip at {p}")
    return clip_from_json(p.read_text(encoding="utf-8"), name_hint=p.stem)
