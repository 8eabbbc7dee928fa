"""Append-only cue log: the determinism contract.

One entry per line as canonical JSON (sorted keys, compact separators).
Two runs of the same script over the same timestamped inputs must
produce byte-identical logs.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Union

KINDS = ("input", "command", "state_change")


@dataclass(frozen=True)
class CueLogEntry:
    t: int  # logical ms since show start
    kind: str
    payload: dict[str, Any]

    def to_json(self) -> str:
        return json.dumps(
            {"t": self.t, "kind": self.kind, "payload": self.payload},
            sort_keys=True,
            separators=(",", ":"),
        )


def dump_log(entries: Iterable[CueLogEntry]) -> str:
    return "".join(e.to_json() + "\n" for e in entries)


def write_log(entries: Iterable[CueLogEntry], path: Union[str, Path]) -> None:
    Path(path).write_text(dump_log(entries), encoding="utf-8")


def parse_log_line(line: str) -> CueLogEntry:
    doc = json.loads(line)
    return CueLogEntry(t=int(doc["t"]), kind=str(doc["kind"]), payload=doc["payload"])


def read_log(path: Union[str, Path]) -> list[CueLogEntry]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            out.append(parse_log_line(line))
    return out
