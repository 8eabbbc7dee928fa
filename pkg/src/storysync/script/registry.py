"""Resolve a script's gesture references against on-disk clip assets.

Registry entries keep both the library label and the situational
context note: the label a gesture carries and the dramatic moment it is
used for are deliberately decoupled (a gesture labeled "Pleased" may be
scripted to shrug off terror).
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from ..gesture import GestureClip, read_clip
from . import model as m


@dataclass(frozen=True)
class ResolvedGesture:
    id: str
    label: str
    context_note: str
    clip: Optional[GestureClip] = None  # None for builtin library gestures


@dataclass(frozen=True)
class GestureRegistry:
    entries: dict[str, ResolvedGesture]
    clips: dict[str, GestureClip]  # file-backed refs by relative path

    def clip_duration_ms(self, ref: str) -> Optional[float]:
        if ref in self.clips:
            return self.clips[ref].duration_ms
        entry = self.entries.get(ref)
        if entry is not None and entry.clip is not None:
            return entry.clip.duration_ms
        return None

    def __len__(self) -> int:
        return len(self.entries) + len(self.clips)


def _clip_refs_in_script(script: m.ShowScript) -> set[str]:
    refs: set[str] = set()
    for _si, _scene, _ri, row in script.iter_rows():
        for action in row.actions:
            if isinstance(action, m.PuppetPlayback):
                refs.add(action.clip_ref)
            elif isinstance(action, m.PlayGesture) and m.is_clip_ref(action.gesture_ref):
                refs.add(action.gesture_ref)
            elif isinstance(action, m.Speak):
                refs.update(r for r in action.markup.gesture_refs if m.is_clip_ref(r))
    return refs


def load_gesture_registry(
    script: m.ShowScript, assets_root: Union[str, Path]
) -> GestureRegistry:
    """Load every captured clip the script can reach.

    Raises CaptureError MissingClipFile / CorruptClip when a clip path
    does not resolve under assets_root or fails to parse.
    """
    root = Path(assets_root)
    entries: dict[str, ResolvedGesture] = {}
    for g in script.gestures:
        clip = read_clip(root / g.clip_path) if g.clip_path is not None else None
        entries[g.id] = ResolvedGesture(
            id=g.id, label=g.label, context_note=g.context_note, clip=clip
        )
    clips = {ref: read_clip(root / ref) for ref in sorted(_clip_refs_in_script(script))}
    return GestureRegistry(entries=entries, clips=clips)
