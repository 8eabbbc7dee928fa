"""Seeded random token-sequence generator shared by unit and acceptance tests."""
from __future__ import annotations

import random
import string

from storysync.markup import (
    STYLES,
    VOLUME_LEVELS,
    DialogueMarkup,
    Gesture,
    Pause,
    Pitch,
    Rate,
    Style,
    Text,
    Token,
    Volume,
)

_WORDS = string.ascii_letters + "  ,.!?'"


def random_token(rng: random.Random) -> Token:
    kind = rng.randrange(7)
    if kind == 0:
        return Text("".join(rng.choice(_WORDS) for _ in range(rng.randint(1, 12))))
    if kind == 1:
        return Gesture(rng.choice(["nod", "big_smile", "shrug_cool", "captures/a.gesture.json"]))
    if kind == 2:
        return Pause(rng.randint(0, 10_000))
    if kind == 3:
        return Rate(rng.randint(-50, 100))
    if kind == 4:
        return Style(rng.choice(STYLES))
    if kind == 5:
        return Volume(rng.choice(VOLUME_LEVELS))
    return Pitch(rng.randint(-50, 100))


def random_markup(rng: random.Random, max_tokens: int = 10) -> DialogueMarkup:
    return DialogueMarkup(tuple(random_token(rng) for _ in range(rng.randint(0, max_tokens))))
