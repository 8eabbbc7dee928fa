"""StorySync: a show-control toolkit for multi-actor interactive drama.

Row-based show scripts compile affect-annotated dialogue to SSML plus
synchronized gesture markers, execute deterministically over a length
prefixed JSON wire protocol against real or simulated devices, and
convert facial-capture recordings into replayable robot gesture clips.
"""

__version__ = "0.1.0"

PROTOCOL_VERSION = "1.0.0"
