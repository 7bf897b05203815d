"""The closed set of event classes the pipeline recognizes.

The canonical spellings below are the ones written into metadata files and
overlays; everything that accepts labels from the outside world goes through
:func:`canonical_label` first.
"""
from __future__ import annotations

from .errors import UnknownLabelError

FOUL = "foul"
CORNER_KICK = "Corner kick"
GOAL = "goal"
PENALTY_KICK = "penalty kick"

EVENT_CLASSES: tuple[str, ...] = (FOUL, CORNER_KICK, GOAL, PENALTY_KICK)

_BY_FOLDED = {name.lower(): name for name in EVENT_CLASSES}


def canonical_label(name: str) -> str:
    """Map a label to its canonical spelling, matching case-insensitively."""
    folded = name.strip().lower()
    if folded not in _BY_FOLDED:
        raise UnknownLabelError(
            f"unknown event class {name!r}; expected one of: " + ", ".join(EVENT_CLASSES)
        )
    return _BY_FOLDED[folded]
