"""Stub detection tables: the same tab-separated format the pipeline's
fixture backend reads, so one file can drive both ends of the protocol."""
from __future__ import annotations

EVENT_CLASSES = ("foul", "Corner kick", "goal", "penalty kick")

_BY_FOLDED = {name.lower(): name for name in EVENT_CLASSES}


def canonical_label(name: str) -> str:
    folded = name.strip().lower()
    if folded not in _BY_FOLDED:
        raise ValueError(f"unknown event class {name!r}")
    return _BY_FOLDED[folded]


def parse_stub_table(text: str) -> dict[str, list[dict]]:
    """Parse `frame<TAB>label<TAB>confidence<TAB>x1<TAB>y1<TAB>x2<TAB>y2`
    lines into wire-format detection dicts keyed by frame basename."""
    table: dict[str, list[dict]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 7:
            raise ValueError(f"line {lineno}: expected 7 tab-separated fields, got {len(parts)}")
        frame = parts[0].strip()
        label = canonical_label(parts[1])
        try:
            confidence = float(parts[2])
            x1, y1, x2, y2 = (float(p) for p in parts[3:7])
        except ValueError:
            raise ValueError(f"line {lineno}: non-numeric field in {line!r}") from None
        if not (0.0 <= confidence <= 1.0):
            raise ValueError(f"line {lineno}: confidence {confidence} outside [0, 1]")
        if not (x1 < x2 and y1 < y2):
            raise ValueError(f"line {lineno}: degenerate box {(x1, y1, x2, y2)}")
        table.setdefault(frame, []).append(
            {"label": label, "confidence": confidence, "box": [x1, y1, x2, y2]}
        )
    return table
