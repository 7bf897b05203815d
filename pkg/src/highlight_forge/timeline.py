"""Pass 2 back half: per-second event records and the metadata file codec.

The metadata file is UTF-8 text, one record per line, LF endings, no header:

    86-\t[('foul', 92.54742860794067)]
    114-\t[('Corner kick', 92.61274933815002), ('Corner kick', 91.55545830726624)]

i.e. the timestamp in seconds, a hyphen, a tab, then a bracketed list of
(label, confidence-percent) pairs. Confidences are written as the shortest
decimal that round-trips the float, so a parse/format cycle is lossless.
The reader is lenient about the whitespace after the hyphen and after
commas; the writer always emits the canonical form above.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ParseError, UnknownLabelError
from .detectors import FrameDetections, filter_confident
from .labels import EVENT_CLASSES, canonical_label

_INT_RE = re.compile(r"[0-9]+")
_FLOAT_RE = re.compile(r"[+-]?(?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)(?:[eE][+-]?[0-9]+)?")


@dataclass(frozen=True)
class EventRecord:
    """Confident events observed at one second of the match."""

    timestamp_s: int
    events: tuple[tuple[str, float], ...]

    def __post_init__(self) -> None:
        if self.timestamp_s < 0:
            raise ValueError(f"timestamp must be >= 0, got {self.timestamp_s}")
        if not self.events:
            raise ValueError("a record must hold at least one event")
        for label, pct in self.events:
            if label not in EVENT_CLASSES:
                raise ValueError(f"label {label!r} is not a known event class")
            if not (0.0 <= pct <= 100.0):
                raise ValueError(f"confidence percent must lie in [0, 100], got {pct}")
        confs = [pct for _, pct in self.events]
        if any(a < b for a, b in zip(confs, confs[1:])):
            raise ValueError("events must be sorted by descending confidence")


@dataclass(frozen=True)
class EventTimeline:
    """All event records of a video, in strictly increasing time order."""

    records: tuple[EventRecord, ...]

    def __post_init__(self) -> None:
        stamps = [r.timestamp_s for r in self.records]
        if any(a >= b for a, b in zip(stamps, stamps[1:])):
            raise ValueError("record timestamps must strictly increase")


def format_record(record: EventRecord) -> str:
    """Render one metadata line (without the trailing newline)."""
    pairs = ", ".join(f"('{label}', {pct!r})" for label, pct in record.events)
    return f"{record.timestamp_s}-\t[{pairs}]"


def parse_line(line: str) -> EventRecord:
    """Parse one metadata line; errors point at the offending column."""
    pos = 0

    def fail(message: str) -> ParseError:
        return ParseError(f"column {pos + 1}: {message}")

    def skip_ws() -> None:
        nonlocal pos
        while pos < len(line) and line[pos] in " \t":
            pos += 1

    match = _INT_RE.match(line, pos)
    if not match:
        raise fail("expected a timestamp")
    timestamp = int(match.group())
    pos = match.end()
    if pos >= len(line) or line[pos] != "-":
        raise fail("expected '-' after the timestamp")
    pos += 1
    skip_ws()
    if pos >= len(line) or line[pos] != "[":
        raise fail("expected '[' opening the event list")
    pos += 1
    if pos < len(line) and line[pos] == "]":
        raise fail("record has an empty event list")

    events: list[tuple[str, float]] = []
    while True:
        if not line.startswith("('", pos):
            raise fail("expected (' opening an event pair")
        pos += 2
        quote = line.find("'", pos)
        if quote < 0:
            raise fail("unterminated label")
        raw_label = line[pos:quote]
        try:
            label = canonical_label(raw_label)
        except UnknownLabelError as exc:
            raise UnknownLabelError(f"column {pos + 1}: {exc}") from None
        pos = quote + 1
        if pos >= len(line) or line[pos] != ",":
            raise fail("expected ',' between label and confidence")
        pos += 1
        skip_ws()
        match = _FLOAT_RE.match(line, pos)
        if not match:
            raise fail("expected a confidence value")
        confidence = float(match.group())
        pos = match.end()
        if pos >= len(line) or line[pos] != ")":
            raise fail("expected ')' closing the event pair")
        pos += 1
        events.append((label, confidence))
        if pos < len(line) and line[pos] == ",":
            pos += 1
            skip_ws()
            continue
        if pos < len(line) and line[pos] == "]":
            pos += 1
            break
        raise fail("expected ',' or ']' after an event pair")

    skip_ws()
    if pos != len(line):
        raise fail(f"trailing characters {line[pos:]!r}")
    try:
        return EventRecord(timestamp, tuple(events))
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def write_metadata(timeline: EventTimeline) -> str:
    return "".join(format_record(r) + "\n" for r in timeline.records)


def read_metadata(text: str) -> EventTimeline:
    records: list[EventRecord] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(parse_line(line))
        except ParseError as exc:
            raise type(exc)(f"line {lineno}: {exc}") from None
    try:
        return EventTimeline(tuple(records))
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def build_timeline(frames: list[FrameDetections], threshold: float) -> EventTimeline:
    """Assemble the timeline from per-frame detections.

    Frames must already be in ascending timestamp order. Each frame is
    filtered at ``threshold`` (strictly greater) and, when anything
    survives, contributes one record with confidences rescaled to percent.
    """
    records: list[EventRecord] = []
    last: int | None = None
    for fd in frames:
        ts = fd.frame.timestamp_s
        if last is not None and ts == last:
            raise ValueError(f"duplicate frame timestamp {ts}")
        if last is not None and ts < last:
            raise ValueError("frames must be sorted by timestamp")
        last = ts
        kept = filter_confident(fd, threshold)
        if kept.detections:
            events = tuple((d.label, d.confidence * 100.0) for d in kept.detections)
            records.append(EventRecord(ts, events))
    return EventTimeline(tuple(records))
