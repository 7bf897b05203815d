"""Pass 3 planning: pad events into windows, merge them, pick overlay labels.

A cut list is the render plan: ordered, non-overlapping clip windows, each
carrying the events that produced it and the single label/confidence pair
that gets burned into its frames.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

from .errors import ParseError
from .timeline import EventTimeline


class ClipEvent(NamedTuple):
    timestamp_s: int
    label: str
    confidence_pct: float


@dataclass(frozen=True)
class PlannerConfig:
    """Padding around events and the merge slack between padded windows.

    ``merge_gap_s`` of 0 merges windows that overlap or touch; larger values
    also merge windows separated by up to that many seconds.
    """

    lead_s: int = 5
    tail_s: int = 5
    merge_gap_s: int = 0

    def __post_init__(self) -> None:
        for value in (self.lead_s, self.tail_s, self.merge_gap_s):
            if value < 0:
                raise ValueError(f"planner values must be >= 0, got {value}")


def _pick_overlay(events: tuple[ClipEvent, ...]) -> tuple[str, float]:
    # Highest confidence wins; ties go to the earliest event.
    best = events[0]
    for event in events[1:]:
        if event.confidence_pct > best.confidence_pct:
            best = event
    return (best.label, best.confidence_pct)


@dataclass(frozen=True)
class ClipWindow:
    start_s: int
    end_s: int
    source_events: tuple[ClipEvent, ...]
    overlay: tuple[str, float]

    def __post_init__(self) -> None:
        if self.start_s < 0 or self.start_s >= self.end_s:
            raise ValueError(f"clip requires 0 <= start < end, got ({self.start_s}, {self.end_s})")
        if not self.source_events:
            raise ValueError("clip must carry at least one source event")
        for event in self.source_events:
            if not (self.start_s <= event.timestamp_s <= self.end_s):
                raise ValueError(
                    f"event at {event.timestamp_s}s lies outside clip ({self.start_s}, {self.end_s})"
                )
        if self.overlay != _pick_overlay(self.source_events):
            raise ValueError(f"overlay {self.overlay!r} is not the max-confidence source event")


@dataclass(frozen=True)
class CutList:
    clips: tuple[ClipWindow, ...]
    video_duration_s: int

    def __post_init__(self) -> None:
        for clip in self.clips:
            if clip.end_s > self.video_duration_s:
                raise ValueError(
                    f"clip end {clip.end_s} exceeds video duration {self.video_duration_s}"
                )
        for prev, cur in zip(self.clips, self.clips[1:]):
            if prev.end_s >= cur.start_s:
                raise ValueError(
                    f"clips ({prev.start_s}, {prev.end_s}) and ({cur.start_s}, {cur.end_s}) "
                    "overlap or touch"
                )


def pad_event(t: int, cfg: PlannerConfig, duration_s: int) -> tuple[int, int]:
    """Window around an event: lead seconds before, tail after, clamped to the video."""
    if not (0 <= t <= duration_s):
        raise ValueError(f"event timestamp {t} outside video of {duration_s}s")
    return (max(0, t - cfg.lead_s), min(duration_s, t + cfg.tail_s))


def merge_windows(timeline: EventTimeline, cfg: PlannerConfig, duration_s: int) -> CutList:
    """Sweep padded event windows in time order, merging any that fall
    within ``merge_gap_s`` of the running clip, so nearby events share one
    clip instead of producing choppy back-to-back cuts."""
    clips: list[ClipWindow] = []
    cur_start: int | None = None
    cur_end = 0
    cur_events: list[ClipEvent] = []

    def close() -> None:
        events = tuple(cur_events)
        clips.append(
            ClipWindow(
                start_s=cur_start,  # type: ignore[arg-type]
                end_s=cur_end,
                source_events=events,
                overlay=_pick_overlay(events),
            )
        )

    for record in timeline.records:
        start, end = pad_event(record.timestamp_s, cfg, duration_s)
        events = [
            ClipEvent(record.timestamp_s, label, pct) for label, pct in record.events
        ]
        if cur_start is None:
            cur_start, cur_end, cur_events = start, end, events
        elif start <= cur_end + cfg.merge_gap_s:
            cur_end = max(cur_end, end)
            cur_events.extend(events)
        else:
            close()
            cur_start, cur_end, cur_events = start, end, events
    if cur_start is not None:
        close()
    return CutList(clips=tuple(clips), video_duration_s=duration_s)


def total_highlight_duration(cutlist: CutList) -> int:
    """Seconds of footage the cut list keeps; never exceeds the video."""
    return sum(clip.end_s - clip.start_s for clip in cutlist.clips)


def cutlist_to_dict(cutlist: CutList) -> dict:
    return {
        "video_duration_s": cutlist.video_duration_s,
        "clips": [
            {
                "start_s": clip.start_s,
                "end_s": clip.end_s,
                "label": clip.overlay[0],
                "confidence_pct": clip.overlay[1],
                "events": [
                    {
                        "timestamp_s": ev.timestamp_s,
                        "label": ev.label,
                        "confidence_pct": ev.confidence_pct,
                    }
                    for ev in clip.source_events
                ],
            }
            for clip in cutlist.clips
        ],
    }


def cutlist_from_dict(payload: dict) -> CutList:
    try:
        clips = tuple(
            ClipWindow(
                start_s=entry["start_s"],
                end_s=entry["end_s"],
                source_events=tuple(
                    ClipEvent(ev["timestamp_s"], ev["label"], ev["confidence_pct"])
                    for ev in entry["events"]
                ),
                overlay=(entry["label"], entry["confidence_pct"]),
            )
            for entry in payload["clips"]
        )
        return CutList(clips=clips, video_duration_s=payload["video_duration_s"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad cut list document: {exc}") from None


def write_cutlist(cutlist: CutList) -> str:
    return json.dumps(cutlist_to_dict(cutlist), indent=2) + "\n"


def read_cutlist(text: str) -> CutList:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"cut list is not valid JSON: {exc}") from None
    return cutlist_from_dict(payload)
