"""First pass: fixed-interval sample planning and the frame filename codec.

Frames are named ``<stem>_<seconds>.jpg`` so the timestamp survives being
written to disk; the parser splits on the last underscore, which lets stems
contain underscores of their own.
"""
from __future__ import annotations

import os
import re
from dataclasses import dataclass

from .errors import ParseError

FRAME_EXT = ".jpg"

_TIMESTAMP_RE = re.compile(r"^[0-9]+$")


@dataclass(frozen=True)
class SamplePlan:
    video_stem: str
    duration_s: int
    interval_s: int
    timestamps: tuple[int, ...]


@dataclass(frozen=True)
class FrameRef:
    path: str
    timestamp_s: int


def plan_samples(video_stem: str, duration_s: int, interval_s: int = 2) -> SamplePlan:
    """Plan sampling timestamps 0, interval, 2*interval, ... up to the duration."""
    if duration_s < 0:
        raise ValueError(f"duration must be >= 0, got {duration_s}")
    if interval_s < 1:
        raise ValueError(f"invalid interval: must be >= 1 second, got {interval_s}")
    timestamps = tuple(range(0, duration_s + 1, interval_s))
    return SamplePlan(
        video_stem=video_stem,
        duration_s=duration_s,
        interval_s=interval_s,
        timestamps=timestamps,
    )


def frame_filename(stem: str, t: int) -> str:
    """Filename for the frame sampled at second ``t``."""
    if "/" in stem or "\\" in stem:
        raise ValueError(f"stem must not contain path separators, got {stem!r}")
    if t < 0:
        raise ValueError(f"timestamp must be >= 0, got {t}")
    return f"{stem}_{t}{FRAME_EXT}"


def parse_frame_filename(name: str) -> tuple[str, int]:
    """Recover (stem, timestamp) from a frame filename or path."""
    base = os.path.basename(name)
    if not base.endswith(FRAME_EXT):
        raise ParseError(f"{name!r}: expected a {FRAME_EXT} extension")
    stem_ts = base[: -len(FRAME_EXT)]
    cut = stem_ts.rfind("_")
    if cut < 0:
        raise ParseError(f"{name!r}: no underscore before the timestamp")
    ts = stem_ts[cut + 1 :]
    if not _TIMESTAMP_RE.match(ts):
        raise ParseError(f"{name!r}: timestamp suffix {ts!r} is not a decimal integer")
    return stem_ts[:cut], int(ts)


def sort_frames(names: list[str]) -> list[FrameRef]:
    """Order frame files chronologically by the timestamp in their names.

    The sort is numeric (``m_2`` before ``m_10``) and stable for equal
    timestamps. If any name fails to parse, all offenders are reported in
    one error.
    """
    refs: list[FrameRef] = []
    bad: list[str] = []
    for name in names:
        try:
            _, ts = parse_frame_filename(name)
        except ParseError:
            bad.append(name)
            continue
        refs.append(FrameRef(path=name, timestamp_s=ts))
    if bad:
        raise ParseError("unparseable frame names: " + ", ".join(repr(b) for b in bad))
    return sorted(refs, key=lambda r: r.timestamp_s)
