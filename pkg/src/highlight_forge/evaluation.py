"""Event-level scoring: match predictions against ground truth per class.

Matching is greedy and one-to-one within each class: candidate pairs inside
the time tolerance are taken nearest-first, deterministic ties broken by
earlier truth then earlier prediction. Anything left unmatched counts as a
false positive (predictions) or false negative (truths).
"""
from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import ParseError, UnknownLabelError
from .labels import EVENT_CLASSES, GOAL, canonical_label
from .planning import CutList
from .timeline import EventTimeline

# Attempts on goal belong with goals for scoring purposes: a detector has no
# way to tell a converted shot from a near miss in a single frame.
_GOAL_ALIASES = {"shot at goal", "shots at goal"}


@dataclass(frozen=True)
class GroundTruthEvent:
    timestamp_s: int
    label: str

    def __post_init__(self) -> None:
        if self.timestamp_s < 0:
            raise ValueError(f"timestamp must be >= 0, got {self.timestamp_s}")
        if self.label not in EVENT_CLASSES:
            raise ValueError(f"label {self.label!r} is not a known event class")


@dataclass(frozen=True)
class ClassCounts:
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0


@dataclass
class EvalReport:
    per_class: dict[str, ClassCounts]
    tolerance_s: int

    @property
    def totals(self) -> ClassCounts:
        return ClassCounts(
            tp=sum(c.tp for c in self.per_class.values()),
            fp=sum(c.fp for c in self.per_class.values()),
            fn=sum(c.fn for c in self.per_class.values()),
        )


def match_events(
    predicted: list[tuple[int, str]],
    truth: list[GroundTruthEvent],
    tolerance_s: int = 10,
) -> EvalReport:
    """Score predictions against ground truth within ``tolerance_s`` seconds.

    The tolerance is inclusive: a prediction exactly ``tolerance_s`` away
    still matches. Matching never crosses classes.
    """
    if tolerance_s < 0:
        raise ValueError(f"tolerance must be >= 0, got {tolerance_s}")
    for _, label in predicted:
        if label not in EVENT_CLASSES:
            raise ValueError(f"predicted label {label!r} is not a known event class")

    per_class: dict[str, ClassCounts] = {}
    for cls in EVENT_CLASSES:
        preds = [ts for ts, label in predicted if label == cls]
        truths = [ev.timestamp_s for ev in truth if ev.label == cls]
        candidates = sorted(
            (abs(p - t), t, p, ti, pi)
            for ti, t in enumerate(truths)
            for pi, p in enumerate(preds)
            if abs(p - t) <= tolerance_s
        )
        matched_truth: set[int] = set()
        matched_pred: set[int] = set()
        for _, _, _, ti, pi in candidates:
            if ti in matched_truth or pi in matched_pred:
                continue
            matched_truth.add(ti)
            matched_pred.add(pi)
        tp = len(matched_truth)
        per_class[cls] = ClassCounts(tp=tp, fp=len(preds) - tp, fn=len(truths) - tp)
    return EvalReport(per_class=per_class, tolerance_s=tolerance_s)


def events_from_timeline(timeline: EventTimeline) -> list[tuple[int, str]]:
    """Every event entry in the metadata, as (timestamp, label) predictions."""
    return [
        (record.timestamp_s, label)
        for record in timeline.records
        for label, _ in record.events
    ]


def events_from_cutlist(cutlist: CutList) -> list[tuple[int, str]]:
    """One prediction per clip: the overlay label at its source timestamp."""
    out: list[tuple[int, str]] = []
    for clip in cutlist.clips:
        label, pct = clip.overlay
        ts = next(
            ev.timestamp_s
            for ev in clip.source_events
            if ev.label == label and ev.confidence_pct == pct
        )
        out.append((ts, label))
    return out


def parse_ground_truth(text: str) -> list[GroundTruthEvent]:
    """Read the headerless ``timestamp_s,label`` ground-truth CSV.

    ``shot(s) at goal`` rows are accepted and scored as goals.
    """
    events: list[GroundTruthEvent] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(f"line {lineno}: expected 'timestamp_s,label', got {line!r}")
        try:
            ts = int(parts[0])
        except ValueError:
            raise ParseError(f"line {lineno}: non-integer timestamp {parts[0]!r}") from None
        name = parts[1].strip()
        if name.lower() in _GOAL_ALIASES:
            label = GOAL
        else:
            try:
                label = canonical_label(name)
            except UnknownLabelError as exc:
                raise UnknownLabelError(f"line {lineno}: {exc}") from None
        events.append(GroundTruthEvent(ts, label))
    return events


def report_table(report: EvalReport) -> str:
    """Fixed-width text table, one row per class plus a totals row."""
    header = (
        f"{'event':<14}{'truth':>7}{'predicted':>11}"
        f"{'tp':>5}{'fp':>5}{'fn':>5}{'precision':>11}{'recall':>8}"
    )
    lines = [header]

    def row(name: str, counts: ClassCounts) -> str:
        return (
            f"{name:<14}{counts.tp + counts.fn:>7}{counts.tp + counts.fp:>11}"
            f"{counts.tp:>5}{counts.fp:>5}{counts.fn:>5}"
            f"{counts.precision:>11.3f}{counts.recall:>8.3f}"
        )

    for cls in EVENT_CLASSES:
        lines.append(row(cls, report.per_class[cls]))
    lines.append(row("total", report.totals))
    return "\n".join(lines) + "\n"


def report_to_dict(report: EvalReport) -> dict:
    def counts_dict(counts: ClassCounts) -> dict:
        return {
            "tp": counts.tp,
            "fp": counts.fp,
            "fn": counts.fn,
            "precision": counts.precision,
            "recall": counts.recall,
        }

    return {
        "tolerance_s": report.tolerance_s,
        "classes": {cls: counts_dict(report.per_class[cls]) for cls in EVENT_CLASSES},
        "totals": counts_dict(report.totals),
    }


def write_report_json(report: EvalReport) -> str:
    return json.dumps(report_to_dict(report), indent=2) + "\n"
