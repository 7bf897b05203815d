"""Pass 3 execution: plans of external media-tool commands.

Planning is pure: identical inputs produce byte-identical argv lists, so
plans can be inspected, diffed, and golden-tested without running anything.
Execution shells out to an FFmpeg-compatible tool; clips re-encode so the
overlay text can be burned in, the final concat is a stream copy fed its
input list over stdin.
"""
from __future__ import annotations

import logging
import os
import shutil
import subprocess
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .errors import ToolNotFoundError
from .labels import EVENT_CLASSES
from .planning import CutList
from .sampling import SamplePlan, frame_filename

log = logging.getLogger(__name__)

DEFAULT_TOOL = "ffmpeg"
DEFAULT_MARGIN_PX = 10

PURPOSES = ("extract_frames", "cut_clip", "concat")


def overlay_text(label: str, confidence_pct: float) -> str:
    """On-screen caption: the label and a two-decimal percent."""
    return f"{label}: {confidence_pct:.2f}%"


@dataclass(frozen=True)
class OverlayDirective:
    """Caption burned into a clip's top-left corner."""

    text: str
    margin_px: int = DEFAULT_MARGIN_PX

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("overlay text must be non-empty")
        if not any(self.text.startswith(cls + ":") for cls in EVENT_CLASSES):
            raise ValueError(f"overlay text {self.text!r} must start with an event class")
        if self.margin_px < 0:
            raise ValueError("overlay margin must be >= 0")


@dataclass(frozen=True)
class CommandSpec:
    purpose: str
    argv: tuple[str, ...]
    inputs: tuple[str, ...] = ()
    outputs: tuple[str, ...] = ()
    stdin_text: str | None = None
    overlay: OverlayDirective | None = None

    def __post_init__(self) -> None:
        if self.purpose not in PURPOSES:
            raise ValueError(f"unknown purpose {self.purpose!r}")
        if not self.argv:
            raise ValueError("argv must be non-empty")


def spec_to_dict(spec: CommandSpec) -> dict:
    out = {
        "purpose": spec.purpose,
        "argv": list(spec.argv),
        "inputs": list(spec.inputs),
        "outputs": list(spec.outputs),
    }
    if spec.stdin_text is not None:
        out["stdin"] = spec.stdin_text
    if spec.overlay is not None:
        out["overlay"] = {"text": spec.overlay.text, "margin_px": spec.overlay.margin_px}
    return out


def _drawtext_filter(directive: OverlayDirective) -> str:
    # Backslash, quote and colon are meta characters inside a filter graph.
    escaped = (
        directive.text.replace("\\", "\\\\").replace("'", "\\'").replace(":", "\\:")
    )
    return (
        "drawtext=expansion=none:text='" + escaped + "'"
        f":x={directive.margin_px}:y={directive.margin_px}"
        ":fontsize=24:fontcolor=white:box=1:boxcolor=black@0.5:boxborderw=6"
    )


def _concat_list(paths: list[str]) -> str:
    lines = []
    for path in paths:
        lines.append("file '" + path.replace("'", "'\\''") + "'\n")
    return "".join(lines)


def plan_render(
    cutlist: CutList,
    video_path: str,
    out_dir: str,
    tool: str = DEFAULT_TOOL,
    margin_px: int = DEFAULT_MARGIN_PX,
) -> list[CommandSpec]:
    """One cut command per clip, then one concat producing the highlights file.

    Clip outputs are named ``clip_<index>_<start>_<end>.mp4`` so reruns are
    idempotent and the concat order is obvious from a directory listing.
    """
    if not cutlist.clips:
        raise ValueError("cut list has no clips; nothing to render")
    if not video_path or not out_dir:
        raise ValueError("video path and output directory must be non-empty")

    stem = os.path.splitext(os.path.basename(video_path))[0]
    specs: list[CommandSpec] = []
    clip_outputs: list[str] = []
    for index, clip in enumerate(cutlist.clips):
        out_path = os.path.join(out_dir, f"clip_{index}_{clip.start_s}_{clip.end_s}.mp4")
        directive = OverlayDirective(
            text=overlay_text(clip.overlay[0], clip.overlay[1]), margin_px=margin_px
        )
        argv = (
            tool,
            "-hide_banner",
            "-nostdin",
            "-y",
            "-ss",
            str(clip.start_s),
            "-to",
            str(clip.end_s),
            "-i",
            video_path,
            "-vf",
            _drawtext_filter(directive),
            "-map",
            "0:v:0",
            "-map",
            "0:a?",
            "-c:v",
            "libx264",
            "-preset",
            "veryfast",
            "-crf",
            "23",
            "-c:a",
            "aac",
            out_path,
        )
        specs.append(
            CommandSpec(
                purpose="cut_clip",
                argv=argv,
                inputs=(video_path,),
                outputs=(out_path,),
                overlay=directive,
            )
        )
        clip_outputs.append(out_path)

    final_path = os.path.join(out_dir, f"{stem}_highlights.mp4")
    concat_argv = (
        tool,
        "-hide_banner",
        "-y",
        "-f",
        "concat",
        "-safe",
        "0",
        "-protocol_whitelist",
        "file,pipe,fd",
        "-i",
        "pipe:0",
        "-c",
        "copy",
        final_path,
    )
    specs.append(
        CommandSpec(
            purpose="concat",
            argv=concat_argv,
            inputs=tuple(clip_outputs),
            outputs=(final_path,),
            stdin_text=_concat_list(clip_outputs),
        )
    )
    _check_collisions(specs)
    return specs


def plan_frame_extraction(
    video_path: str, plan: SamplePlan, out_dir: str, tool: str = DEFAULT_TOOL
) -> list[CommandSpec]:
    """One single-frame grab per planned timestamp."""
    specs: list[CommandSpec] = []
    for t in plan.timestamps:
        out_path = os.path.join(out_dir, frame_filename(plan.video_stem, t))
        argv = (
            tool,
            "-hide_banner",
            "-nostdin",
            "-y",
            "-ss",
            str(t),
            "-i",
            video_path,
            "-frames:v",
            "1",
            "-q:v",
            "2",
            out_path,
        )
        specs.append(
            CommandSpec(
                purpose="extract_frames",
                argv=argv,
                inputs=(video_path,),
                outputs=(out_path,),
            )
        )
    _check_collisions(specs)
    return specs


def _check_collisions(specs: list[CommandSpec]) -> None:
    seen: set[str] = set()
    for spec in specs:
        for out in spec.outputs:
            if out in seen:
                raise ValueError(f"plan writes {out!r} more than once")
            seen.add(out)


@dataclass
class RunEntry:
    purpose: str
    argv: tuple[str, ...]
    status: str  # ok | failed | skipped | not_run
    exit_code: int | None = None
    duration_s: float = 0.0
    produced: tuple[str, ...] = ()
    stderr_tail: str = ""


@dataclass
class RunReport:
    entries: list[RunEntry] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(e.status in ("ok", "skipped") for e in self.entries)

    def count(self, status: str) -> int:
        return sum(1 for e in self.entries if e.status == status)


def _run_spec(spec: CommandSpec) -> RunEntry:
    started = time.monotonic()
    kwargs: dict = {"capture_output": True, "text": True}
    if spec.stdin_text is not None:
        kwargs["input"] = spec.stdin_text
    else:
        kwargs["stdin"] = subprocess.DEVNULL
    proc = subprocess.run(list(spec.argv), **kwargs)
    duration = time.monotonic() - started
    produced = tuple(p for p in spec.outputs if os.path.exists(p))
    if proc.returncode == 0:
        return RunEntry(spec.purpose, spec.argv, "ok", 0, duration, produced)
    return RunEntry(
        spec.purpose,
        spec.argv,
        "failed",
        proc.returncode,
        duration,
        produced,
        stderr_tail=(proc.stderr or "")[-800:],
    )


def _outputs_exist(spec: CommandSpec) -> bool:
    return bool(spec.outputs) and all(os.path.exists(p) for p in spec.outputs)


def execute_plan(
    specs: list[CommandSpec], workers: int = 1, resume: bool = False
) -> RunReport:
    """Run a plan: every non-concat command first, then the concat barrier.

    The required tools are probed before anything executes. Sequential runs
    abort at the first failure; parallel runs let in-flight commands finish.
    Either way the concat step is not attempted after a failure. With
    ``resume``, commands whose outputs already exist are skipped.
    """
    for tool in sorted({spec.argv[0] for spec in specs}):
        if shutil.which(tool) is None:
            raise ToolNotFoundError(f"required tool {tool!r} not found on PATH")

    phase1 = [s for s in specs if s.purpose != "concat"]
    phase2 = [s for s in specs if s.purpose == "concat"]
    entries: dict[int, RunEntry] = {}
    aborted = False

    def placeholder(spec: CommandSpec, status: str) -> RunEntry:
        return RunEntry(spec.purpose, spec.argv, status)

    runnable: list[CommandSpec] = []
    for spec in phase1:
        if resume and _outputs_exist(spec):
            entries[id(spec)] = placeholder(spec, "skipped")
        else:
            runnable.append(spec)

    if workers <= 1 or len(runnable) <= 1:
        for spec in runnable:
            if aborted:
                entries[id(spec)] = placeholder(spec, "not_run")
                continue
            entry = _run_spec(spec)
            entries[id(spec)] = entry
            if entry.status == "failed":
                aborted = True
                log.error("command failed (%s): %s", spec.purpose, entry.stderr_tail)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for spec, entry in zip(runnable, pool.map(_run_spec, runnable)):
                entries[id(spec)] = entry
                if entry.status == "failed":
                    aborted = True
                    log.error("command failed (%s): %s", spec.purpose, entry.stderr_tail)

    for spec in phase2:
        if aborted:
            entries[id(spec)] = placeholder(spec, "not_run")
        elif resume and _outputs_exist(spec):
            entries[id(spec)] = placeholder(spec, "skipped")
        else:
            entry = _run_spec(spec)
            entries[id(spec)] = entry
            if entry.status == "failed":
                aborted = True
                log.error("concat failed: %s", entry.stderr_tail)

    return RunReport(entries=[entries[id(spec)] for spec in specs])
