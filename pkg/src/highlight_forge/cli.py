"""Command-line surface: each pipeline pass as a subcommand, plus `run`.

Every run's artifacts land in ``<out_dir>/<run_id>/`` so repeated runs never
clobber each other; pass ``--run-id`` to make the location predictable.
``--dry-run`` prints the pass's plan as JSON and writes nothing at all.

Exit codes: 0 success, 2 configuration or input problems, 3 missing
external tools, 4 sidecar transport/protocol failures, 5 failed external
commands.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import shutil
import subprocess
import sys
import time

from .config import PipelineConfig, load_config
from .detectors import (
    FixtureBackend,
    SidecarBackend,
    detect_frames,
    profile_by_name,
)
from .errors import (
    CommandFailedError,
    ConfigError,
    HighlightForgeError,
    ToolNotFoundError,
    TransportError,
    WireProtocolError,
)
from .evaluation import (
    events_from_cutlist,
    events_from_timeline,
    match_events,
    parse_ground_truth,
    report_table,
    write_report_json,
)
from .planning import CutList, cutlist_to_dict, merge_windows, read_cutlist, total_highlight_duration, write_cutlist
from .rendering import execute_plan, plan_frame_extraction, plan_render, spec_to_dict
from .sampling import plan_samples, sort_frames
from .timeline import EventTimeline, build_timeline, read_metadata, write_metadata

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ENVIRONMENT = 3
EXIT_PROTOCOL = 4
EXIT_EXECUTION = 5

METADATA_NAME = "metadata.tsv"
CUTLIST_NAME = "cutlist.json"
RENDER_PLAN_NAME = "render_plan.json"


def _write_text(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _read_text(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _probe_duration(video: str) -> int:
    if shutil.which("ffprobe") is None:
        raise ToolNotFoundError("ffprobe not found on PATH; pass --duration instead")
    proc = subprocess.run(
        [
            "ffprobe",
            "-v",
            "error",
            "-show_entries",
            "format=duration",
            "-of",
            "default=noprint_wrappers=1:nokey=1",
            video,
        ],
        capture_output=True,
        text=True,
    )
    if proc.returncode != 0:
        raise CommandFailedError(f"ffprobe failed on {video}: {proc.stderr.strip()}")
    try:
        return int(float(proc.stdout.strip()))
    except ValueError:
        raise CommandFailedError(f"ffprobe returned unexpected output {proc.stdout!r}") from None


def _resolve_duration(cfg: PipelineConfig) -> int:
    if cfg.duration_s is not None:
        return cfg.duration_s
    if cfg.video and os.path.isfile(cfg.video):
        return _probe_duration(cfg.video)
    raise ConfigError("video duration unknown; pass --duration or point --video at a real file")


def _make_backend(cfg: PipelineConfig):
    profile = profile_by_name(cfg.backend)
    if cfg.backend == "fixture":
        if not cfg.fixture_table:
            raise ConfigError("the fixture backend needs --fixture-table")
        if not os.path.isfile(cfg.fixture_table):
            raise ConfigError(f"fixture table not found: {cfg.fixture_table}")
        return FixtureBackend.load(cfg.fixture_table, profile=profile)
    if not cfg.sidecar:
        raise ConfigError(f"backend {cfg.backend!r} needs a sidecar address (--sidecar)")
    return SidecarBackend(cfg.sidecar, profile)


def _pass_sample(cfg: PipelineConfig, run_dir: str, dry_run: bool, resume: bool) -> dict:
    if cfg.video is None:
        workdir = cfg.workdir
        if not workdir or not os.path.isdir(workdir):
            raise ConfigError("no video configured and no existing frames directory to fall back on")
        return {"skipped": f"no video configured; using existing frames in {workdir}"}
    if not dry_run and not os.path.isfile(cfg.video):
        raise ConfigError(f"video not found: {cfg.video}")
    duration = _resolve_duration(cfg)
    stem = os.path.splitext(os.path.basename(cfg.video))[0]
    plan = plan_samples(stem, duration, cfg.interval_s)
    workdir = cfg.workdir or os.path.join(run_dir, "frames")
    specs = plan_frame_extraction(cfg.video, plan, workdir)
    payload = {
        "workdir": workdir,
        "frame_count": len(specs),
        "commands": [spec_to_dict(s) for s in specs],
    }
    if dry_run:
        return payload
    os.makedirs(workdir, exist_ok=True)
    report = execute_plan(specs, workers=cfg.workers, resume=resume)
    if not report.ok:
        raise CommandFailedError(_failure_summary(report))
    return payload


def _pass_detect(cfg: PipelineConfig, run_dir: str, dry_run: bool) -> tuple[dict, EventTimeline]:
    workdir = cfg.workdir or os.path.join(run_dir, "frames")
    if not os.path.isdir(workdir):
        raise ConfigError(f"frames directory not found: {workdir}")
    names = sorted(n for n in os.listdir(workdir) if n.endswith(".jpg"))
    frames = sort_frames([os.path.join(workdir, n) for n in names])
    backend = _make_backend(cfg)
    try:
        results, skipped = detect_frames(backend, frames, workers=cfg.workers)
    finally:
        backend.close()
    if frames and not results:
        # partial failures are skipped and reported; a backend that produced
        # nothing at all is a dead backend, not a degraded run
        raise TransportError(
            f"backend produced no results; all {len(skipped)} frames failed "
            f"(first: {skipped[0][1]})"
        )
    timeline = build_timeline(results, cfg.confidence)
    payload = {
        "frames": len(frames),
        "records": len(timeline.records),
        "skipped": [{"frame": f.path, "reason": reason} for f, reason in skipped],
        "metadata": write_metadata(timeline),
    }
    if not dry_run:
        path = os.path.join(run_dir, METADATA_NAME)
        _write_text(path, payload["metadata"])
        payload["metadata_path"] = path
    return payload, timeline


def _pass_plan(
    cfg: PipelineConfig,
    run_dir: str,
    dry_run: bool,
    timeline: EventTimeline | None = None,
    metadata_path: str | None = None,
) -> tuple[dict, CutList]:
    if timeline is None:
        path = metadata_path or os.path.join(run_dir, METADATA_NAME)
        if not os.path.isfile(path):
            raise ConfigError(f"metadata file not found: {path}")
        timeline = read_metadata(_read_text(path))
    duration = _resolve_duration(cfg)
    cutlist = merge_windows(timeline, cfg.planner, duration)
    payload = {
        "clip_count": len(cutlist.clips),
        "total_highlight_s": total_highlight_duration(cutlist),
        "cutlist": cutlist_to_dict(cutlist),
    }
    if not dry_run:
        path = os.path.join(run_dir, CUTLIST_NAME)
        _write_text(path, write_cutlist(cutlist))
        payload["cutlist_path"] = path
    return payload, cutlist


def _pass_render(
    cfg: PipelineConfig,
    run_dir: str,
    dry_run: bool,
    resume: bool,
    cutlist: CutList | None = None,
    cutlist_path: str | None = None,
) -> dict:
    if cutlist is None:
        path = cutlist_path or os.path.join(run_dir, CUTLIST_NAME)
        if not os.path.isfile(path):
            raise ConfigError(f"cut list not found: {path}")
        cutlist = read_cutlist(_read_text(path))
    if not cfg.video:
        raise ConfigError("render needs --video")
    if not dry_run and not os.path.isfile(cfg.video):
        raise ConfigError(f"video not found: {cfg.video}")
    specs = plan_render(cutlist, cfg.video, run_dir, margin_px=cfg.overlay_margin_px)
    payload = {
        "commands": [spec_to_dict(s) for s in specs],
        "highlights_path": specs[-1].outputs[0],
    }
    if dry_run:
        return payload
    _write_text(
        os.path.join(run_dir, RENDER_PLAN_NAME),
        json.dumps(payload["commands"], indent=2) + "\n",
    )
    report = execute_plan(specs, workers=cfg.workers, resume=resume)
    if not report.ok:
        raise CommandFailedError(_failure_summary(report))
    return payload


def _pass_evaluate(cfg: PipelineConfig, run_dir: str, dry_run: bool, args) -> tuple[dict, str]:
    if not args.truth:
        raise ConfigError("evaluate needs --truth")
    if not os.path.isfile(args.truth):
        raise ConfigError(f"ground truth file not found: {args.truth}")
    if bool(args.metadata) == bool(args.cutlist):
        raise ConfigError("evaluate needs exactly one of --metadata / --cutlist")
    truth = parse_ground_truth(_read_text(args.truth))
    if args.metadata:
        if not os.path.isfile(args.metadata):
            raise ConfigError(f"metadata file not found: {args.metadata}")
        predicted = events_from_timeline(read_metadata(_read_text(args.metadata)))
    else:
        if not os.path.isfile(args.cutlist):
            raise ConfigError(f"cut list not found: {args.cutlist}")
        predicted = events_from_cutlist(read_cutlist(_read_text(args.cutlist)))
    report = match_events(predicted, truth, cfg.tolerance_s)
    table = report_table(report)
    payload = {"report": json.loads(write_report_json(report))}
    if not dry_run:
        text_path = os.path.join(run_dir, "eval_report.txt")
        json_path = os.path.join(run_dir, "eval_report.json")
        _write_text(text_path, table)
        _write_text(json_path, write_report_json(report))
        payload["report_paths"] = [text_path, json_path]
    return payload, table


def _failure_summary(report) -> str:
    failed = [e for e in report.entries if e.status == "failed"]
    first = failed[0]
    return (
        f"{len(failed)} command(s) failed; first failure ({first.purpose}, "
        f"exit {first.exit_code}): {first.stderr_tail.strip()[-300:]}"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="highlight-forge",
        description="Turn a full soccer match video into a highlights cut.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> argparse.ArgumentParser:
        p.add_argument("--config", help="config file path (or HIGHLIGHT_FORGE_CONFIG)")
        p.add_argument("--out-dir", help="artifact root directory")
        p.add_argument("--run-id", help="name of this run's artifact subdirectory")
        p.add_argument("--workers", type=int, help="parallel worker count")
        p.add_argument("--dry-run", action="store_true", help="print the plan, write nothing")
        return p

    p = common(sub.add_parser("sample", help="pass 1: plan/extract frames from the video"))
    p.add_argument("--video")
    p.add_argument("--interval", type=int, help="seconds between sampled frames")
    p.add_argument("--duration", type=int, help="video duration in seconds (skips probing)")
    p.add_argument("--workdir", help="directory for extracted frames")
    p.add_argument("--resume", action="store_true", help="skip commands whose outputs exist")

    p = common(sub.add_parser("detect", help="pass 2: detect events and write the metadata file"))
    p.add_argument("--workdir", help="directory holding the sampled frames")
    p.add_argument("--backend", help="backend profile name")
    p.add_argument("--fixture-table", help="detection table for the fixture backend")
    p.add_argument("--sidecar", help="sidecar address: HOST:PORT or cmd:<command line>")
    p.add_argument("--confidence", type=float, help="timeline confidence filter (fraction)")

    p = common(sub.add_parser("plan", help="pass 3a: turn the metadata file into a cut list"))
    p.add_argument("--metadata", help="metadata file to plan from")
    p.add_argument("--lead", type=int, help="seconds kept before each event")
    p.add_argument("--tail", type=int, help="seconds kept after each event")
    p.add_argument("--merge-gap", type=int, help="merge windows this many seconds apart")
    p.add_argument("--duration", type=int)
    p.add_argument("--video")

    p = common(sub.add_parser("render", help="pass 3b: cut, overlay, and concatenate clips"))
    p.add_argument("--cutlist", help="cut list JSON to render")
    p.add_argument("--video")
    p.add_argument("--resume", action="store_true")

    p = common(sub.add_parser("run", help="all passes: sample, detect, plan, render"))
    p.add_argument("--video")
    p.add_argument("--workdir")
    p.add_argument("--interval", type=int)
    p.add_argument("--duration", type=int)
    p.add_argument("--backend")
    p.add_argument("--fixture-table")
    p.add_argument("--sidecar")
    p.add_argument("--confidence", type=float)
    p.add_argument("--lead", type=int)
    p.add_argument("--tail", type=int)
    p.add_argument("--merge-gap", type=int)
    p.add_argument("--resume", action="store_true")

    p = common(sub.add_parser("evaluate", help="score a run against ground-truth events"))
    p.add_argument("--truth", help="ground truth CSV: timestamp_s,label")
    p.add_argument("--metadata", help="score the metadata file's events")
    p.add_argument("--cutlist", help="score the cut list's clips")
    p.add_argument("--tolerance", type=int, help="match window in seconds")

    return parser


_OVERRIDE_MAP = {
    "backend": "backend",
    "confidence": "confidence",
    "interval": "interval_s",
    "workers": "workers",
    "tolerance": "tolerance_s",
    "duration": "duration_s",
    "lead": "planner.lead_s",
    "tail": "planner.tail_s",
    "merge_gap": "planner.merge_gap_s",
    "video": "video",
    "workdir": "workdir",
    "out_dir": "out_dir",
    "fixture_table": "fixture_table",
    "sidecar": "sidecar",
}


def _overrides(args: argparse.Namespace) -> dict[str, object]:
    out: dict[str, object] = {}
    for arg_name, attr in _OVERRIDE_MAP.items():
        value = getattr(args, arg_name, None)
        if value is not None:
            out[attr] = value
    return out


def _dispatch(args: argparse.Namespace, cfg: PipelineConfig) -> int:
    run_id = args.run_id or time.strftime("run-%Y%m%d-%H%M%S") + f"-{os.getpid()}"
    run_dir = os.path.join(cfg.out_dir, run_id)
    dry = args.dry_run
    resume = getattr(args, "resume", False)

    if args.command == "sample":
        payload = _pass_sample(cfg, run_dir, dry, resume)
        if not dry:
            if "skipped" in payload:
                print(payload["skipped"])
            else:
                print(f"extracted {payload['frame_count']} frames into {payload['workdir']}")
    elif args.command == "detect":
        payload, _ = _pass_detect(cfg, run_dir, dry)
        if not dry:
            print(
                f"wrote {payload['metadata_path']} "
                f"({payload['records']} records, {len(payload['skipped'])} frames skipped)"
            )
    elif args.command == "plan":
        payload, _ = _pass_plan(cfg, run_dir, dry, metadata_path=args.metadata)
        if not dry:
            print(
                f"wrote {payload['cutlist_path']} "
                f"({payload['clip_count']} clips, {payload['total_highlight_s']}s of highlights)"
            )
    elif args.command == "render":
        payload = _pass_render(cfg, run_dir, dry, resume, cutlist_path=args.cutlist)
        if not dry:
            print(f"wrote {payload['highlights_path']}")
    elif args.command == "run":
        sample_payload = _pass_sample(cfg, run_dir, dry, resume)
        detect_payload, timeline = _pass_detect(cfg, run_dir, dry)
        plan_payload, cutlist = _pass_plan(cfg, run_dir, dry, timeline=timeline if dry else None)
        render_payload = _pass_render(cfg, run_dir, dry, resume, cutlist=cutlist if dry else None)
        payload = {
            "sample": sample_payload,
            "detect": detect_payload,
            "plan": plan_payload,
            "render": render_payload,
        }
        if not dry:
            print(f"run artifacts in {run_dir}")
            print(f"highlights: {render_payload['highlights_path']}")
    elif args.command == "evaluate":
        payload, table = _pass_evaluate(cfg, run_dir, dry, args)
        print(table, end="")
    else:  # pragma: no cover - argparse enforces the choices
        raise ConfigError(f"unknown command {args.command!r}")

    if dry:
        print(json.dumps(payload, indent=2))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        cfg = load_config(args.config, _overrides(args))
        return _dispatch(args, cfg)
    except ToolNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENVIRONMENT
    except (TransportError, WireProtocolError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    except CommandFailedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EXECUTION
    except (HighlightForgeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
