"""Pass 2 front half: detection backends behind one small interface.

A backend is anything with a ``profile`` attribute and a
``raw_detections(frame)`` method. Two ship here: a deterministic fixture
backend driven by a text table (for model-free runs and tests) and a client
for an external detector sidecar speaking newline-delimited JSON.

Wire protocol (one line per message, see protocol.md at the repo root):

    request   {"id": <int>, "frame": "<path>"}
    response  {"id": <int>, "detections": [{"label": ..., "confidence": ..., "box": [x1, y1, x2, y2]}]}

Responses must arrive in request order with matching ids; any other line is
a protocol error.
"""
from __future__ import annotations

import json
import logging
import os
import shlex
import socket
import subprocess
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

from .errors import (
    ConfigError,
    ParseError,
    TransportError,
    UnknownLabelError,
    WireProtocolError,
)
from .geometry import BoundingBox, Detection, GeometryError, ImageDims, nms
from .labels import canonical_label
from .sampling import FrameRef

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BackendProfile:
    """Thresholds and input sizing for one detector configuration."""

    name: str
    box_confidence_threshold: float
    overlap_threshold: float
    input_min_dim: int | None = None
    fixed_input: ImageDims | None = None

    def __post_init__(self) -> None:
        for value in (self.box_confidence_threshold, self.overlap_threshold):
            if not (0.0 <= value <= 1.0):
                raise ValueError(f"{self.name}: thresholds must lie in [0, 1], got {value}")
        if (self.input_min_dim is None) == (self.fixed_input is None):
            raise ValueError(
                f"{self.name}: exactly one of input_min_dim / fixed_input must be set"
            )


def builtin_profiles() -> tuple[BackendProfile, ...]:
    """Profiles shipped with the pipeline.

    ``frcnn-resnet50-strict`` is the same backend as ``frcnn-resnet50`` with
    the stricter 0.8 confidence cutoff that trades recall for fewer false
    positives.
    """
    return (
        BackendProfile("frcnn-vgg16", 0.9, 0.7, input_min_dim=300),
        BackendProfile("frcnn-resnet50", 0.6, 0.7, fixed_input=ImageDims(320, 320)),
        BackendProfile("frcnn-resnet50-strict", 0.8, 0.7, fixed_input=ImageDims(320, 320)),
        BackendProfile("fixture", 0.9, 0.7, input_min_dim=300),
    )


def profile_by_name(name: str) -> BackendProfile:
    for profile in builtin_profiles():
        if profile.name == name:
            return profile
    known = ", ".join(p.name for p in builtin_profiles())
    raise ConfigError(f"unknown backend profile {name!r}; known profiles: {known}")


@dataclass(frozen=True)
class FrameDetections:
    """Detections for one frame, sorted by descending confidence."""

    frame: FrameRef
    detections: tuple[Detection, ...]

    def __post_init__(self) -> None:
        confs = [d.confidence for d in self.detections]
        if any(a < b for a, b in zip(confs, confs[1:])):
            raise ValueError("detections must be sorted by descending confidence")


def filter_confident(dets: FrameDetections, threshold: float) -> FrameDetections:
    """Keep detections strictly above the threshold, order preserved.

    The comparison is strict: a detection at exactly the threshold is
    dropped, so golden outputs do not depend on float-boundary luck.
    """
    if not (0.0 <= threshold <= 1.0):
        raise ValueError(f"threshold must lie in [0, 1], got {threshold}")
    kept = tuple(d for d in dets.detections if d.confidence > threshold)
    return replace(dets, detections=kept)


def parse_fixture_table(text: str) -> dict[str, list[Detection]]:
    """Parse the fixture backend's table.

    One detection per line, tab separated:
    ``frame<TAB>label<TAB>confidence<TAB>x1<TAB>y1<TAB>x2<TAB>y2``.
    Blank lines and lines starting with ``#`` are skipped. Repeated frame
    names accumulate detections in file order.
    """
    table: dict[str, list[Detection]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 7:
            raise ParseError(
                f"line {lineno}: expected 7 tab-separated fields, got {len(parts)}"
            )
        frame_name = parts[0].strip()
        try:
            label = canonical_label(parts[1])
        except UnknownLabelError as exc:
            raise UnknownLabelError(f"line {lineno}: {exc}") from None
        try:
            confidence = float(parts[2])
            coords = [float(p) for p in parts[3:7]]
        except ValueError:
            raise ParseError(f"line {lineno}: non-numeric field in {line!r}") from None
        try:
            det = Detection(BoundingBox(*coords), label, confidence)
        except GeometryError as exc:
            raise ParseError(f"line {lineno}: {exc}") from None
        table.setdefault(frame_name, []).append(det)
    return table


class FixtureBackend:
    """Deterministic backend: detections come from a frame-name keyed table."""

    def __init__(self, table: dict[str, list[Detection]], profile: BackendProfile | None = None):
        self.profile = profile or profile_by_name("fixture")
        self._table = {name: tuple(dets) for name, dets in table.items()}

    @classmethod
    def load(cls, path: str, profile: BackendProfile | None = None) -> "FixtureBackend":
        with open(path, encoding="utf-8") as fh:
            return cls(parse_fixture_table(fh.read()), profile=profile)

    def raw_detections(self, frame: FrameRef) -> list[Detection]:
        return list(self._table.get(os.path.basename(frame.path), ()))

    def spawn(self) -> "FixtureBackend":
        return self

    def reset(self) -> None:
        pass

    def close(self) -> None:
        pass


class _StdioTransport:
    """Line transport over a spawned sidecar process's stdin/stdout."""

    def __init__(self, argv: list[str]):
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise TransportError(f"failed to start sidecar {argv!r}: {exc}") from None

    def round_trip(self, line: str) -> str:
        assert self._proc.stdin is not None and self._proc.stdout is not None
        try:
            self._proc.stdin.write(line + "\n")
            self._proc.stdin.flush()
            reply = self._proc.stdout.readline()
        except OSError as exc:
            raise TransportError(f"sidecar pipe failed: {exc}") from None
        if reply == "":
            raise TransportError("sidecar closed its output stream")
        return reply.rstrip("\n")

    def close(self) -> None:
        for pipe in (self._proc.stdin, self._proc.stdout):
            try:
                if pipe:
                    pipe.close()
            except OSError:
                pass
        try:
            self._proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait()


class _TcpTransport:
    """Line transport over a local TCP connection."""

    def __init__(self, host: str, port: int):
        try:
            self._sock = socket.create_connection((host, port), timeout=60)
        except OSError as exc:
            raise TransportError(f"cannot connect to sidecar at {host}:{port}: {exc}") from None
        self._file = self._sock.makefile("rw", encoding="utf-8", newline="\n")

    def round_trip(self, line: str) -> str:
        try:
            self._file.write(line + "\n")
            self._file.flush()
            reply = self._file.readline()
        except OSError as exc:
            raise TransportError(f"sidecar connection failed: {exc}") from None
        if reply == "":
            raise TransportError("sidecar closed the connection")
        return reply.rstrip("\n")

    def close(self) -> None:
        try:
            self._file.close()
            self._sock.close()
        except OSError:
            pass


def _open_transport(spec: str):
    if spec.startswith("cmd:"):
        argv = shlex.split(spec[len("cmd:") :])
        if not argv:
            raise ConfigError(f"empty sidecar command in {spec!r}")
        return _StdioTransport(argv)
    host, sep, port = spec.rpartition(":")
    if sep and host and port.isdigit():
        return _TcpTransport(host, int(port))
    raise ConfigError(
        f"unrecognized sidecar address {spec!r}; use HOST:PORT or cmd:<command line>"
    )


class SidecarBackend:
    """Client for an external detector process.

    Owns one connection; ``spawn()`` hands each worker thread a fresh one so
    request/response ordering is per-connection. Not itself thread-safe.
    """

    def __init__(self, spec: str, profile: BackendProfile):
        self.profile = profile
        self._spec = spec
        self._transport = None
        self._next_id = 1

    def spawn(self) -> "SidecarBackend":
        return SidecarBackend(self._spec, self.profile)

    def reset(self) -> None:
        self.close()

    def close(self) -> None:
        if self._transport is not None:
            self._transport.close()
            self._transport = None

    def raw_detections(self, frame: FrameRef) -> list[Detection]:
        if self._transport is None:
            self._transport = _open_transport(self._spec)
            self._next_id = 1
        request_id = self._next_id
        self._next_id += 1
        request = json.dumps({"id": request_id, "frame": frame.path}, separators=(",", ":"))
        reply = self._transport.round_trip(request)
        return _parse_response(reply, request_id)


def _parse_response(reply: str, request_id: int) -> list[Detection]:
    try:
        payload = json.loads(reply)
    except json.JSONDecodeError as exc:
        raise WireProtocolError(f"response is not valid JSON: {exc}") from None
    if not isinstance(payload, dict):
        raise WireProtocolError(f"response must be a JSON object, got {type(payload).__name__}")
    if payload.get("id") != request_id:
        raise WireProtocolError(
            f"response id {payload.get('id')!r} does not match request id {request_id}"
        )
    if payload.get("error"):
        raise WireProtocolError(f"sidecar reported an error for this frame: {payload['error']}")
    raw = payload.get("detections")
    if not isinstance(raw, list):
        raise WireProtocolError("response is missing the detections list")
    detections: list[Detection] = []
    for entry in raw:
        try:
            box = entry["box"]
            det = Detection(
                BoundingBox(float(box[0]), float(box[1]), float(box[2]), float(box[3])),
                canonical_label(entry["label"]),
                float(entry["confidence"]),
            )
        except (KeyError, IndexError, TypeError, ValueError, GeometryError, UnknownLabelError) as exc:
            raise WireProtocolError(f"malformed detection {entry!r}: {exc}") from None
        detections.append(det)
    return detections


def detect_frame(backend, frame: FrameRef) -> FrameDetections:
    """Run one frame through a backend and suppress duplicate boxes.

    Raw backend output passes through NMS at the profile's overlap
    threshold and comes back sorted by descending confidence.
    """
    raw = backend.raw_detections(frame)
    kept = nms(raw, backend.profile.overlap_threshold)
    return FrameDetections(frame=frame, detections=tuple(kept))


def detect_frames(
    backend,
    frames: list[FrameRef],
    workers: int = 1,
) -> tuple[list[FrameDetections], list[tuple[FrameRef, str]]]:
    """Detect over many frames, skipping (and recording) per-frame failures.

    Transport errors get one retry on a fresh connection; protocol errors
    skip the frame immediately. Results come back ordered by timestamp no
    matter how workers interleave.
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")

    skipped: list[tuple[FrameRef, str]] = []
    skip_lock = threading.Lock()

    def run_one(handle, frame: FrameRef) -> FrameDetections | None:
        try:
            return detect_frame(handle, frame)
        except TransportError as exc:
            log.warning("frame %s: transport error (%s); retrying once", frame.path, exc)
            handle.reset()
            try:
                return detect_frame(handle, frame)
            except (TransportError, WireProtocolError) as exc2:
                reason = str(exc2)
        except WireProtocolError as exc:
            reason = str(exc)
        with skip_lock:
            skipped.append((frame, reason))
        log.warning("frame %s skipped: %s", frame.path, reason)
        return None

    results: list[FrameDetections] = []
    if workers == 1 or len(frames) <= 1:
        for frame in frames:
            out = run_one(backend, frame)
            if out is not None:
                results.append(out)
    else:
        local = threading.local()
        handles: list = []
        handles_lock = threading.Lock()

        def worker(frame: FrameRef) -> FrameDetections | None:
            handle = getattr(local, "handle", None)
            if handle is None:
                handle = backend.spawn()
                local.handle = handle
                with handles_lock:
                    handles.append(handle)
            return run_one(handle, frame)

        with ThreadPoolExecutor(max_workers=workers) as pool:
            for out in pool.map(worker, frames):
                if out is not None:
                    results.append(out)
        for handle in handles:
            if handle is not backend:
                handle.close()

    if skipped:
        log.warning("skipped %d of %d frames", len(skipped), len(frames))
    results.sort(key=lambda fd: fd.frame.timestamp_s)
    return results, skipped
