"""Detector sidecar: answers per-frame detection requests over a
newline-delimited JSON protocol (see protocol.md at the repository root).

Ships two model backends: a stub driven by a canned detection table, for
protocol conformance testing with no weights, and a TorchScript wrapper for
real object-detection models fine-tuned on the four soccer event classes.
"""
from .models import FrameDecodeError, InputSizing, StubModel
from .server import handle_line, serve_stdio, serve_tcp
from .tables import parse_stub_table

__version__ = "0.1.0"
