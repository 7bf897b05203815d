"""Command line for the detector sidecar."""
from __future__ import annotations

import argparse
import os
import sys

from .models import InputSizing, StubModel
from .server import serve_stdio, serve_tcp
from .tables import parse_stub_table


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="detector-sidecar",
        description="Serve per-frame event detections over newline-delimited JSON.",
    )
    parser.add_argument("--stub", metavar="TABLE", help="serve canned detections from this table")
    parser.add_argument("--model", metavar="PATH", help="serve a TorchScript detection model")
    parser.add_argument("--device", default="cpu", help="inference device for --model")
    parser.add_argument(
        "--input-size",
        default="min:300",
        help="model input sizing: min:<px> or fixed:<w>x<h>",
    )
    parser.add_argument(
        "--listen",
        default="stdio",
        help="stdio (default) or HOST:PORT for a local TCP listener",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if bool(args.stub) == bool(args.model):
        print("error: exactly one of --stub / --model is required", file=sys.stderr)
        return 2

    try:
        sizing = InputSizing.parse(args.input_size)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    artifact = args.stub or args.model
    if not os.path.isfile(artifact):
        print(f"error: file not found: {artifact}", file=sys.stderr)
        return 2

    # model loading must fail before the first request is served
    try:
        if args.stub:
            with open(args.stub, encoding="utf-8") as fh:
                model = StubModel(parse_stub_table(fh.read()))
        else:
            from .models import TorchScriptModel

            model = TorchScriptModel(args.model, sizing, device=args.device)
    except Exception as exc:
        print(f"error: cannot load model: {exc}", file=sys.stderr)
        return 1

    if args.listen == "stdio":
        serve_stdio(model)
        return 0
    host, _, port = args.listen.rpartition(":")
    if not host or not port.isdigit():
        print(f"error: bad --listen value {args.listen!r}", file=sys.stderr)
        return 2
    try:
        serve_tcp(model, host, int(port))
    except KeyboardInterrupt:
        pass
    return 0


if __name__ == "__main__":
    sys.exit(main())
