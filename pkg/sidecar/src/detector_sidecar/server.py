"""Request loop: one response line per request line, ids echoed in order.

Each stream (stdin or one TCP connection) is served by a single-threaded
loop, so the protocol's per-connection ordering guarantee holds by
construction. TCP connections each get their own loop thread.
"""
from __future__ import annotations

import json
import socket
import sys
import threading

from .models import FrameDecodeError


def _encode(payload: dict) -> str:
    return json.dumps(payload, separators=(",", ":"))


def _error_response(request_id: int, error: str) -> str:
    return _encode({"id": request_id, "detections": [], "error": error})


def handle_line(model, line: str) -> str:
    """Turn one request line into one response line, never raising."""
    try:
        request = json.loads(line)
    except ValueError:
        return _error_response(-1, "bad request")
    if not isinstance(request, dict) or not isinstance(request.get("id"), int):
        return _error_response(-1, "bad request")
    request_id = request["id"]
    frame = request.get("frame")
    if not isinstance(frame, str) or not frame:
        return _error_response(request_id, "bad request")
    try:
        detections = model.detect(frame)
    except FrameDecodeError:
        return _error_response(request_id, "decode")
    return _encode({"id": request_id, "detections": detections})


def serve_stream(model, reader, writer) -> None:
    for line in reader:
        if not line.strip():
            continue
        writer.write(handle_line(model, line) + "\n")
        writer.flush()


def serve_stdio(model) -> None:
    serve_stream(model, sys.stdin, sys.stdout)


def serve_tcp(model, host: str, port: int) -> None:
    """Listen forever; the bound address is announced on stderr so callers
    can pass port 0 and discover the ephemeral port."""
    server = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    server.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    server.bind((host, port))
    server.listen(8)
    bound_host, bound_port = server.getsockname()
    print(f"listening on {bound_host}:{bound_port}", file=sys.stderr, flush=True)

    def run_connection(conn: socket.socket) -> None:
        with conn, conn.makefile("rw", encoding="utf-8", newline="\n") as stream:
            try:
                serve_stream(model, stream, stream)
            except OSError:
                pass

    try:
        while True:
            conn, _ = server.accept()
            threading.Thread(target=run_connection, args=(conn,), daemon=True).start()
    finally:
        server.close()
