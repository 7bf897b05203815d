"""Model backends behind one tiny interface.

A model is anything with `detect(frame_path) -> list[dict]` returning
wire-format detections in the ORIGINAL frame's pixel coordinates. The
sidecar owns input resizing, so every backend un-scales its own outputs.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass

from .tables import EVENT_CLASSES

# torchvision-style detection models label the background 0 and count
# classes from 1
LABEL_BY_INDEX = {index + 1: name for index, name in enumerate(EVENT_CLASSES)}


class FrameDecodeError(Exception):
    """The requested frame exists but cannot be decoded as an image."""


def _round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class InputSizing:
    """How a frame is resized before inference.

    `min_dim` mode scales uniformly until the shorter side hits `min_dim`;
    `fixed` mode stretches to exactly `width` x `height`.
    """

    mode: str = "min_dim"
    min_dim: int = 300
    width: int = 320
    height: int = 320

    def __post_init__(self) -> None:
        if self.mode not in ("min_dim", "fixed"):
            raise ValueError(f"unknown sizing mode {self.mode!r}")
        if min(self.min_dim, self.width, self.height) < 1:
            raise ValueError("sizing targets must be >= 1")

    @classmethod
    def parse(cls, text: str) -> "InputSizing":
        """Parse `min:300` or `fixed:320x320`."""
        kind, _, value = text.partition(":")
        if kind == "min" and value.isdigit():
            return cls(mode="min_dim", min_dim=int(value))
        if kind == "fixed":
            w, _, h = value.partition("x")
            if w.isdigit() and h.isdigit():
                return cls(mode="fixed", width=int(w), height=int(h))
        raise ValueError(f"bad input-size {text!r}; use min:<px> or fixed:<w>x<h>")

    def resized(self, width: int, height: int) -> tuple[int, int]:
        if self.mode == "fixed":
            return self.width, self.height
        scale = self.min_dim / min(width, height)
        if width <= height:
            return self.min_dim, _round_half_away(height * scale)
        return _round_half_away(width * scale), self.min_dim


def _open_image(path: str):
    from PIL import Image, UnidentifiedImageError

    try:
        image = Image.open(path)
        image.load()
        return image
    except (OSError, UnidentifiedImageError, ValueError) as exc:
        raise FrameDecodeError(str(exc)) from None


def _clamp_box(box: list[float], width: int, height: int) -> list[float] | None:
    """Clip a box into the frame; None when nothing of it remains."""
    x1 = min(max(box[0], 0.0), float(width))
    y1 = min(max(box[1], 0.0), float(height))
    x2 = min(max(box[2], 0.0), float(width))
    y2 = min(max(box[3], 0.0), float(height))
    if x1 >= x2 or y1 >= y2:
        return None
    return [x1, y1, x2, y2]


class StubModel:
    """Canned detections from a table; frames must still decode.

    Keeps protocol conformance testable with no model weights: the table
    speaks for the network, the image check keeps error behavior honest.
    Boxes are clipped into the frame so the protocol's geometry invariant
    holds no matter what the table says.
    """

    def __init__(self, table: dict[str, list[dict]]):
        self._table = table

    def detect(self, frame_path: str) -> list[dict]:
        with _open_image(frame_path) as image:
            width, height = image.size
        out: list[dict] = []
        for det in self._table.get(os.path.basename(frame_path), []):
            box = _clamp_box(det["box"], width, height)
            if box is None:
                continue
            out.append({"label": det["label"], "confidence": det["confidence"], "box": box})
        return out


class TorchScriptModel:
    """Wrapper around a TorchScript detection module.

    The artifact must accept a float32 CHW image tensor scaled to [0, 1]
    and return `(boxes[N,4], labels[N], scores[N])` in the resized input's
    coordinate space, labels counted from 1 in the event-class order.
    Outputs are un-scaled back to original frame pixels here.
    """

    def __init__(self, model_path: str, sizing: InputSizing, device: str = "cpu"):
        import torch

        self._torch = torch
        self._module = torch.jit.load(model_path, map_location=device)
        self._module.eval()
        self._sizing = sizing
        self._device = device

    def detect(self, frame_path: str) -> list[dict]:
        torch = self._torch
        with _open_image(frame_path) as image:
            rgb = image.convert("RGB")
            width, height = rgb.size
            new_w, new_h = self._sizing.resized(width, height)
            resized = rgb.resize((new_w, new_h))
        tensor = (
            torch.frombuffer(bytearray(resized.tobytes()), dtype=torch.uint8)
            .reshape(new_h, new_w, 3)
            .permute(2, 0, 1)
            .to(self._device)
            .float()
            / 255.0
        )
        with torch.no_grad():
            boxes, labels, scores = self._module(tensor)

        sx = new_w / width
        sy = new_h / height
        out: list[dict] = []
        for box, label, score in zip(boxes.tolist(), labels.tolist(), scores.tolist()):
            name = LABEL_BY_INDEX.get(int(label))
            if name is None:
                continue
            clamped = _clamp_box(
                [box[0] / sx, box[1] / sy, box[2] / sx, box[3] / sy], width, height
            )
            if clamped is None:
                continue
            confidence = min(max(float(score), 0.0), 1.0)
            out.append({"label": name, "confidence": confidence, "box": clamped})
        return out
