"""Ground-truth interchange: labelImg XML in, annotation lines and CSVs out."""
from __future__ import annotations

import math
import os
import random
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from typing import NamedTuple

from .errors import GeometryError, ParseError, UnknownLabelError
from .geometry import BoundingBox, ImageDims, horizontal_flip
from .labels import canonical_label

CSV_HEADER = "filename,x1,y1,x2,y2,class"

FLIP_SUFFIX = "_hflip"


@dataclass(frozen=True)
class AnnotatedImage:
    """An image path, its dimensions, and the labeled boxes inside it."""

    image_path: str
    dims: ImageDims
    objects: tuple[tuple[str, BoundingBox], ...]

    def __post_init__(self) -> None:
        if not self.image_path:
            raise ValueError("image path must be non-empty")
        for label, box in self.objects:
            canonical_label(label)
            if box.x2 > self.dims.width or box.y2 > self.dims.height:
                raise GeometryError(
                    f"{self.image_path}: box {box.as_tuple()} lies outside "
                    f"{self.dims.width}x{self.dims.height}"
                )


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[AnnotatedImage, ...]
    test: tuple[AnnotatedImage, ...]

    def __post_init__(self) -> None:
        overlap = {i.image_path for i in self.train} & {i.image_path for i in self.test}
        if overlap:
            raise ValueError("train/test share image paths: " + ", ".join(sorted(overlap)))


class AnnotationRecord(NamedTuple):
    image_path: str
    box: BoundingBox
    label: str


def _required_text(elem: ET.Element, path: str, context: str) -> str:
    node = elem.find(path)
    if node is None or node.text is None or not node.text.strip():
        raise ParseError(f"{context}: missing <{path}> element")
    return node.text.strip()


def parse_voc_xml(text: str) -> AnnotatedImage:
    """Parse one Pascal-VOC style annotation document (labelImg output).

    Labels are matched case-insensitively against the four event classes
    and stored canonically; anything else is rejected.
    """
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        line, col = exc.position
        raise ParseError(f"malformed XML at line {line}, column {col}: {exc.msg}") from None

    filename = _required_text(root, "filename", "annotation")
    width = int(_required_text(root, "size/width", filename))
    height = int(_required_text(root, "size/height", filename))

    objects: list[tuple[str, BoundingBox]] = []
    for obj in root.iter("object"):
        label = canonical_label(_required_text(obj, "name", filename))
        box = BoundingBox(
            float(_required_text(obj, "bndbox/xmin", filename)),
            float(_required_text(obj, "bndbox/ymin", filename)),
            float(_required_text(obj, "bndbox/xmax", filename)),
            float(_required_text(obj, "bndbox/ymax", filename)),
        )
        objects.append((label, box))

    return AnnotatedImage(
        image_path=filename,
        dims=ImageDims(width, height),
        objects=tuple(objects),
    )


def write_annotation_lines(images: list[AnnotatedImage]) -> str:
    """Render images as headerless ``path,x1,y1,x2,y2,label`` lines.

    Coordinates become integers: floor for the top-left corner, ceil for the
    bottom-right, so the integer box never undershoots the original.
    """
    out: list[str] = []
    for image in images:
        for label, box in image.objects:
            out.append(
                f"{image.image_path},{math.floor(box.x1)},{math.floor(box.y1)},"
                f"{math.ceil(box.x2)},{math.ceil(box.y2)},{label}\n"
            )
    return "".join(out)


def parse_annotation_lines(text: str) -> list[AnnotationRecord]:
    """Inverse of :func:`write_annotation_lines`; blank lines are skipped."""
    records: list[AnnotationRecord] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 6:
            raise ParseError(
                f"line {lineno}: expected 6 comma-separated fields, got {len(parts)}"
            )
        path = parts[0]
        try:
            coords = [int(p) for p in parts[1:5]]
        except ValueError:
            raise ParseError(f"line {lineno}: non-numeric coordinate in {line!r}") from None
        try:
            label = canonical_label(parts[5])
        except UnknownLabelError as exc:
            raise UnknownLabelError(f"line {lineno}: {exc}") from None
        try:
            box = BoundingBox(*(float(c) for c in coords))
        except GeometryError as exc:
            raise ParseError(f"line {lineno}: {exc}") from None
        records.append(AnnotationRecord(path, box, label))
    return records


def flipped_path(image_path: str) -> str:
    root, ext = os.path.splitext(image_path)
    return f"{root}{FLIP_SUFFIX}{ext}"


def augment_flip(split: list[AnnotatedImage]) -> list[AnnotatedImage]:
    """Double a dataset by following each image with its mirrored twin."""
    out: list[AnnotatedImage] = []
    for image in split:
        out.append(image)
        flipped = tuple(
            (label, horizontal_flip(box, image.dims)) for label, box in image.objects
        )
        out.append(
            AnnotatedImage(
                image_path=flipped_path(image.image_path),
                dims=image.dims,
                objects=flipped,
            )
        )
    return out


def write_dataset_csv(images: list[AnnotatedImage]) -> str:
    """Same rows as the annotation lines, with the train/test CSV header."""
    return CSV_HEADER + "\n" + write_annotation_lines(images)


def split_dataset(
    images: list[AnnotatedImage], test_fraction: float = 0.25, seed: int = 0
) -> DatasetSplit:
    """Seeded random split; input order is preserved within each side."""
    if not (0.0 <= test_fraction <= 1.0):
        raise ValueError(f"test_fraction must lie in [0, 1], got {test_fraction}")
    indices = list(range(len(images)))
    random.Random(seed).shuffle(indices)
    n_test = round(len(images) * test_fraction)
    test_idx = set(indices[:n_test])
    train = tuple(img for i, img in enumerate(images) if i not in test_idx)
    test = tuple(img for i, img in enumerate(images) if i in test_idx)
    return DatasetSplit(train=train, test=test)
