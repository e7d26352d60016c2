"""Face-crop box geometry: scale about the centre, clamp to the frame."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

from .errors import DataError

DEFAULT_SCALE = 1.3


class BoxError(DataError):
    pass


@dataclass(frozen=True)
class BBox:
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        coords = (self.x1, self.y1, self.x2, self.y2)
        if not all(math.isfinite(c) for c in coords):
            raise BoxError(f"non-finite box coordinate in {coords}")
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise BoxError(f"degenerate box {coords}")

    @property
    def center(self):
        return ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)

    @property
    def width(self):
        return self.x2 - self.x1

    @property
    def height(self):
        return self.y2 - self.y1

    def as_tuple(self):
        return (self.x1, self.y1, self.x2, self.y2)


def scale_bbox(b: BBox, factor: float = DEFAULT_SCALE, image_w: float = math.inf,
               image_h: float = math.inf) -> BBox:
    """Grow (or shrink) width and height by ``factor`` about the centre, then clamp."""
    if not factor > 0:
        raise ValueError(f"scale factor must be positive, got {factor}")
    if not (image_w > 0 and image_h > 0):
        raise ValueError("image dimensions must be positive")
    # expressed as an offset of each edge so factor 1 is exactly the identity
    dx = b.width * (factor - 1.0) / 2.0
    dy = b.height * (factor - 1.0) / 2.0
    x1, x2 = max(b.x1 - dx, 0.0), min(b.x2 + dx, image_w)
    y1, y2 = max(b.y1 - dy, 0.0), min(b.y2 + dy, image_h)
    if not (x1 < x2 and y1 < y2):
        raise BoxError(f"box {b.as_tuple()} lies outside the {image_w}x{image_h} image")
    return BBox(x1, y1, x2, y2)


def round_bbox(b: BBox) -> tuple:
    """Integer pixel box enclosing ``b`` (floor the minima, ceil the maxima)."""
    return (math.floor(b.x1), math.floor(b.y1), math.ceil(b.x2), math.ceil(b.y2))


def scale_box_rows(rows, factor, image_w, image_h):
    """Scale ``(video_id, frame, x1, y1, x2, y2)`` records; yields the same shape."""
    for lineno, row in enumerate(rows, 1):
        if not row or not "".join(row).strip():
            continue
        if len(row) != 6:
            raise BoxError(f"line {lineno}: expected 6 fields, got {len(row)}")
        vid, frame = row[0], row[1]
        try:
            box = BBox(*(float(v) for v in row[2:]))
        except ValueError as exc:
            raise BoxError(f"line {lineno}: {exc}") from exc
        out = scale_bbox(box, factor, image_w, image_h)
        yield [vid, frame] + [repr(c) for c in out.as_tuple()]


def scale_box_file(src, dst, factor=DEFAULT_SCALE, image_w=math.inf, image_h=math.inf):
    with open(src, newline="") as fin:
        rows = list(csv.reader(fin))
    out = list(scale_box_rows(rows, factor, image_w, image_h))
    with open(dst, "w", newline="") as fout:
        csv.writer(fout).writerows(out)
    return len(out)
