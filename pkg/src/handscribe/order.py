"""Reading-order machinery: cluster word boxes into lines, serialize them
row-major, and maintain the prev/next neighbor map the interactive swap
feature relies on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import UnknownIdError, ZeroAreaError


@dataclass
class BoxRecord:
    """A detected or user-drawn word box.

    `score` is absent for user-drawn boxes; `text` is absent until
    recognition fills it in; `text_edited` marks human-authored text that
    recognition must never overwrite.
    """

    id: str
    x: int
    y: int
    w: int
    h: int
    angle: float = 0.0
    score: Optional[float] = None
    text: Optional[str] = None
    text_edited: bool = False

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ZeroAreaError(f"box {self.id} has non-positive size {self.w}x{self.h}")

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)


@dataclass(frozen=True)
class OrderConfig:
    line_overlap_ratio: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.line_overlap_ratio <= 1.0:
            raise ValueError("line_overlap_ratio must be in (0, 1]")


@dataclass
class OrderedLayout:
    """Reading order as a sequence of box ids plus derived neighbor links."""

    sequence: list[str]
    neighbors: dict[str, tuple[Optional[str], Optional[str]]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.neighbors:
            self.neighbors = _links(self.sequence)


def _links(sequence: list[str]) -> dict[str, tuple[Optional[str], Optional[str]]]:
    out: dict[str, tuple[Optional[str], Optional[str]]] = {}
    for k, box_id in enumerate(sequence):
        prev_id = sequence[k - 1] if k > 0 else None
        next_id = sequence[k + 1] if k + 1 < len(sequence) else None
        out[box_id] = (prev_id, next_id)
    return out


def layout_from_sequence(sequence: Iterable[str]) -> OrderedLayout:
    return OrderedLayout(sequence=list(sequence))


def line_clusters(boxes: Iterable[BoxRecord], cfg: OrderConfig = OrderConfig()) -> list[list[BoxRecord]]:
    """Group boxes into text lines.

    Boxes are swept by ascending top-y; a box joins the currently open
    line when its vertical overlap with the line's running y-interval is
    at least line_overlap_ratio times the smaller of the box height and
    the line height, otherwise it opens a new line. Lines are then ordered
    by mean center-y and their members left to right.
    """
    pending = sorted(boxes, key=lambda b: (b.y, b.x, b.id))
    lines: list[list[BoxRecord]] = []
    lo = hi = 0.0
    for box in pending:
        by0, by1 = float(box.y), float(box.y + box.h)
        if lines:
            overlap = min(hi, by1) - max(lo, by0)
            needed = cfg.line_overlap_ratio * min(box.h, hi - lo)
            if overlap >= needed:
                lines[-1].append(box)
                lo, hi = min(lo, by0), max(hi, by1)
                continue
        lines.append([box])
        lo, hi = by0, by1

    for line in lines:
        line.sort(key=lambda b: (b.x, b.y, b.id))
    lines.sort(key=lambda line: (
        sum(b.center[1] for b in line) / len(line),
        min(b.x for b in line),
        line[0].id,
    ))
    return lines


def serialize_boxes(boxes: Iterable[BoxRecord], cfg: OrderConfig = OrderConfig()) -> OrderedLayout:
    """Compute the row-major reading order of a page's boxes.

    Deterministic and invariant under permutation of the input list; the
    output sequence is always a permutation of the input ids.
    """
    sequence = [b.id for line in line_clusters(boxes, cfg) for b in line]
    return OrderedLayout(sequence=sequence)


def group_sequence(
    boxes: Iterable[BoxRecord],
    sequence: list[str],
    cfg: OrderConfig = OrderConfig(),
) -> list[list[str]]:
    """Split an ordered id sequence into transcript lines.

    Line membership comes from geometry (line_clusters); a break is
    emitted whenever consecutive sequence entries fall on different
    geometric lines. For an unswapped serialization this reproduces the
    serializer's own clusters exactly.
    """
    line_of: dict[str, int] = {}
    for k, line in enumerate(line_clusters(boxes, cfg)):
        for box in line:
            line_of[box.id] = k
    groups: list[list[str]] = []
    last = None
    for box_id in sequence:
        if box_id not in line_of:
            raise UnknownIdError(f"sequence id {box_id} not among boxes")
        current = line_of[box_id]
        if not groups or current != last:
            groups.append([])
        groups[-1].append(box_id)
        last = current
    return groups


def swap(layout: OrderedLayout, a: str, b: str) -> OrderedLayout:
    """Exchange the positions of two ids; every other position is kept."""
    try:
        ia = layout.sequence.index(a)
        ib = layout.sequence.index(b)
    except ValueError as exc:
        raise UnknownIdError(f"cannot swap: {exc}") from exc
    seq = list(layout.sequence)
    seq[ia], seq[ib] = seq[ib], seq[ia]
    return OrderedLayout(sequence=seq)


def clamp_rect(x: int, y: int, w: int, h: int, page_w: int, page_h: int) -> tuple[int, int, int, int]:
    """Intersect a rectangle with the page; raises ZeroAreaError when
    nothing remains."""
    x0 = max(0, min(x, page_w))
    y0 = max(0, min(y, page_h))
    x1 = max(0, min(x + w, page_w))
    y1 = max(0, min(y + h, page_h))
    if x1 - x0 <= 0 or y1 - y0 <= 0:
        raise ZeroAreaError(f"rect ({x},{y},{w},{h}) has no area on a {page_w}x{page_h} page")
    return x0, y0, x1 - x0, y1 - y0


def fresh_id(existing: Iterable[str]) -> str:
    """Next free id in the b<N> series."""
    top = 0
    taken = set(existing)
    for box_id in taken:
        if box_id.startswith("b") and box_id[1:].isdigit():
            top = max(top, int(box_id[1:]))
    candidate = f"b{top + 1}"
    while candidate in taken:  # non-numeric collisions
        top += 1
        candidate = f"b{top + 1}"
    return candidate
