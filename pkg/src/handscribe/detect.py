"""Decode detector output maps into scored word boxes and suppress
duplicates.

The neural detector itself is a pluggable backend: anything that maps a
page to score/geometry grids. Two implementations ship here — a reader
for pre-computed maps stored in the ``SGM1`` tensor archive, and an
in-memory stub for tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from . import sgm
from .errors import BackendFailure
from .preproc import GrayImage

STRIDE = 4


@dataclass(frozen=True)
class DetectConfig:
    score_threshold: float = 0.5
    iou_threshold: float = 0.4

    def __post_init__(self):
        if not 0.0 <= self.score_threshold <= 1.0:
            raise ValueError("score_threshold must be in [0, 1]")
        if not 0.0 <= self.iou_threshold <= 1.0:
            raise ValueError("iou_threshold must be in [0, 1]")


@dataclass(frozen=True)
class ScoreGeoMaps:
    """Per-cell text probabilities and box geometry on a stride-4 grid.

    geometry holds 5 channels: distances from the anchor to the top,
    right, bottom and left box edges (measured along the box axes), and
    the rotation angle in radians.
    """

    score: np.ndarray
    geometry: np.ndarray

    def __post_init__(self):
        score = np.asarray(self.score, dtype=np.float64)
        geo = np.asarray(self.geometry, dtype=np.float64)
        if score.ndim != 2:
            raise ValueError("score must be a 2-D grid")
        if geo.shape != (5,) + score.shape:
            raise ValueError(f"geometry must be (5, {score.shape[0]}, {score.shape[1]})")
        if score.min() < 0.0 or score.max() > 1.0:
            raise ValueError("scores must lie in [0, 1]")
        if geo[:4].min() < 0.0:
            raise ValueError("geometry distances must be >= 0")
        object.__setattr__(self, "score", score)
        object.__setattr__(self, "geometry", geo)


@dataclass(frozen=True)
class RotatedBox:
    """Word box as center, size and rotation, with its detection score."""

    cx: float
    cy: float
    w: float
    h: float
    angle: float = 0.0
    score: float = 1.0

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError("box dimensions must be positive")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError("score must be in [0, 1]")

    def corners(self) -> np.ndarray:
        """4x2 corner coordinates, rotated about the center."""
        c, s = math.cos(self.angle), math.sin(self.angle)
        half = np.array(
            [[-self.w / 2, -self.h / 2], [self.w / 2, -self.h / 2],
             [self.w / 2, self.h / 2], [-self.w / 2, self.h / 2]]
        )
        rot = np.array([[c, -s], [s, c]])
        return half @ rot.T + np.array([self.cx, self.cy])

    def envelope(self) -> tuple[float, float, float, float]:
        """Axis-aligned (x0, y0, x1, y1) containing the rotated corners."""
        pts = self.corners()
        return (float(pts[:, 0].min()), float(pts[:, 1].min()),
                float(pts[:, 0].max()), float(pts[:, 1].max()))

    def scaled(self, factor: float) -> "RotatedBox":
        return RotatedBox(self.cx * factor, self.cy * factor,
                          self.w * factor, self.h * factor, self.angle, self.score)


class DetectorBackend(Protocol):
    def infer(self, page: GrayImage) -> ScoreGeoMaps: ...


def decode_geometry(maps: ScoreGeoMaps, score_threshold: float) -> list[RotatedBox]:
    """Reconstruct a rotated box for every grid cell at or above threshold.

    The anchor of cell (i, j) is (4j, 4i). Edge distances are measured
    along the box axes, so the box center is the anchor plus the rotated
    half-extent offset. Cells whose distances collapse to a zero-area box
    are dropped.
    """
    ii, jj = np.nonzero(maps.score >= score_threshold)
    boxes = []
    for i, j in zip(ii.tolist(), jj.tolist()):
        d_top, d_right, d_bottom, d_left, theta = maps.geometry[:, i, j]
        w = d_left + d_right
        h = d_top + d_bottom
        if w <= 0 or h <= 0:
            continue
        px, py = STRIDE * j, STRIDE * i
        ox = (d_right - d_left) / 2.0
        oy = (d_bottom - d_top) / 2.0
        c, s = math.cos(theta), math.sin(theta)
        boxes.append(RotatedBox(
            cx=px + c * ox - s * oy,
            cy=py + s * ox + c * oy,
            w=float(w), h=float(h), angle=float(theta),
            score=float(maps.score[i, j]),
        ))
    return boxes


def iou(a: RotatedBox, b: RotatedBox) -> float:
    """Intersection-over-union of the axis-aligned envelopes."""
    ax0, ay0, ax1, ay1 = a.envelope()
    bx0, by0, bx1, by1 = b.envelope()
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    return inter / union if union > 0 else 0.0


def nms(boxes: list[RotatedBox], iou_threshold: float) -> list[RotatedBox]:
    """Greedy non-maximum suppression.

    Keeps the highest-scored remaining box and discards every box whose
    envelope IoU with it reaches the threshold. Output is sorted by
    descending score; ties break toward smaller center-x, then center-y.
    """
    pending = sorted(boxes, key=lambda b: (-b.score, b.cx, b.cy))
    kept: list[RotatedBox] = []
    while pending:
        top = pending.pop(0)
        kept.append(top)
        pending = [b for b in pending if iou(top, b) < iou_threshold]
    return kept


def run_detection(
    page: GrayImage,
    backend: DetectorBackend,
    cfg: DetectConfig = DetectConfig(),
    scale: float = 1.0,
) -> list[RotatedBox]:
    """Decode + suppress the backend's maps for an already-resized page.

    `scale` is the resize factor the page was produced with; returned
    coordinates are mapped back to the original resolution by 1/scale.
    """
    try:
        maps = backend.infer(page)
    except BackendFailure:
        raise
    except Exception as exc:
        raise BackendFailure(f"detector backend failed: {exc}") from exc
    boxes = decode_geometry(maps, cfg.score_threshold)
    boxes = nms(boxes, cfg.iou_threshold)
    if scale != 1.0:
        boxes = [b.scaled(1.0 / scale) for b in boxes]
    return boxes


def to_box_records(boxes: list[RotatedBox], page_w: int, page_h: int):
    """Integer page-space records for detected boxes: the axis-aligned
    envelope of each box, clamped to the page, ids b1..bN in score order
    (word crops for recognition use these envelopes)."""
    from .order import BoxRecord

    records = []
    for idx, box in enumerate(boxes, start=1):
        x0, y0, x1, y1 = box.envelope()
        x0 = max(0, int(math.floor(x0)))
        y0 = max(0, int(math.floor(y0)))
        x1 = min(page_w, int(math.ceil(x1)))
        y1 = min(page_h, int(math.ceil(y1)))
        if x1 <= x0 or y1 <= y0:
            continue
        records.append(BoxRecord(id=f"b{idx}", x=x0, y=y0, w=x1 - x0, h=y1 - y0,
                                 angle=box.angle, score=box.score))
    return records


class ArchiveBackend:
    """Serves pre-computed maps recorded in an SGM1 tensor archive with
    tensors named ``score`` and ``geometry``."""

    def __init__(self, path):
        self.path = path

    def infer(self, page: GrayImage) -> ScoreGeoMaps:
        try:
            tensors = sgm.read_tensors(self.path)
            score = tensors["score"]
            geometry = tensors["geometry"]
        except KeyError as exc:
            raise BackendFailure(f"archive {self.path} lacks tensor {exc}") from exc
        except Exception as exc:
            raise BackendFailure(f"cannot load maps from {self.path}: {exc}") from exc
        return ScoreGeoMaps(score=np.clip(score, 0.0, 1.0), geometry=geometry)


class StubBackend:
    """Returns fixed maps; for tests and for exercising the pipeline
    without a trained detector."""

    def __init__(self, maps: ScoreGeoMaps):
        self.maps = maps

    def infer(self, page: GrayImage) -> ScoreGeoMaps:
        return self.maps
