"""Annotation-session persistence and export.

A project is one page: the source image reference, its word boxes, the
reading order and the workflow status. Files are canonical JSON (sorted
keys, floats fixed to 6 decimal places) so identical projects are
byte-identical on disk.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Optional

from . import order as order_mod
from .errors import (
    IoFailure,
    MissingTextError,
    ParseError,
    PhaseOrderError,
    UnknownIdError,
    UnsupportedVersionError,
    ValidationError,
)
from .order import BoxRecord, OrderConfig, OrderedLayout
from .preproc import GrayImage, encode_png, load_image

FORMAT_VERSION = 1

STATUSES = ("detected", "edited", "serialized", "recognized", "finalized")
_RANK = {name: k for k, name in enumerate(STATUSES)}


def status_rank(status: str) -> int:
    return _RANK[status]

TRANSCRIPT_NAME = "transcript.txt"
ANNOTATIONS_NAME = "annotations.tsv"
MANIFEST_NAME = "manifest.tsv"


def _canon6(value: Optional[float]) -> Optional[float]:
    return None if value is None else float(f"{value:.6f}")


@dataclass
class PageInfo:
    source: str
    width: int
    height: int
    scale: float = 1.0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValidationError("page dimensions must be >= 1")
        if not self.scale > 0:
            raise ValidationError("page scale must be positive")
        self.scale = _canon6(self.scale)


@dataclass
class Project:
    page: PageInfo
    boxes: list[BoxRecord] = field(default_factory=list)
    order: list[str] = field(default_factory=list)
    status: str = "detected"
    version: int = FORMAT_VERSION

    def __post_init__(self):
        self.validate()

    # -- invariants ------------------------------------------------------

    def validate(self) -> None:
        if self.version != FORMAT_VERSION:
            raise UnsupportedVersionError(f"unsupported project version {self.version!r}")
        if self.status not in STATUSES:
            raise ValidationError(f"unknown status {self.status!r}")
        ids = [b.id for b in self.boxes]
        if len(ids) != len(set(ids)):
            raise ValidationError("duplicate box ids")
        if self.order and sorted(self.order) != sorted(ids):
            raise ValidationError("order is not a permutation of box ids")
        for box in self.boxes:
            if box.score is not None and not 0.0 <= box.score <= 1.0:
                raise ValidationError(f"box {box.id} score out of range")
            box.angle = _canon6(box.angle)
            box.score = _canon6(box.score)

    # -- lookups ---------------------------------------------------------

    def box(self, box_id: str) -> BoxRecord:
        for box in self.boxes:
            if box.id == box_id:
                return box
        raise UnknownIdError(f"no box {box_id!r}")

    def ordered_boxes(self) -> list[BoxRecord]:
        by_id = {b.id: b for b in self.boxes}
        return [by_id[i] for i in self.order]

    def layout(self) -> OrderedLayout:
        return order_mod.layout_from_sequence(self.order)

    def transcript_lines(self, cfg: OrderConfig = OrderConfig()) -> list[list[str]]:
        return order_mod.group_sequence(self.boxes, self.order, cfg)

    # -- edits -----------------------------------------------------------

    def _after_geometry_edit(self) -> None:
        if _RANK[self.status] == 0:
            self.status = "edited"
        elif _RANK[self.status] >= 3:
            self.status = "serialized"

    def add_box(self, x: int, y: int, w: int, h: int) -> BoxRecord:
        """New user-drawn box; the reading order becomes stale and must be
        re-serialized before recognition."""
        cx, cy, cw, ch = order_mod.clamp_rect(x, y, w, h, self.page.width, self.page.height)
        box = BoxRecord(id=order_mod.fresh_id(b.id for b in self.boxes), x=cx, y=cy, w=cw, h=ch)
        self.boxes.append(box)
        self.order = []
        self.status = "edited"
        return box

    def delete_box(self, box_id: str) -> None:
        box = self.box(box_id)
        self.boxes.remove(box)
        self.order = [i for i in self.order if i != box_id]
        self._after_geometry_edit()

    def update_box(self, box_id: str, x: int, y: int, w: int, h: int) -> BoxRecord:
        """Move/resize a box; its recognized text becomes stale (human
        edits are kept) and its order position is unchanged."""
        box = self.box(box_id)
        cx, cy, cw, ch = order_mod.clamp_rect(x, y, w, h, self.page.width, self.page.height)
        box.x, box.y, box.w, box.h = cx, cy, cw, ch
        if not box.text_edited:
            box.text = None
        self._after_geometry_edit()
        return box

    def swap_order(self, a: str, b: str) -> None:
        if a not in self.order or b not in self.order:
            raise UnknownIdError(f"swap ids must be in the serialized order: {a!r}, {b!r}")
        self.order = order_mod.swap(self.layout(), a, b).sequence

    def set_text(self, box_id: str, text: str, edited: bool = True) -> BoxRecord:
        box = self.box(box_id)
        box.text = text
        box.text_edited = edited
        return box

    def serialize(self, cfg: OrderConfig = OrderConfig()) -> OrderedLayout:
        layout = order_mod.serialize_boxes(self.boxes, cfg)
        self.order = layout.sequence
        if _RANK[self.status] < 2:
            self.status = "serialized"
        return layout

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        boxes = []
        for b in self.boxes:
            entry = {
                "id": b.id, "x": b.x, "y": b.y, "w": b.w, "h": b.h,
                "angle": float(b.angle), "text_edited": b.text_edited,
            }
            if b.score is not None:
                entry["score"] = float(b.score)
            if b.text is not None:
                entry["text"] = b.text
            boxes.append(entry)
        return {
            "version": self.version,
            "page": {
                "source": self.page.source,
                "width": self.page.width,
                "height": self.page.height,
                "scale": float(self.page.scale),
            },
            "boxes": boxes,
            "order": list(self.order),
            "status": self.status,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Project":
        if not isinstance(data, dict):
            raise ValidationError("project root must be an object")
        version = data.get("version")
        if version != FORMAT_VERSION:
            raise UnsupportedVersionError(f"unsupported project version {version!r}")
        try:
            page_raw = data["page"]
            page = PageInfo(
                source=str(page_raw["source"]),
                width=int(page_raw["width"]),
                height=int(page_raw["height"]),
                scale=float(page_raw["scale"]),
            )
            boxes = [
                BoxRecord(
                    id=str(raw["id"]),
                    x=int(raw["x"]), y=int(raw["y"]), w=int(raw["w"]), h=int(raw["h"]),
                    angle=float(raw.get("angle", 0.0)),
                    score=None if raw.get("score") is None else float(raw["score"]),
                    text=raw.get("text"),
                    text_edited=bool(raw.get("text_edited", False)),
                )
                for raw in data.get("boxes", [])
            ]
            return cls(
                page=page,
                boxes=boxes,
                order=[str(i) for i in data.get("order", [])],
                status=str(data.get("status", "detected")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed project: {exc}") from exc


# -- canonical JSON ------------------------------------------------------


def _emit(value, indent: int) -> str:
    pad = "  " * indent
    if isinstance(value, dict):
        if not value:
            return "{}"
        rows = [
            f'{pad}  {json.dumps(key, ensure_ascii=False)}: {_emit(value[key], indent + 1)}'
            for key in sorted(value)
        ]
        return "{\n" + ",\n".join(rows) + f"\n{pad}}}"
    if isinstance(value, list):
        if not value:
            return "[]"
        rows = [f"{pad}  {_emit(item, indent + 1)}" for item in value]
        return "[\n" + ",\n".join(rows) + f"\n{pad}]"
    if isinstance(value, bool) or value is None:
        return json.dumps(value)
    if isinstance(value, float):
        return f"{value:.6f}"
    if isinstance(value, int):
        return str(value)
    return json.dumps(value, ensure_ascii=False)


def emit_canonical(payload) -> str:
    """Canonical JSON text: sorted keys, 6-decimal floats, LF endings."""
    return _emit(payload, 0) + "\n"


def dumps(project: Project) -> str:
    return emit_canonical(project.to_dict())


def save(project: Project, path) -> None:
    project.validate()
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(dumps(project))
    except OSError as exc:
        raise IoFailure(f"cannot write project {path}: {exc}") from exc


def loads(text: str) -> Project:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid project JSON: {exc}") from exc
    return Project.from_dict(data)


def load(path) -> Project:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read project {path}: {exc}") from exc
    return loads(text)


# -- exports -------------------------------------------------------------


def _require_texts(project: Project) -> None:
    missing = [b.id for b in project.ordered_boxes() if not b.text]
    if missing:
        raise MissingTextError(missing)


def export_transcript(project: Project, out_dir, cfg: OrderConfig = OrderConfig()) -> dict:
    """Write transcript.txt (reading order, one text line per line cluster)
    and annotations.tsv (index, id, x, y, w, h, text per ordered box)."""
    if _RANK[project.status] < 3:
        raise PhaseOrderError(f"cannot export transcript at status {project.status!r}")
    _require_texts(project)
    by_id = {b.id: b for b in project.boxes}
    lines = project.transcript_lines(cfg)

    transcript = "".join(
        " ".join(by_id[i].text for i in line) + "\n" for line in lines
    )
    rows = []
    for idx, box in enumerate(project.ordered_boxes()):
        rows.append(f"{idx}\t{box.id}\t{box.x}\t{box.y}\t{box.w}\t{box.h}\t{box.text}\n")

    os.makedirs(out_dir, exist_ok=True)
    transcript_path = os.path.join(out_dir, TRANSCRIPT_NAME)
    annotations_path = os.path.join(out_dir, ANNOTATIONS_NAME)
    try:
        with open(transcript_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(transcript)
        with open(annotations_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.writelines(rows)
    except OSError as exc:
        raise IoFailure(f"cannot write transcript files: {exc}") from exc
    return {"transcript": transcript_path, "annotations": annotations_path}


def export_dataset(project: Project, out_dir, page: Optional[GrayImage] = None) -> str:
    """Write one PNG crop per ordered box plus a manifest of
    filename, x, y, w, h, transcription rows. Returns the manifest path."""
    if project.status != "finalized":
        raise PhaseOrderError(f"dataset export requires a finalized project, not {project.status!r}")
    _require_texts(project)
    if page is None:
        page = load_image(project.page.source)

    os.makedirs(out_dir, exist_ok=True)
    rows = []
    try:
        for idx, box in enumerate(project.ordered_boxes()):
            x0 = max(0, min(box.x, page.width))
            y0 = max(0, min(box.y, page.height))
            x1 = max(x0 + 1, min(box.x + box.w, page.width))
            y1 = max(y0 + 1, min(box.y + box.h, page.height))
            crop = GrayImage(page.pixels[y0:y1, x0:x1].copy())
            name = f"word_{idx}.png"
            with open(os.path.join(out_dir, name), "wb") as fh:
                fh.write(encode_png(crop))
            rows.append(f"{name}\t{x0}\t{y0}\t{x1 - x0}\t{y1 - y0}\t{box.text}\n")
        manifest_path = os.path.join(out_dir, MANIFEST_NAME)
        with open(manifest_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.writelines(rows)
    except OSError as exc:
        raise IoFailure(f"cannot write dataset: {exc}") from exc
    return manifest_path


def finalize(project: Project, out_dir, page: Optional[GrayImage] = None) -> dict:
    """Flip the project to finalized and write every export. Idempotent:
    re-running overwrites the same bytes."""
    if _RANK[project.status] < 3:
        raise PhaseOrderError(f"finalize requires a recognized project, not {project.status!r}")
    _require_texts(project)
    project.status = "finalized"
    paths = export_transcript(project, out_dir)
    dataset_dir = os.path.join(out_dir, "dataset")
    paths["manifest"] = export_dataset(project, dataset_dir, page=page)
    paths["dataset_dir"] = dataset_dir
    return paths
