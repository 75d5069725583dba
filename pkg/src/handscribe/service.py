"""HTTP facade over annotation sessions.

One session wraps one page's project and a monotonically increasing
revision counter; mutating requests carry the client's revision and are
rejected with 409 when stale. Within a session mutations run one at a
time; different sessions are independent.

Endpoints (bodies share the canonical JSON of project files):

    POST /sessions                multipart image -> {id, boxes, revision}
    GET  /sessions/{id}           full project view
    POST /sessions/{id}/edits     {revision, edit} -> {revision}
    POST /sessions/{id}/serialize -> {order, lines, revision}
    POST /sessions/{id}/recognize -> {texts, scores, revision}
    POST /sessions/{id}/finalize  -> {transcript_path, dataset_dir, revision}
    GET  /sessions/{id}/image     resized page PNG
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass, field
from typing import Optional

from fastapi import FastAPI, File, Request, Response, UploadFile

from . import detect, lexicon, project as project_mod
from .errors import (
    BackendFailure,
    ConflictError,
    MissingTextError,
    PhaseOrderError,
    PipelineError,
    UnknownSessionError,
)
from .order import OrderConfig
from .preproc import GrayImage, decode_image, encode_png, resize_page, save_png
from .project import PageInfo, Project, status_rank
from .recognizer import (
    CharSet,
    Model,
    default_charset,
    load_charset,
    load_model,
    recognize_word,
)


@dataclass
class Session:
    id: str
    project: Project
    original: GrayImage
    resized: GrayImage
    directory: str
    revision: int = 0
    lock: threading.RLock = field(default_factory=threading.RLock)


class AnnotationService:
    """Session registry plus the recognition/detection assets shared by
    every session."""

    def __init__(
        self,
        workdir: str = "handscribe-sessions",
        model: Optional[Model] = None,
        charset: Optional[CharSet] = None,
        dictionary: Optional[lexicon.Dictionary] = None,
        backend: Optional[detect.DetectorBackend] = None,
        detect_config: detect.DetectConfig = detect.DetectConfig(),
        order_config: OrderConfig = OrderConfig(),
        beam_width: int = 25,
        model_path: Optional[str] = None,
        charset_path: Optional[str] = None,
        dict_path: Optional[str] = None,
        maps_path: Optional[str] = None,
    ):
        self.workdir = workdir
        self.model = model if model is not None else (load_model(model_path) if model_path else None)
        if charset is not None:
            self.charset = charset
        else:
            self.charset = load_charset(charset_path) if charset_path else default_charset()
        if dictionary is not None:
            self.dictionary = dictionary
        else:
            self.dictionary = lexicon.load_dictionary(dict_path) if dict_path else None
        self.backend = backend if backend is not None else (
            detect.ArchiveBackend(maps_path) if maps_path else None)
        self.detect_config = detect_config
        self.order_config = order_config
        self.beam_width = beam_width
        self._sessions: dict[str, Session] = {}
        self._registry_lock = threading.Lock()
        self._counter = 0

    # -- session lifecycle -------------------------------------------------

    def create_session(self, image_bytes: bytes) -> Session:
        page = decode_image(image_bytes)  # raises BadImageError
        resized, scale = resize_page(page)

        with self._registry_lock:
            self._counter += 1
            sid = f"s{self._counter}"
        directory = os.path.join(self.workdir, sid)
        os.makedirs(directory, exist_ok=True)
        source = os.path.join(directory, "page.png")
        save_png(page, source)

        boxes = []
        status = "edited"
        if self.backend is not None:
            try:
                rotated = detect.run_detection(resized, self.backend, self.detect_config, scale=scale)
            except BackendFailure:
                rotated = None
            if rotated is not None:
                boxes = detect.to_box_records(rotated, page.width, page.height)
                status = "detected"
        project = Project(
            page=PageInfo(source=source, width=page.width, height=page.height, scale=scale),
            boxes=boxes, order=[], status=status,
        )
        session = Session(id=sid, project=project, original=page,
                          resized=resized, directory=directory)
        with self._registry_lock:
            self._sessions[sid] = session
        return session

    def session(self, sid: str) -> Session:
        try:
            return self._sessions[sid]
        except KeyError:
            raise UnknownSessionError(f"no session {sid!r}") from None

    # -- mutations -----------------------------------------------------------

    def apply_edit(self, sid: str, revision: int, edit: dict) -> int:
        session = self.session(sid)
        with session.lock:
            if revision != session.revision:
                raise ConflictError(session.revision)
            self._apply(session.project, edit)
            session.revision += 1
            return session.revision

    @staticmethod
    def _apply(project: Project, edit: dict) -> None:
        op = edit.get("op")
        if op == "add":
            rect = edit.get("rect") or {}
            project.add_box(int(rect.get("x", 0)), int(rect.get("y", 0)),
                            int(rect.get("w", 0)), int(rect.get("h", 0)))
        elif op == "delete":
            project.delete_box(str(edit.get("id")))
        elif op == "update":
            rect = edit.get("rect") or {}
            project.update_box(str(edit.get("id")), int(rect.get("x", 0)), int(rect.get("y", 0)),
                               int(rect.get("w", 0)), int(rect.get("h", 0)))
        elif op == "swap":
            project.swap_order(str(edit.get("a")), str(edit.get("b")))
        elif op == "set_text":
            project.set_text(str(edit.get("id")), str(edit.get("text", "")), edited=True)
        else:
            raise PipelineError(f"unknown edit op {op!r}")

    def serialize(self, sid: str) -> dict:
        session = self.session(sid)
        with session.lock:
            layout = session.project.serialize(self.order_config)
            lines = session.project.transcript_lines(self.order_config) if layout.sequence else []
            session.revision += 1
            return {"order": layout.sequence, "lines": lines, "revision": session.revision}

    def recognize(self, sid: str) -> dict:
        session = self.session(sid)
        with session.lock:
            project = session.project
            if status_rank(project.status) < 2:
                raise PhaseOrderError(f"serialize before recognize (status {project.status!r})")
            if self.model is None:
                raise PipelineError("no recognition model configured")
            page = session.original
            decode = "beam" if self.beam_width > 1 else "greedy"
            texts: dict[str, str] = {}
            scores: dict[str, float] = {}
            for box in project.ordered_boxes():
                if box.text_edited:
                    texts[box.id] = box.text or ""
                    continue
                crop = GrayImage(page.pixels[box.y:box.y + box.h, box.x:box.x + box.w].copy())
                result = recognize_word(crop, self.model, self.charset,
                                        decode=decode, beam_width=self.beam_width)
                text = result.text
                if self.dictionary is not None and text:
                    text = lexicon.correct(text, self.dictionary)
                box.text = text
                box.text_edited = False
                texts[box.id] = text
                scores[box.id] = result.log_prob
            project.status = "recognized"
            session.revision += 1
            return {"texts": texts, "scores": scores, "revision": session.revision}

    def finalize(self, sid: str) -> dict:
        session = self.session(sid)
        with session.lock:
            project = session.project
            export_dir = os.path.join(session.directory, "export")
            paths = project_mod.finalize(project, export_dir, page=session.original)
            project_mod.save(project, os.path.join(session.directory, "project.json"))
            session.revision += 1
            return {
                "transcript_path": paths["transcript"],
                "dataset_dir": paths["dataset_dir"],
                "revision": session.revision,
            }

    # -- views ---------------------------------------------------------------

    def view(self, sid: str) -> dict:
        session = self.session(sid)
        with session.lock:
            project = session.project
            lines = project.transcript_lines(self.order_config) if project.order else []
            return {
                "id": session.id,
                "revision": session.revision,
                "project": project.to_dict(),
                "lines": lines,
                "display": {"width": session.resized.width, "height": session.resized.height},
            }

    def page_png(self, sid: str) -> bytes:
        session = self.session(sid)
        with session.lock:
            return encode_png(session.resized)


# -- HTTP layer --------------------------------------------------------------


def _http_status(exc: PipelineError) -> int:
    if isinstance(exc, UnknownSessionError):
        return 404
    if isinstance(exc, (ConflictError, PhaseOrderError, MissingTextError)):
        return 409
    return 400


def _error_body(exc: PipelineError) -> dict:
    details: dict = {}
    if isinstance(exc, ConflictError):
        details["revision"] = exc.current_revision
    if isinstance(exc, MissingTextError):
        details["box_ids"] = exc.box_ids
    return {"code": exc.code, "message": str(exc), "details": details}


def create_app(service: AnnotationService) -> FastAPI:
    from fastapi.middleware.cors import CORSMiddleware

    app = FastAPI(title="handscribe annotation service")
    # local annotation tool; the client is typically served from another
    # port (authentication is out of scope)
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])

    def canonical(payload: dict, status_code: int = 200) -> Response:
        return Response(content=project_mod.emit_canonical(payload),
                        media_type="application/json", status_code=status_code)

    @app.exception_handler(PipelineError)
    async def pipeline_error_handler(_request, exc: PipelineError):
        return canonical(_error_body(exc), status_code=_http_status(exc))

    @app.post("/sessions", status_code=201)
    async def create_session(image: UploadFile = File(...)):
        data = await image.read()
        session = service.create_session(data)
        return canonical({
            "id": session.id,
            "boxes": session.project.to_dict()["boxes"],
            "revision": session.revision,
        }, status_code=201)

    @app.get("/sessions/{sid}")
    async def get_session(sid: str):
        return canonical(service.view(sid))

    @app.post("/sessions/{sid}/edits")
    async def post_edit(sid: str, request: Request):
        payload = await request.json()
        if not isinstance(payload, dict) or "revision" not in payload or "edit" not in payload:
            raise PipelineError("edit body must carry revision and edit")
        revision = service.apply_edit(sid, int(payload["revision"]), payload["edit"])
        return canonical({"revision": revision})

    @app.post("/sessions/{sid}/serialize")
    async def post_serialize(sid: str):
        return canonical(service.serialize(sid))

    @app.post("/sessions/{sid}/recognize")
    async def post_recognize(sid: str):
        return canonical(service.recognize(sid))

    @app.post("/sessions/{sid}/finalize")
    async def post_finalize(sid: str):
        return canonical(service.finalize(sid))

    @app.get("/sessions/{sid}/image")
    async def get_image(sid: str):
        return Response(content=service.page_png(sid), media_type="image/png")

    return app
