"""Batch entry points for the pipeline: detection from recorded maps,
reading-order serialization, recognition, desk-scale training, CER
evaluation, export and the HTTP service.

Exit codes: 0 success, 2 input error, 3 phase/state error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import detect, lexicon, project as project_mod
from .errors import (
    MissingTextError,
    PhaseOrderError,
    PipelineError,
)
from .order import OrderConfig
from .preproc import GrayImage, fit_to_canvas, load_image, normalize, resize_page, CanvasSpec
from .project import PageInfo, Project
from .recognizer import (
    CharSet,
    Model,
    ModelConfig,
    TrainConfig,
    default_charset,
    fit,
    init_params,
    load_charset,
    load_model,
    recognize_word,
    save_model,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_PHASE = 3


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _exit_code_for(exc: PipelineError) -> int:
    if isinstance(exc, (PhaseOrderError, MissingTextError)):
        return EXIT_PHASE
    return EXIT_INPUT


# -- detect ----------------------------------------------------------------


def cmd_detect(args) -> int:
    if not os.path.exists(args.maps):
        return _fail(f"maps not found: {args.maps}", EXIT_INPUT)
    page = load_image(args.page)
    resized, scale = resize_page(page)
    cfg = detect.DetectConfig(score_threshold=args.score_thresh, iou_threshold=args.iou_thresh)
    boxes = detect.run_detection(resized, detect.ArchiveBackend(args.maps), cfg, scale=scale)
    records = detect.to_box_records(boxes, page.width, page.height)
    proj = Project(
        page=PageInfo(source=str(args.page), width=page.width, height=page.height, scale=scale),
        boxes=records, order=[], status="detected",
    )
    project_mod.save(proj, args.out)
    print(f"detected {len(records)} boxes -> {args.out}")
    return EXIT_OK


# -- serialize ---------------------------------------------------------------


def cmd_serialize(args) -> int:
    proj = project_mod.load(args.project)
    layout = proj.serialize(OrderConfig(line_overlap_ratio=args.line_overlap))
    project_mod.save(proj, args.project)
    print(f"serialized {len(layout.sequence)} boxes")
    return EXIT_OK


# -- recognize ---------------------------------------------------------------


def _load_charset_arg(path) -> CharSet:
    return load_charset(path) if path else default_charset()


def cmd_recognize(args) -> int:
    proj = project_mod.load(args.project)
    if project_mod.status_rank(proj.status) < 2 or not proj.order:
        raise PhaseOrderError(f"project must be serialized before recognition (status {proj.status!r})")
    model = load_model(args.model)
    charset = _load_charset_arg(args.charset)
    if model.cfg.num_chars != len(charset.chars):
        return _fail(
            f"model expects {model.cfg.num_chars} characters, charset has {len(charset.chars)}",
            EXIT_INPUT,
        )
    dictionary = lexicon.load_dictionary(args.dict) if args.dict else None
    page = load_image(proj.page.source)

    decode = "beam" if args.beam > 1 else "greedy"
    for box in proj.ordered_boxes():
        if box.text_edited:
            continue
        crop = GrayImage(page.pixels[box.y:box.y + box.h, box.x:box.x + box.w].copy())
        result = recognize_word(crop, model, charset, decode=decode, beam_width=args.beam)
        text = result.text
        if dictionary is not None and text:
            text = lexicon.correct(text, dictionary)
        box.text = text
        box.text_edited = False
    proj.status = "recognized"
    project_mod.save(proj, args.project)
    print(f"recognized {len(proj.order)} boxes")
    return EXIT_OK


# -- train -------------------------------------------------------------------


def parse_manifest(path) -> list[tuple[str, str]]:
    """(image path, transcription) pairs from a TSV manifest. Rows may be
    `file<TAB>text` or the dataset export layout `file x y w h text`."""
    base = os.path.dirname(os.path.abspath(path))
    items = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) == 2:
                name, text = parts
            elif len(parts) >= 6:
                name, text = parts[0], parts[5]
            else:
                raise PipelineError(f"malformed manifest row: {line!r}")
            items.append((os.path.join(base, name), text))
    return items


def cmd_train(args) -> int:
    try:
        entries = parse_manifest(args.manifest)
    except OSError as exc:
        return _fail(f"cannot read manifest: {exc}", EXIT_INPUT)
    if not entries:
        return _fail("manifest is empty", EXIT_INPUT)

    charset = _load_charset_arg(args.charset)
    channels = tuple(int(c) for c in args.channels.split(","))
    kernels = tuple(int(k) for k in args.kernels.split(","))
    cfg = ModelConfig(
        input_width=args.width, input_height=args.height,
        conv_kernels=kernels, conv_channels=channels,
        hidden_size=args.hidden, num_chars=len(charset.chars),
        noise_sigma=args.noise_sigma,
    )
    model = Model(cfg=cfg, params=init_params(cfg, seed=args.seed, dtype=np.float32))
    spec = CanvasSpec(width=cfg.input_width, height=cfg.input_height)

    items = []
    skipped = 0
    for img_path, text in entries:
        try:
            label = charset.encode(text)
            if len(label) + sum(label[i] == label[i - 1] for i in range(1, len(label))) > cfg.timesteps:
                raise PipelineError(f"label {text!r} too long for {cfg.timesteps} timesteps")
            image = load_image(img_path)
        except PipelineError as exc:
            print(f"skipping {img_path}: {exc}", file=sys.stderr)
            skipped += 1
            continue
        items.append((normalize(fit_to_canvas(image, spec)), label))
    if not items:
        return _fail("no trainable items in manifest", EXIT_INPUT)

    tcfg = TrainConfig(
        learning_rate=args.lr, lr_decay=args.lr_decay, batch_size=args.batch_size,
        noise_sigma=args.noise_sigma, max_label_len=cfg.timesteps, seed=args.seed,
    )
    result = fit(
        model, items, charset, tcfg, epochs=args.epochs,
        val_split=args.val_split, target_cer=args.target_cer, log_line=print,
    )
    model.params = result.params
    save_model(model, args.out)
    print(f"trained on {len(items)} items ({skipped} skipped), "
          f"best val_cer {result.best_val_cer:.4f} -> {args.out}")
    return EXIT_OK


# -- eval --------------------------------------------------------------------


def _read_id_text(path) -> dict[str, str]:
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line:
                continue
            ident, _, text = line.partition("\t")
            out[ident] = text
    return out


def cmd_eval(args) -> int:
    try:
        pred = _read_id_text(args.pred)
        gold = _read_id_text(args.gt)
    except OSError as exc:
        return _fail(f"cannot read eval files: {exc}", EXIT_INPUT)
    if sorted(pred) != sorted(gold):
        return _fail("prediction and ground-truth ids are not aligned", EXIT_INPUT)
    pairs = [lexicon.EvalPair(gold[i], pred[i]) for i in sorted(gold)]
    value = lexicon.cer(pairs)
    print(f"CER {value:.4f}")
    return EXIT_OK


# -- export ------------------------------------------------------------------


def cmd_export(args) -> int:
    proj = project_mod.load(args.project)
    paths = project_mod.finalize(proj, args.out)
    project_mod.save(proj, args.project)
    print(f"exported transcript to {paths['transcript']} and dataset to {paths['dataset_dir']}")
    return EXIT_OK


# -- serve -------------------------------------------------------------------


def cmd_serve(args) -> int:
    import uvicorn

    from .service import AnnotationService, create_app

    service = AnnotationService(
        workdir=args.workdir,
        model_path=args.model,
        charset_path=args.charset,
        dict_path=args.dict,
        maps_path=args.maps,
        beam_width=args.beam,
    )
    app = create_app(service)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="handscribe", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="decode recorded detector maps into a project file")
    p.add_argument("page", help="page image (PNG/JPEG)")
    p.add_argument("--maps", required=True, help="SGM1 tensor archive with score/geometry")
    p.add_argument("-o", "--out", required=True, help="output project file")
    p.add_argument("--score-thresh", type=float, default=0.5)
    p.add_argument("--iou-thresh", type=float, default=0.4)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("serialize", help="compute the reading order of a project")
    p.add_argument("project")
    p.add_argument("--line-overlap", type=float, default=0.5)
    p.set_defaults(func=cmd_serialize)

    p = sub.add_parser("recognize", help="fill in recognized text for every ordered box")
    p.add_argument("project")
    p.add_argument("--model", required=True)
    p.add_argument("--charset", default=None)
    p.add_argument("--beam", type=int, default=25, help="beam width; 1 selects greedy decoding")
    p.add_argument("--dict", default=None, help="word-frequency dictionary for spell correction")
    p.set_defaults(func=cmd_recognize)

    p = sub.add_parser("train", help="train the recognizer on a word-image manifest")
    p.add_argument("manifest")
    p.add_argument("-o", "--out", required=True, help="output model archive")
    p.add_argument("--charset", default=None)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--lr-decay", type=float, default=0.99)
    p.add_argument("--batch-size", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-sigma", type=float, default=0.1)
    p.add_argument("--val-split", type=float, default=0.05)
    p.add_argument("--target-cer", type=float, default=None,
                   help="stop once training CER reaches this value")
    p.add_argument("--width", type=int, default=128)
    p.add_argument("--height", type=int, default=32)
    p.add_argument("--hidden", type=int, default=256)
    p.add_argument("--channels", default="16,32,64,64,64,64,64,64")
    p.add_argument("--kernels", default="7,5,5,3,3,3,3,3")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="corpus CER between aligned id<TAB>text files")
    p.add_argument("pred")
    p.add_argument("gt")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("export", help="finalize a recognized project and export everything")
    p.add_argument("project")
    p.add_argument("-o", "--out", required=True, help="output directory")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("serve", help="start the annotation HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8077)
    p.add_argument("--workdir", default="handscribe-sessions")
    p.add_argument("--model", default=None)
    p.add_argument("--charset", default=None)
    p.add_argument("--dict", default=None)
    p.add_argument("--maps", default=None, help="recorded maps served by the archive backend")
    p.add_argument("--beam", type=int, default=25)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PipelineError as exc:
        return _fail(str(exc), _exit_code_for(exc))


if __name__ == "__main__":
    sys.exit(main())
