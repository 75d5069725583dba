"""End-to-end recognition of one word crop: style conversion when the
crop does not resemble the training distribution, slant removal, canvas
fitting, normalization, forward pass and CTC decoding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NoInkError
from ..preproc import CanvasSpec, GrayImage, deslant, fit_to_canvas, normalize, to_iam_style
from . import ctc
from .charset import CharSet
from .model import Model

# Crops whose background is dark or whose ink coverage is heavy do not
# look like scanner-quality training words and get the style conversion.
IAM_BG_MEDIAN = 240
IAM_INK_FRACTION = 0.35


@dataclass(frozen=True)
class RecognizedWord:
    text: str
    log_prob: float
    no_ink: bool = False


def needs_iam_conversion(img: GrayImage) -> bool:
    median = float(np.median(img.pixels))
    ink_fraction = float((img.pixels < 128).mean())
    return median < IAM_BG_MEDIAN or ink_fraction > IAM_INK_FRACTION


def prepare_crop(img: GrayImage, spec: CanvasSpec | None = None) -> np.ndarray:
    """Preprocess a raw crop into the model's normalized input tensor.

    Raises NoInkError for uniform crops (nothing to recognize).
    """
    if int(img.pixels.min()) == int(img.pixels.max()):
        raise NoInkError("uniform crop")
    if needs_iam_conversion(img):
        img = to_iam_style(img)
    img, _ = deslant(img)
    if spec is None:
        spec = CanvasSpec()
    return normalize(fit_to_canvas(img, spec))


def recognize_word(
    img: GrayImage,
    model: Model,
    charset: CharSet,
    decode: str = "beam",
    beam_width: int = 25,
) -> RecognizedWord:
    """Decode one raw word crop to text and its log-probability.

    Blank crops come back as empty text flagged no_ink. `decode` selects
    greedy best-path or prefix beam search.
    """
    spec = CanvasSpec(width=model.cfg.input_width, height=model.cfg.input_height)
    try:
        tensor = prepare_crop(img, spec)
    except NoInkError:
        return RecognizedWord(text="", log_prob=0.0, no_ink=True)

    logits = model.logits(tensor)
    if decode == "greedy":
        text = ctc.greedy_decode(logits, charset)
        score = ctc.greedy_path_logprob(logits)
    elif decode == "beam":
        text, score = ctc.beam_decode_scored(logits, charset, beam_width)
    else:
        raise ValueError(f"unknown decoder {decode!r}")
    return RecognizedWord(text=text, log_prob=score)
