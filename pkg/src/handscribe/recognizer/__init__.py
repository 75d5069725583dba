"""Word recognizer: CNN + multidimensional LSTM + CTC."""

from .charset import CharSet, default_charset, load_charset
from .ctc import (
    beam_decode,
    beam_decode_scored,
    beam_search,
    ctc_loss,
    greedy_decode,
    log_softmax,
    min_frames,
)
from .model import (
    Model,
    ModelConfig,
    cnn_forward,
    init_params,
    load_model,
    mdlstm_forward,
    save_model,
)
from .recognize import RecognizedWord, prepare_crop, recognize_word
from .train import FitResult, RmsPropState, TrainConfig, fit, train_step

__all__ = [
    "CharSet", "default_charset", "load_charset",
    "beam_decode", "beam_decode_scored", "beam_search", "ctc_loss",
    "greedy_decode", "log_softmax", "min_frames",
    "Model", "ModelConfig", "cnn_forward", "init_params", "load_model",
    "mdlstm_forward", "save_model",
    "RecognizedWord", "prepare_crop", "recognize_word",
    "FitResult", "RmsPropState", "TrainConfig", "fit", "train_step",
]
