"""Overfit a miniature recognizer on four synthetic words, then decode
them greedily and with beam search. Takes roughly a minute on a CPU.
"""

import numpy as np

from glyphs import render_word
from handscribe.preproc import CanvasSpec, fit_to_canvas, normalize
from handscribe.recognizer import (
    Model,
    ModelConfig,
    TrainConfig,
    default_charset,
    fit,
    recognize_word,
)
from handscribe.recognizer.model import init_params

charset = default_charset()
words = ["ab", "cd", "ace", "bdf"]
spec = CanvasSpec(128, 32)
items = [(normalize(fit_to_canvas(render_word(w), spec)), charset.encode(w))
         for w in words * 4]

cfg = ModelConfig(conv_channels=(8, 16, 16, 16, 16, 16, 16, 16),
                  hidden_size=32, num_chars=79, noise_sigma=0.0)
model = Model(cfg=cfg, params=init_params(cfg, seed=0, dtype=np.float32))
schedule = TrainConfig(learning_rate=0.003, lr_decay=0.995, batch_size=8,
                       noise_sigma=0.0, seed=0)

result = fit(model, items, charset, schedule, epochs=150, target_cer=0.0,
             log_line=lambda line: print(line) if int(line.split()[1]) % 25 == 0 else None)
model.params = result.params
print(f"stopped at epoch {result.stopped_epoch}, best validation CER {result.best_val_cer:.3f}\n")

for word in words:
    crop = render_word(word)
    greedy = recognize_word(crop, model, charset, decode="greedy")
    beam = recognize_word(crop, model, charset, decode="beam", beam_width=25)
    print(f"{word:4s} greedy -> {greedy.text!r:8s} beam -> {beam.text!r:8s} "
          f"log p = {beam.log_prob:.3f}")
