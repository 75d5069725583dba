"""The whole annotation pipeline in one script: render a page, record
detector maps for it, then run the CLI lane — detect, serialize,
recognize, export — and print the transcript. Reuses the model trained by
05_tiny_recognizer when present, otherwise trains it first.
"""

import os
import sys

import numpy as np

from glyphs import render_page
from handscribe import project, sgm
from handscribe.cli import main
from handscribe.preproc import save_png
from handscribe.recognizer import Model, TrainConfig, default_charset, fit, save_model
from handscribe.recognizer.model import ModelConfig, init_params

base = os.path.join(os.path.dirname(__file__), "output", "pipeline")
os.makedirs(base, exist_ok=True)
model_path = os.path.join(base, "model.sgm")
words = ["ab", "cd", "ace", "bdf"]

if not os.path.exists(model_path):
    print("training the tiny recognizer first (about a minute)...")
    from glyphs import render_word
    from handscribe.preproc import CanvasSpec, fit_to_canvas, normalize

    charset = default_charset()
    items = [(normalize(fit_to_canvas(render_word(w), CanvasSpec(128, 32))), charset.encode(w))
             for w in words * 4]
    cfg = ModelConfig(conv_channels=(8, 16, 16, 16, 16, 16, 16, 16),
                      hidden_size=32, num_chars=79, noise_sigma=0.0)
    model = Model(cfg=cfg, params=init_params(cfg, seed=0, dtype=np.float32))
    result = fit(model, items, charset,
                 TrainConfig(learning_rate=0.003, lr_decay=0.995, batch_size=8,
                             noise_sigma=0.0, seed=0),
                 epochs=150, target_cer=0.0, log_line=lambda s: None)
    model.params = result.params
    save_model(model, model_path)
    print("model saved to", model_path)

page, boxes = render_page(words)
page_path = os.path.join(base, "page.png")
save_png(page, page_path)

# record maps the way a detector backend would produce them
grid_h, grid_w = 720 // 4, 1280 // 4
score = np.zeros((grid_h, grid_w), np.float32)
geometry = np.zeros((5, grid_h, grid_w), np.float32)
for _, x, y, w, h in boxes:
    i, j = round((y + h / 2) / 4), round((x + w / 2) / 4)
    score[i, j] = 0.9
    geometry[:, i, j] = (4 * i - y, x + w - 4 * j, y + h - 4 * i, 4 * j - x, 0.0)
maps_path = os.path.join(base, "maps.sgm")
sgm.write_tensors(maps_path, {"score": score, "geometry": geometry})

proj_path = os.path.join(base, "page.project.json")
for argv in (
    ["detect", page_path, "--maps", maps_path, "-o", proj_path],
    ["serialize", proj_path],
    ["recognize", proj_path, "--model", model_path, "--beam", "25"],
    ["export", proj_path, "-o", os.path.join(base, "export")],
):
    print("\n$ handscribe " + " ".join(argv))
    code = main(argv)
    if code != 0:
        sys.exit(code)

print("\ntranscript.txt:")
print(open(os.path.join(base, "export", "transcript.txt"), encoding="utf-8").read())
print("dataset manifest:")
print(open(os.path.join(base, "export", "dataset", "manifest.tsv"), encoding="utf-8").read())
