"""Walk one word crop through every preprocessing stage and save each
intermediate as a PNG under demos/output/.
"""

import os

import cv2
import numpy as np

from handscribe.preproc import (
    AugmentConfig,
    CanvasSpec,
    GrayImage,
    augment,
    deslant,
    fit_to_canvas,
    normalize,
    save_png,
    to_iam_style,
)

out_dir = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(out_dir, exist_ok=True)

# a murky, slanted word: low contrast gray strokes sheared to the right
px = np.full((48, 120), 185, np.uint8)
for x0 in (18, 44, 70, 96):
    px[8:40, x0:x0 + 5] = 120
shear = np.array([[1.0, -0.45, 0.45 * 47], [0.0, 1.0, 0.0]])
px = cv2.warpAffine(px, shear, (140, 48), flags=cv2.INTER_LINEAR,
                    borderMode=cv2.BORDER_CONSTANT, borderValue=185)
word = GrayImage(px)
save_png(word, os.path.join(out_dir, "stage0_raw.png"))
print("raw crop:", word.width, "x", word.height,
      "intensities", int(px.min()), "-", int(px.max()))

styled = to_iam_style(word)
save_png(styled, os.path.join(out_dir, "stage1_iam_style.png"))
print("after style conversion:", styled.width, "x", styled.height,
      "intensities", int(styled.pixels.min()), "-", int(styled.pixels.max()))

upright, shear_factor = deslant(styled)
save_png(upright, os.path.join(out_dir, "stage2_deslanted.png"))
print("deslant picked shear", shear_factor, "(the strokes were sheared by +0.45)")

canvas = fit_to_canvas(upright, CanvasSpec(128, 32))
save_png(canvas, os.path.join(out_dir, "stage3_canvas.png"))
print("canvas:", canvas.width, "x", canvas.height)

tensor = normalize(canvas)
print("normalized tensor:", tensor.shape, "mean %.5f std %.5f" % (tensor.mean(), tensor.std()))

wobbly = augment(word, AugmentConfig(stretch_range=(0.8, 1.2), max_shift=3,
                                     noise_sigma=12.0, seed=7))
save_png(wobbly, os.path.join(out_dir, "stage4_augmented.png"))
print("augmented training variant saved; outputs in", out_dir)
