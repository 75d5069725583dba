"""Synthetic word-image fixtures shared by the recognizer, CLI, service
and acceptance tests.

Glyphs are skyline shapes (every inked column reaches a common bottom
row) so rendered words are neutral to slope and slant correction: the
recognition pipeline's preprocessing reproduces the training tensors
bit for bit.
"""

import os

import numpy as np

from handscribe.preproc import CanvasSpec, GrayImage, fit_to_canvas, normalize, save_png

CELL_W, CELL_H = 14, 22
TOP = 4

FIXTURE_WORDS = [
    "ab", "cd", "ef", "gh", "ace", "bdf", "aah", "ceg",
    "abcd", "badc", "fade", "cage", "head", "bead", "egga", "chef",
]

# model scale + schedule that overfit the fixture set in a few minutes
# on a CPU (larger rates collapse into the all-blank optimum)
TOY_TRAIN_ARGS = [
    "--hidden", "48",
    "--channels", "8,16,16,16,16,16,16,16",
    "--kernels", "7,5,5,3,3,3,3,3",
    "--lr", "0.003",
    "--lr-decay", "0.995",
    "--batch-size", "8",
    "--noise-sigma", "0",
    "--seed", "0",
    "--epochs", "300",
    "--target-cer", "0",
]


def glyph_cell(ch: str) -> np.ndarray:
    g = np.zeros((CELL_H, CELL_W), bool)

    def bar(c0, c1, height):
        g[CELL_H - height:, c0:c1] = True

    if ch == "a":
        bar(5, 9, 22)
    elif ch == "b":
        bar(1, 4, 22)
        bar(10, 13, 22)
    elif ch == "c":
        bar(1, 13, 8)
    elif ch == "d":
        bar(1, 13, 18)
    elif ch == "e":
        bar(1, 4, 6)
        bar(4, 7, 12)
        bar(7, 10, 18)
        bar(10, 13, 22)
    elif ch == "f":
        bar(1, 4, 22)
        bar(4, 7, 18)
        bar(7, 10, 12)
        bar(10, 13, 6)
    elif ch == "g":
        bar(1, 4, 22)
        bar(5, 9, 8)
        bar(10, 13, 22)
    elif ch == "h":
        bar(1, 4, 8)
        bar(5, 9, 22)
        bar(10, 13, 8)
    else:
        raise ValueError(f"no glyph for {ch!r}")
    return g


def render_word(word: str) -> GrayImage:
    w = CELL_W * len(word) + 8
    px = np.full((32, w), 255, np.uint8)
    for k, ch in enumerate(word):
        cell = glyph_cell(ch)
        x0 = 4 + k * CELL_W
        px[TOP:TOP + CELL_H, x0:x0 + CELL_W][cell] = 0
    return GrayImage(px)


def fixture_items(charset, words=None, copies=2, spec=CanvasSpec(128, 32)):
    """(normalized image, label) training pairs."""
    words = list(words or FIXTURE_WORDS) * copies
    return [
        (normalize(fit_to_canvas(render_word(w), spec)), charset.encode(w))
        for w in words
    ]


def write_fixture_dataset(directory, words=None, copies=2):
    """PNG crops + manifest.tsv like an exported dataset; returns the
    manifest path."""
    words = list(words or FIXTURE_WORDS) * copies
    os.makedirs(directory, exist_ok=True)
    rows = []
    for idx, word in enumerate(words):
        img = render_word(word)
        name = f"word_{idx}.png"
        save_png(img, os.path.join(directory, name))
        rows.append(f"{name}\t0\t0\t{img.width}\t{img.height}\t{word}\n")
    manifest = os.path.join(directory, "manifest.tsv")
    with open(manifest, "w", encoding="utf-8") as fh:
        fh.writelines(rows)
    return manifest


def render_fixture_page(words, columns=4, cell_w=96, cell_h=56):
    """Paste word images on a 1280x720 page (the size the page resize
    step leaves untouched, so box coordinates survive the pipeline
    exactly). Returns (page, [(word, x, y, w, h)])."""
    page = np.full((720, 1280), 255, np.uint8)
    boxes = []
    for k, word in enumerate(words):
        img = render_word(word)
        row, col = divmod(k, columns)
        x = 24 + col * cell_w
        y = 24 + row * cell_h
        page[y:y + img.height, x:x + img.width] = img.pixels
        boxes.append((word, x, y, img.width, img.height))
    return GrayImage(page), boxes


def maps_for_page(boxes, page_w=1280, page_h=720, with_duplicates=True):
    """Score/geometry grids whose decoded boxes reproduce the given
    rectangles exactly (axis-aligned, stride-4 anchors at box centers).
    Optionally adds a weaker overlapping cell per box for NMS to drop."""
    grid_h, grid_w = page_h // 4, page_w // 4
    score = np.zeros((grid_h, grid_w))
    geometry = np.zeros((5, grid_h, grid_w))

    def put(i, j, x, y, w, h, s):
        px, py = 4 * j, 4 * i
        score[i, j] = s
        geometry[:, i, j] = (py - y, x + w - px, y + h - py, px - x, 0.0)

    for _, x, y, w, h in boxes:
        i = int(round((y + h / 2) / 4))
        j = int(round((x + w / 2) / 4))
        put(i, j, x, y, w, h, 0.9)
        if with_duplicates:
            put(i, j - 2, x - 1, y, w, h, 0.6)
    return score, geometry
