"""Tiny synthetic 'handwriting': skyline glyphs for the letters a-h.

Good enough to exercise every pipeline stage without shipping scans;
words render as distinct bar patterns on a white strip.
"""

import numpy as np

from handscribe.preproc import GrayImage

CELL_W, CELL_H, TOP = 14, 22, 4

_BARS = {
    "a": [(5, 9, 22)],
    "b": [(1, 4, 22), (10, 13, 22)],
    "c": [(1, 13, 8)],
    "d": [(1, 13, 18)],
    "e": [(1, 4, 6), (4, 7, 12), (7, 10, 18), (10, 13, 22)],
    "f": [(1, 4, 22), (4, 7, 18), (7, 10, 12), (10, 13, 6)],
    "g": [(1, 4, 22), (5, 9, 8), (10, 13, 22)],
    "h": [(1, 4, 8), (5, 9, 22), (10, 13, 8)],
}


def render_word(word: str) -> GrayImage:
    width = CELL_W * len(word) + 8
    px = np.full((32, width), 255, np.uint8)
    for k, ch in enumerate(word):
        x0 = 4 + k * CELL_W
        for c0, c1, height in _BARS[ch]:
            px[TOP + CELL_H - height:TOP + CELL_H, x0 + c0:x0 + c1] = 0
    return px if isinstance(px, GrayImage) else GrayImage(px)


def render_page(words, columns=4, cell_w=96, cell_h=56):
    """1280x720 page with words pasted on a grid; returns page + boxes."""
    page = np.full((720, 1280), 255, np.uint8)
    boxes = []
    for k, word in enumerate(words):
        img = render_word(word)
        row, col = divmod(k, columns)
        x, y = 24 + col * cell_w, 24 + row * cell_h
        page[y:y + img.height, x:x + img.width] = img.pixels
        boxes.append((word, x, y, img.width, img.height))
    return GrayImage(page), boxes
