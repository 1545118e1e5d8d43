"""Deterministic 5x7 pixel font for the simulated games.

Text is rendered inside a sentinel-bordered box, which the harness OCR
service can find and decode back to the exact string with pixel
coordinates. Game art that must stay OCR-invisible (icons, card faces)
simply avoids the sentinel border.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

SENTINEL = (13, 37, 73)  # border color the decoder searches for
PAD = 2  # px between border and glyphs
GLYPH_W, GLYPH_H = 5, 7
CELL_W = 6  # glyph + 1 column spacing

_RAW = {
    "A": "01110 10001 10001 11111 10001 10001 10001",
    "B": "11110 10001 10001 11110 10001 10001 11110",
    "C": "01111 10000 10000 10000 10000 10000 01111",
    "D": "11110 10001 10001 10001 10001 10001 11110",
    "E": "11111 10000 10000 11110 10000 10000 11111",
    "F": "11111 10000 10000 11110 10000 10000 10000",
    "G": "01111 10000 10000 10111 10001 10001 01110",
    "H": "10001 10001 10001 11111 10001 10001 10001",
    "I": "11111 00100 00100 00100 00100 00100 11111",
    "J": "00111 00010 00010 00010 00010 10010 01100",
    "K": "10001 10010 10100 11000 10100 10010 10001",
    "L": "10000 10000 10000 10000 10000 10000 11111",
    "M": "10001 11011 10101 10101 10001 10001 10001",
    "N": "10001 11001 10101 10011 10001 10001 10001",
    "O": "01110 10001 10001 10001 10001 10001 01110",
    "P": "11110 10001 10001 11110 10000 10000 10000",
    "Q": "01110 10001 10001 10001 10101 10010 01101",
    "R": "11110 10001 10001 11110 10100 10010 10001",
    "S": "01111 10000 10000 01110 00001 00001 11110",
    "T": "11111 00100 00100 00100 00100 00100 00100",
    "U": "10001 10001 10001 10001 10001 10001 01110",
    "V": "10001 10001 10001 10001 10001 01010 00100",
    "W": "10001 10001 10001 10101 10101 11011 10001",
    "X": "10001 01010 00100 00100 00100 01010 10001",
    "Y": "10001 01010 00100 00100 00100 00100 00100",
    "Z": "11111 00001 00010 00100 01000 10000 11111",
    "0": "01110 10001 10011 10101 11001 10001 01110",
    "1": "00100 01100 00100 00100 00100 00100 01110",
    "2": "01110 10001 00001 00110 01000 10000 11111",
    "3": "11110 00001 00001 01110 00001 00001 11110",
    "4": "00010 00110 01010 10010 11111 00010 00010",
    "5": "11111 10000 11110 00001 00001 10001 01110",
    "6": "00110 01000 10000 11110 10001 10001 01110",
    "7": "11111 00001 00010 00100 01000 01000 01000",
    "8": "01110 10001 10001 01110 10001 10001 01110",
    "9": "01110 10001 10001 01111 00001 00010 01100",
    " ": "00000 00000 00000 00000 00000 00000 00000",
    ".": "00000 00000 00000 00000 00000 00110 00110",
    ",": "00000 00000 00000 00000 00110 00100 01000",
    "!": "00100 00100 00100 00100 00100 00000 00100",
    "?": "01110 10001 00001 00110 00100 00000 00100",
    ":": "00000 00110 00110 00000 00110 00110 00000",
    "-": "00000 00000 00000 01110 00000 00000 00000",
    "'": "00100 00100 01000 00000 00000 00000 00000",
    "/": "00001 00010 00010 00100 01000 01000 10000",
}

GLYPHS = {
    char: np.array([[cell == "1" for cell in row] for row in spec.split()], dtype=bool)
    for char, spec in _RAW.items()
}
_LOOKUP = {glyph.tobytes(): char for char, glyph in GLYPHS.items()}


def glyph_pixels(char: str) -> np.ndarray:
    return GLYPHS.get(char.upper(), GLYPHS["?"])


def draw_glyph(canvas: np.ndarray, x: int, y: int, char: str, scale: int,
               color: tuple[int, int, int]) -> None:
    """Draw one bare glyph (no box) -- OCR-invisible art."""
    glyph = glyph_pixels(char)
    for r, c in zip(*np.nonzero(glyph)):
        canvas[y + r * scale:y + (r + 1) * scale,
               x + c * scale:x + (c + 1) * scale] = color


def draw_text(canvas: np.ndarray, x: int, y: int, text: str, scale: int,
              color: tuple[int, int, int]) -> None:
    for i, char in enumerate(text.upper()):
        draw_glyph(canvas, x + i * CELL_W * scale, y, char, scale, color)


def text_box_size(text: str, scale: int) -> tuple[int, int]:
    return (len(text) * CELL_W * scale + 2 * PAD + 2, GLYPH_H * scale + 2 * PAD + 2)


def draw_text_box(canvas: np.ndarray, x: int, y: int, text: str, scale: int = 2,
                  fg: tuple[int, int, int] = (235, 235, 235),
                  bg: tuple[int, int, int] = (25, 25, 25),
                  ) -> tuple[int, int, int, int]:
    """Render decodable text; returns the box pixel rect (x1, y1, x2, y2)."""
    text = text.upper()
    w, h = text_box_size(text, scale)
    canvas[y:y + h, x:x + w] = SENTINEL
    canvas[y + 1:y + h - 1, x + 1:x + w - 1] = bg
    draw_text(canvas, x + 1 + PAD, y + 1 + PAD, text, scale, fg)
    return (x, y, x + w, y + h)


def decode_text_boxes(pixels: np.ndarray) -> list[dict]:
    """Find sentinel-bordered boxes and decode their text.

    Returns OCR-shaped items: {"text", "box": [x1, y1, x2, y2], "conf"}.
    """
    mask = np.all(pixels == SENTINEL, axis=2)
    if not mask.any():
        return []
    labeled, count = ndimage.label(mask)
    items = []
    for index in range(1, count + 1):
        ys, xs = np.nonzero(labeled == index)
        y1, y2 = int(ys.min()), int(ys.max()) + 1
        x1, x2 = int(xs.min()), int(xs.max()) + 1
        content_h = (y2 - y1) - 2 - 2 * PAD
        content_w = (x2 - x1) - 2 - 2 * PAD
        if content_h < GLYPH_H or content_h % GLYPH_H != 0:
            continue
        scale = content_h // GLYPH_H
        chars = content_w // (CELL_W * scale)
        if chars < 1:
            continue
        bg = tuple(int(v) for v in pixels[y1 + 1, x1 + 1])
        gx0, gy0 = x1 + 1 + PAD, y1 + 1 + PAD
        decoded = []
        for i in range(chars):
            bits = np.zeros((GLYPH_H, GLYPH_W), dtype=bool)
            for r in range(GLYPH_H):
                for c in range(GLYPH_W):
                    px = gx0 + i * CELL_W * scale + c * scale + scale // 2
                    py = gy0 + r * scale + scale // 2
                    bits[r, c] = tuple(int(v) for v in pixels[py, px]) != bg
            decoded.append(_LOOKUP.get(bits.tobytes(), "?"))
        text = "".join(decoded).rstrip()
        if text:
            items.append({"text": text, "box": [x1, y1, x2, y2], "conf": 0.99})
    items.sort(key=lambda item: (item["box"][1], item["box"][0]))
    return items
