"""Synthetic images for fixtures: a bright bar "pedestrian" on a noise field."""

from __future__ import annotations

import numpy as np

from .core import WINDOW_HEIGHT, WINDOW_WIDTH, GrayImage

BAR_VALUE = 235
BAR_COLS = (24, 40)
BAR_ROWS = (16, 112)
NOISE_RANGE = (30, 150)


def noise(width: int, height: int, rng: np.random.Generator) -> np.ndarray:
    lo, hi = NOISE_RANGE
    return rng.integers(lo, hi + 1, size=(height, width), dtype=np.uint8)


def paint_bar(canvas: np.ndarray, x0: int, y0: int, scale: float = 1.0) -> np.ndarray:
    """Draw the bar of a window whose top-left corner is (x0, y0), clipped.

    ``scale`` shrinks or grows the bar about the window centre.
    """
    h, w = canvas.shape
    cy, cx = WINDOW_HEIGHT / 2, WINDOW_WIDTH / 2
    rows = [y0 + round(cy + (r - cy) * scale) for r in BAR_ROWS]
    cols = [x0 + round(cx + (c - cx) * scale) for c in BAR_COLS]
    r0, r1 = max(0, rows[0]), min(h, rows[1])
    c0, c1 = max(0, cols[0]), min(w, cols[1])
    if r0 < r1 and c0 < c1:
        canvas[r0:r1, c0:c1] = BAR_VALUE
    return canvas


def positive(rng: np.random.Generator, jitter: int = 2) -> GrayImage:
    canvas = noise(WINDOW_WIDTH, WINDOW_HEIGHT, rng)
    dx, dy = rng.integers(-jitter, jitter + 1, size=2) if jitter else (0, 0)
    return GrayImage.from_array(paint_bar(canvas, int(dx), int(dy)))


def negative(rng: np.random.Generator, shift: tuple[int, int] | None = None,
             scale: float = 1.0) -> GrayImage:
    """Plain noise, or a bar displaced or resized enough that NMS would not
    merge its detection with the true one."""
    canvas = noise(WINDOW_WIDTH, WINDOW_HEIGHT, rng)
    if shift is not None:
        paint_bar(canvas, *shift, scale=scale)
    return GrayImage.from_array(canvas)


# displacements whose box overlaps the true box by IoU <= 0.5
HARD_SHIFTS = tuple((dx, 0) for dx in (-48, -40, -32, -24, 24, 32, 40, 48)) + \
    tuple((0, dy) for dy in (-96, -64, -48, 48, 64, 96)) + \
    ((-24, -48), (24, -48), (-24, 48), (24, 48))
# bar sizes as seen from coarser pyramid levels
HARD_SCALES = (0.7, 0.58, 0.48)


def training_set(n_pos: int = 60, n_noise: int = 60, seed: int = 0):
    """(positives, negatives) lists of 64x128 images."""
    rng = np.random.default_rng(seed)
    pos = [positive(rng) for _ in range(n_pos)]
    neg = [negative(rng) for _ in range(n_noise)]
    neg += [negative(rng, s) for s in HARD_SHIFTS for _ in range(2)]
    neg += [negative(rng, (0, 0), sc) for sc in HARD_SCALES for _ in range(4)]
    return pos, neg


def scene(width: int = 512, height: int = 256, at: tuple[int, int] = (200, 64),
          seed: int = 1) -> GrayImage:
    """Noise frame with one bar pattern whose window corner is at ``at``."""
    rng = np.random.default_rng(seed)
    return GrayImage.from_array(paint_bar(noise(width, height, rng), *at))
