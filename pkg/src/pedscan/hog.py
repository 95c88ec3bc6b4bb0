"""Gradient field and HOG block histograms with trilinear interpolation.

A block is 16x16 pixels made of 2x2 cells of 8x8, stepped every 8 pixels.
Every pixel of a block spreads its gradient magnitude over

* the two nearest of 9 unsigned orientation bins (20 degrees wide, wrapping
  at 180), and
* the block's cells, linearly between cell centres along x and y.

Spatial weights are clamped inside the block, so a pixel always hands its
whole magnitude to its own block: 2, 4 or 8 bins depending on whether it
sits in a corner, edge or centre region of the block.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import CELL, FeatureGrid, GrayImage, _frozen
from .parallel import ExecConfig, parallel_for_2d

N_BINS = 9
BIN_WIDTH = 180.0 / N_BINS
BLOCK = 2 * CELL
HOG_SIZE = 4 * N_BINS


@dataclass(frozen=True, eq=False)
class GradientField:
    width: int
    height: int
    magnitude: np.ndarray    # >= 0
    orientation: np.ndarray  # degrees in [0, 180)

    def __post_init__(self):
        mag = np.array(self.magnitude, dtype=np.float64).reshape(self.height, self.width)
        ori = np.array(self.orientation, dtype=np.float64).reshape(self.height, self.width)
        if mag.size and mag.min() < 0:
            raise ValueError("gradient magnitude must be non-negative")
        if ori.size and (ori.min() < 0 or ori.max() >= 180):
            raise ValueError("orientation must lie in [0, 180)")
        object.__setattr__(self, "magnitude", _frozen(mag))
        object.__setattr__(self, "orientation", _frozen(ori))


def fold_orientation(deg):
    """Fold an angle from atan2 (degrees, [-180, 180]) into [0, 180)."""
    deg = np.where(deg < 0, deg + 180.0, deg)
    return np.where(deg >= 180.0, deg - 180.0, deg)


def gradient(image: GrayImage, config: ExecConfig | None = None) -> GradientField:
    """Central differences with clamped borders.

    ``dx = I[y][x-1] - I[y][x+1]`` and ``dy = I[y-1][x] - I[y+1][x]``; the
    orientation is ``atan2(dy, dx)`` folded to the unsigned range, and 0
    wherever the magnitude is 0.
    """
    h, w = image.shape
    p = np.pad(image.data, 1, mode="edge").astype(np.float64)
    mag = np.empty((h, w))
    ori = np.empty((h, w))

    def body(rows, cols):
        r0, r1 = rows.start + 1, rows.stop + 1
        dx = p[r0:r1, 0:w] - p[r0:r1, 2:w + 2]
        dy = p[r0 - 1:r1 - 1, 1:w + 1] - p[r0 + 1:r1 + 1, 1:w + 1]
        m = np.sqrt(dx * dx + dy * dy)
        mag[rows] = m
        ori[rows] = np.where(m == 0, 0.0, fold_orientation(np.degrees(np.arctan2(dy, dx))))

    parallel_for_2d(h, w, body, config, tiled=True)
    return GradientField(w, h, mag, ori)


def spatial_weights() -> np.ndarray:
    """Weights ``[cell][i]`` of local coordinate i (0..15) toward cell 0/1.

    Cell centres sit at 3.5 and 11.5 in pixel-index coordinates; positions
    outside the span between them are clamped to the nearer cell.
    """
    frac = np.clip((np.arange(BLOCK) - (CELL / 2 - 0.5)) / CELL, 0.0, 1.0)
    return np.stack([1.0 - frac, frac])


def orientation_weights(theta):
    """Lower bin, upper bin and their weights for angles in degrees."""
    pos = np.asarray(theta, dtype=np.float64) / BIN_WIDTH - 0.5
    base = np.floor(pos)
    w_hi = pos - base
    lo = base.astype(np.intp) % N_BINS
    return lo, (lo + 1) % N_BINS, 1.0 - w_hi, w_hi


def pixel_bin_weights(i: int, j: int, theta: float, magnitude: float) -> dict[int, float]:
    """Nonzero contributions of the pixel at block-local (row i, col j).

    Keys are indices into the 36-bin block histogram.
    """
    sw = spatial_weights()
    lo, hi, w_lo, w_hi = orientation_weights(theta)
    out: dict[int, float] = {}
    for cy in (0, 1):
        for cx in (0, 1):
            for b, wo in ((int(lo), float(w_lo)), (int(hi), float(w_hi))):
                wgt = magnitude * (sw[cy, i] * sw[cx, j]) * wo
                if wgt != 0.0:
                    key = (cy * 2 + cx) * N_BINS + b
                    out[key] = out.get(key, 0.0) + wgt
    return out


def hog_block_histograms(grad: GradientField, config: ExecConfig | None = None) -> FeatureGrid:
    """36-bin histogram per block: the 2x2 cells' 9 bins, row-major by cell.

    Each block is accumulated inside a single task, so the float sums are
    identical whatever the worker count.
    """
    h, w = grad.height, grad.width
    if h % CELL or w % CELL:
        raise ValueError(f"gradient field {w}x{h} is not a multiple of {CELL}")
    hb, wb = h // CELL - 1, w // CELL - 1
    if hb < 1 or wb < 1:
        raise ValueError(f"gradient field {w}x{h} is smaller than one block")
    sw = spatial_weights()
    lo, hi, w_lo, w_hi = orientation_weights(grad.orientation)
    out = np.zeros((hb, wb, HOG_SIZE))

    def windows(a, by):
        band = a[by * CELL:by * CELL + BLOCK]
        return sliding_window_view(band, (BLOCK, BLOCK))[0, ::CELL]  # (wb, 16, 16)

    block_base = (np.arange(wb) * HOG_SIZE)[:, None, None]

    def body(rows, cols):
        for by in range(rows.start, rows.stop):
            mag = windows(grad.magnitude, by)
            bins = (windows(lo, by), windows(hi, by))
            owts = (windows(w_lo, by), windows(w_hi, by))
            keys, wts = [], []
            for cy in (0, 1):
                for cx in (0, 1):
                    spatial = mag * (sw[cy][:, None] * sw[cx][None, :])
                    for b, wo in zip(bins, owts):
                        keys.append(block_base + (cy * 2 + cx) * N_BINS + b)
                        wts.append(spatial * wo)
            out[by] = np.bincount(np.concatenate([k.ravel() for k in keys]),
                                  weights=np.concatenate([v.ravel() for v in wts]),
                                  minlength=wb * HOG_SIZE).reshape(wb, HOG_SIZE)

    parallel_for_2d(hb, wb, body, config, tiled=True)
    return FeatureGrid(out, kind="hog")


def normalize_blocks(grid: FeatureGrid, epsilon: float = 1e-6) -> FeatureGrid:
    """L2-normalise every block: ``v / sqrt(|v|^2 + eps^2)``."""
    v = grid.values.astype(np.float64)
    norm = np.sqrt(np.sum(v * v, axis=-1, keepdims=True) + epsilon * epsilon)
    return FeatureGrid(v / norm, kind=grid.kind)


def hog_features(image: GrayImage, normalize: bool = True,
                 config: ExecConfig | None = None) -> FeatureGrid:
    grid = hog_block_histograms(gradient(image, config), config)
    return normalize_blocks(grid) if normalize else grid
