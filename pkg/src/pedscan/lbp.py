"""Local binary patterns: the per-pixel code map and block histograms.

Two ways to get block histograms are provided and must agree exactly:

* scalable -- scatter every pixel into its 8x8 cell histogram, then sum each
  2x2 group of cells into a 16x16 block (blocks overlap by one cell);
* naive -- recount all 256 pixels of every 16x16 block directly, doing each
  interior cell's work four times over.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import CELL, FeatureGrid, GrayImage, _frozen
from .parallel import ExecConfig, parallel_for_2d, scatter_accumulate

BLOCK = 2 * CELL

# (dy, dx) clockwise from the top-left neighbour; the first one is the MSB
NEIGHBOURS = ((-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1))


@dataclass(frozen=True, eq=False)
class LbpMap:
    width: int
    height: int
    codes: np.ndarray  # uint8, shape (height, width)

    def __eq__(self, other):
        if not isinstance(other, LbpMap):
            return NotImplemented
        return bool(np.array_equal(self.codes, other.codes))


def _transitions(code: int) -> int:
    bits = [(code >> k) & 1 for k in range(8)]
    return sum(bits[k] != bits[(k + 1) % 8] for k in range(8))


@lru_cache(maxsize=None)
def bin_table(bins: int = 256) -> np.ndarray:
    """Map from 8-bit code to histogram bin.

    256 bins is the identity. 59 bins keeps the 58 uniform codes (at most two
    0/1 transitions around the circle) in ascending order and pools every
    other code into bin 58.
    """
    if bins == 256:
        table = np.arange(256, dtype=np.intp)
    elif bins == 59:
        table = np.full(256, 58, dtype=np.intp)
        uniform = [c for c in range(256) if _transitions(c) <= 2]
        table[uniform] = np.arange(len(uniform))
    else:
        raise ValueError(f"LBP histograms support 256 or 59 bins, got {bins}")
    return _frozen(table)


def lbp_map(image: GrayImage, config: ExecConfig | None = None) -> LbpMap:
    """8-bit LBP code of every pixel; neighbours past the border are clamped.

    A bit is 1 when the neighbour is >= the centre, so flat regions code 255.
    """
    h, w = image.shape
    padded = np.pad(image.data, 1, mode="edge").astype(np.int16)
    codes = np.empty((h, w), dtype=np.uint8)

    def body(rows, cols):
        r0, r1 = rows.start, rows.stop
        centre = padded[1 + r0:1 + r1, 1:w + 1]
        acc = np.zeros(centre.shape, dtype=np.uint8)
        for k, (dy, dx) in enumerate(NEIGHBOURS):
            nb = padded[1 + r0 + dy:1 + r1 + dy, 1 + dx:w + 1 + dx]
            acc |= (nb >= centre).astype(np.uint8) << np.uint8(7 - k)
        codes[rows] = acc

    parallel_for_2d(h, w, body, config, tiled=True)
    return LbpMap(w, h, _frozen(codes))


def _check_cells(lmap: LbpMap):
    if lmap.width % CELL or lmap.height % CELL:
        raise ValueError(f"LBP map {lmap.width}x{lmap.height} is not a multiple of {CELL}; "
                         "crop the image first")


def cell_histograms(lmap: LbpMap, bins: int = 256, config: ExecConfig | None = None) -> FeatureGrid:
    """8x8 cell histograms, built by scattering one item per pixel."""
    _check_cells(lmap)
    table = bin_table(bins)
    w = lmap.width
    cells_w = w // CELL
    flat_codes = lmap.codes.reshape(-1)

    def address(idx):
        y, x = np.divmod(idx, w)
        cell = (y // CELL) * cells_w + x // CELL
        return cell * bins + table[flat_codes[idx]]

    counters = np.zeros((lmap.height // CELL, cells_w, bins), dtype=np.int64)
    scatter_accumulate(np.arange(flat_codes.size), address, counters, config)
    return FeatureGrid(counters, kind="cells")


def block_histograms(cells: FeatureGrid, config: ExecConfig | None = None) -> FeatureGrid:
    """Sum each 2x2 group of cells into a block histogram, stride one cell."""
    c = cells.values
    if c.shape[0] < 2 or c.shape[1] < 2:
        raise ValueError(f"need at least 2x2 cells for a block, got {c.shape[0]}x{c.shape[1]}")
    hb, wb = c.shape[0] - 1, c.shape[1] - 1
    out = np.empty((hb, wb, c.shape[2]), dtype=c.dtype)

    # bins are independent, so the lane-strided walk over bins is just the
    # bin axis of the vectorised add
    def body(rows, cols):
        r0, r1 = rows.start, rows.stop
        out[rows] = (c[r0:r1, :-1] + c[r0:r1, 1:]
                     + c[r0 + 1:r1 + 1, :-1] + c[r0 + 1:r1 + 1, 1:])

    parallel_for_2d(hb, wb, body, config, tiled=True)
    return FeatureGrid(out, kind="lbp")


def naive_lbp_block_histograms(lmap: LbpMap, bins: int = 256,
                               config: ExecConfig | None = None) -> FeatureGrid:
    """Count every 16x16 block from scratch; one task per block."""
    _check_cells(lmap)
    hb, wb = lmap.height // CELL - 1, lmap.width // CELL - 1
    if hb < 1 or wb < 1:
        raise ValueError(f"LBP map {lmap.width}x{lmap.height} is smaller than one block")
    mapped = bin_table(bins)[lmap.codes]
    out = np.empty((hb, wb, bins), dtype=np.int64)

    def body(by, bx):
        patch = mapped[by * CELL:by * CELL + BLOCK, bx * CELL:bx * CELL + BLOCK]
        out[by, bx] = np.bincount(patch.ravel(), minlength=bins)

    parallel_for_2d(hb, wb, body, config)
    return FeatureGrid(out, kind="lbp")


def lbp_features(image: GrayImage, bins: int = 256, scheme: str = "scalable",
                 config: ExecConfig | None = None) -> FeatureGrid:
    """Block histograms of an image whose dims are multiples of 8."""
    lmap = lbp_map(image, config)
    if scheme == "scalable":
        return block_histograms(cell_histograms(lmap, bins, config), config)
    if scheme == "naive":
        return naive_lbp_block_histograms(lmap, bins, config)
    raise ValueError(f"unknown LBP scheme {scheme!r}")
