# # LBP texture features
#
# Every pixel gets an 8-bit code: one bit per neighbour, set when the
# neighbour is at least as bright as the centre. Codes are counted into
# 8x8 cell histograms, and overlapping 16x16 blocks are sums of 2x2 cells.

import numpy as np

from pedscan import ExecConfig, GrayImage
from pedscan.lbp import block_histograms, cell_histograms, lbp_map, naive_lbp_block_histograms

# A 3x3 patch, centre 5. Neighbours clockwise from the top-left are
# 1 2 3 6 7 8 9 4, so the bits read 0 0 0 1 1 1 1 0.

patch = GrayImage.from_array(np.array([[1, 2, 3], [4, 5, 6], [9, 8, 7]], dtype=np.uint8))
print("centre code:", lbp_map(patch).codes[1, 1], "=", bin(lbp_map(patch).codes[1, 1]))

# ## A random frame

rng = np.random.default_rng(0)
img = GrayImage.from_array(rng.integers(0, 256, size=(64, 96), dtype=np.uint8))
cfg = ExecConfig(workers=4)

codes = lbp_map(img, cfg)
cells = cell_histograms(codes, bins=256, config=cfg)
blocks = block_histograms(cells, cfg)
print("cells:", cells.values.shape, "every cell sums to", set(cells.values.sum(-1).ravel()))
print("blocks:", blocks.values.shape, "every block sums to", set(blocks.values.sum(-1).ravel()))

# The naive scheme recounts each block straight from the code map. It does
# about four times the counting but gives the same numbers.

naive = naive_lbp_block_histograms(codes, 256, cfg)
print("schemes agree:", blocks == naive)

# ## Uniform patterns
#
# With 59 bins, the 58 codes with at most two 0/1 transitions keep their own
# bin and everything else shares the last one.

u = block_histograms(cell_histograms(codes, bins=59))
print("uniform blocks:", u.values.shape, "share in the catch-all bin:",
      round(u.values[..., 58].sum() / u.values.sum(), 3))
