# # HOG block histograms
#
# Gradients come from centred differences. Each pixel's magnitude is split
# between the two nearest of 9 orientation bins (20 degrees wide, over
# 0-180) and between the nearest cells of its 16x16 block.

import numpy as np

from pedscan import GrayImage
from pedscan.hog import gradient, hog_block_histograms, normalize_blocks, pixel_bin_weights

# ## Gradients of a ramp
#
# I = x gives dx = I[x-1] - I[x+1] = -2 everywhere inside, so the magnitude
# is 2. The orientation folds into [0, 180), so it reads 0.

ramp = GrayImage.from_array(np.tile(np.arange(32, dtype=np.uint8), (16, 1)))
g = gradient(ramp)
print("magnitude:", np.unique(g.magnitude[:, 1:-1]), "orientation:", np.unique(g.orientation[:, 1:-1]))

# ## Where one pixel's vote lands
#
# Near a block corner a pixel feeds one cell; along an edge, two; in the
# middle, four. Orientation splits each of those across two bins.

for i, j in [(1, 1), (1, 8), (8, 8)]:
    w = pixel_bin_weights(i, j, 25.0, 1.0)
    print(f"pixel ({i:2d},{j:2d}) at 25 deg -> {len(w)} bins, total {sum(w.values()):.3f}")

# ## A block grid, normalised

rng = np.random.default_rng(1)
img = GrayImage.from_array(rng.integers(0, 256, size=(128, 64), dtype=np.uint8))
raw = hog_block_histograms(gradient(img))
unit = normalize_blocks(raw)
print("block grid:", raw.values.shape)
print("block norms after L2:", np.round(np.linalg.norm(unit.values, axis=-1)[:2, :3], 6))
