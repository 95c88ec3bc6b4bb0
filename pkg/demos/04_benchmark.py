# # Per-stage throughput
#
# The benchmark runs the pyramid levels one after another and times each
# stage. It reports pixels per nanosecond and frames per second. Medians are
# taken over repetitions. With compare_schemes it also times the naive LBP
# histogram and the naive SVM next to the default kernels.

import sys

import numpy as np

from pedscan import ExecConfig, GrayImage, PipelineConfig, benchmark

rng = np.random.default_rng(2)
frame = GrayImage.from_array(rng.integers(0, 256, size=(375, 1242), dtype=np.uint8))

workers = int(sys.argv[1]) if len(sys.argv) > 1 else 4
report = benchmark([frame], PipelineConfig(exec=ExecConfig(workers)), repetitions=1,
                   compare_schemes=True, variants=["lbp", "hog", "hoglbp"])
report.write_csv(sys.stdout)

# Work per frame: pixels times feature values per block, over every level.

for variant, work in report.work.items():
    print(f"# {variant}: {work:,} pixel-features")
