"""Data-parallel sliding-window pedestrian detection: LBP and HOG features,
linear SVM scoring over an image pyramid, and greedy NMS."""

from .classify import (
    Detection, Stream, SvmModel, collect_detections, load_model, save_model,
    score_windows, score_windows_naive, train_sgd,
)
from .core import (
    FeatureGrid, GrayImage, ImagePyramid, PyramidLevel, ScoreMap,
    build_pyramid, downscale, load_pgm, save_pgm,
)
from .hog import GradientField, gradient, hog_block_histograms, normalize_blocks
from .lbp import LbpMap, block_histograms, cell_histograms, lbp_map, naive_lbp_block_histograms
from .nms import nms_greedy
from .parallel import ExecConfig, group_strided_reduce, parallel_for_2d, scatter_accumulate
from .pipeline import PipelineConfig, benchmark, detect

__version__ = "0.1.0"
