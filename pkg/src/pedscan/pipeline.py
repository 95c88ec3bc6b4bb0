"""The three detection pipelines and the per-stage benchmark.

``detect`` runs: pyramid -> per level (crop to multiples of 8, features,
window scoring) -> thresholding in original coordinates -> NMS. The
variants differ only in which feature streams feed the SVM:

    lbp     LBP block histograms
    hog     HOG block histograms
    hoglbp  both, LBP first
"""

from __future__ import annotations

import csv
import logging
import statistics
import time
from collections import defaultdict
from contextlib import contextmanager, nullcontext
from dataclasses import dataclass, field

import numpy as np

from .classify import (
    WINDOW_BLOCKS_X, WINDOW_BLOCKS_Y, StreamMismatchError, Stream, SvmModel,
    collect_detections, load_model, score_windows, score_windows_naive, train_sgd,
    window_vectors,
)
from .core import WINDOW_HEIGHT, WINDOW_WIDTH, GrayImage, PyramidLevel, build_pyramid, pyramid_dims
from .hog import HOG_SIZE, gradient, hog_block_histograms, normalize_blocks
from .lbp import block_histograms, cell_histograms, lbp_map, naive_lbp_block_histograms
from .nms import nms_greedy
from .parallel import ExecConfig, run_tasks

log = logging.getLogger(__name__)

VARIANTS = {"lbp": ("lbp",), "hog": ("hog",), "hoglbp": ("lbp", "hog")}
LBP_SCHEMES = ("scalable", "naive")
SVM_SCHEMES = ("warp", "naive")
CSV_HEADER = ("stage", "image_size", "workers", "scheme", "px_per_ns", "fps")


@dataclass(frozen=True)
class PipelineConfig:
    variant: str = "hoglbp"
    scale_step: float = 1.2
    stride: int = 8
    model_path: str | None = None
    threshold: float | None = None  # None: use the model's threshold
    exec: ExecConfig = field(default_factory=ExecConfig)
    nms_overlap: float = 0.5
    normalize_hog: bool = True
    lbp_scheme: str = "scalable"
    svm_scheme: str = "warp"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {sorted(VARIANTS)}, got {self.variant!r}")
        if self.stride != 8:
            raise ValueError("window stride is fixed at 8 pixels")
        if self.lbp_scheme not in LBP_SCHEMES:
            raise ValueError(f"unknown LBP scheme {self.lbp_scheme!r}")
        if self.svm_scheme not in SVM_SCHEMES:
            raise ValueError(f"unknown SVM scheme {self.svm_scheme!r}")


def check_model(model: SvmModel, variant: str) -> None:
    if model.names != VARIANTS[variant]:
        raise StreamMismatchError(
            f"variant {variant!r} needs streams {list(VARIANTS[variant])}, "
            f"model has {list(model.names)}")
    if (model.hn, model.wn) != (WINDOW_BLOCKS_Y, WINDOW_BLOCKS_X):
        raise StreamMismatchError(f"model window is {model.hn}x{model.wn} blocks, "
                                  f"expected {WINDOW_BLOCKS_Y}x{WINDOW_BLOCKS_X}")


def lbp_bins_of(model: SvmModel) -> int:
    return model.stream("lbp").s if "lbp" in model.names else 256


def extract_features(image: GrayImage, streams, lbp_bins: int = 256, normalize_hog: bool = True,
                     config: ExecConfig | None = None, lbp_scheme: str = "scalable",
                     clock=None):
    """(lbp grid or None, hog grid or None) of an image already cropped to 8s."""
    clock = clock or (lambda stage: nullcontext())
    fa = fb = None
    if "lbp" in streams:
        with clock("lbp_map"):
            lmap = lbp_map(image, config)
        with clock("lbp_hist"):
            if lbp_scheme == "naive":
                fa = naive_lbp_block_histograms(lmap, lbp_bins, config)
            else:
                fa = block_histograms(cell_histograms(lmap, lbp_bins, config), config)
    if "hog" in streams:
        with clock("gradient"):
            grad = gradient(image, config)
        with clock("hog_hist"):
            fb = hog_block_histograms(grad, config)
            if normalize_hog:
                fb = normalize_blocks(fb)
    return fa, fb


def window_feature_vector(image: GrayImage, variant: str, lbp_bins: int = 256,
                          normalize_hog: bool = True) -> np.ndarray:
    """Feature vector of a single 64x128 sample, laid out like a scored window."""
    if (image.width, image.height) != (WINDOW_WIDTH, WINDOW_HEIGHT):
        raise ValueError(f"training samples must be {WINDOW_WIDTH}x{WINDOW_HEIGHT}, "
                         f"got {image.width}x{image.height}")
    fa, fb = extract_features(image, VARIANTS[variant], lbp_bins, normalize_hog)
    grids = [g for g in (fa, fb) if g is not None]
    return window_vectors(grids, 0, WINDOW_BLOCKS_Y, WINDOW_BLOCKS_X)[0]


def feature_layout(variant: str, lbp_bins: int = 256):
    sizes = {"lbp": lbp_bins, "hog": HOG_SIZE}
    return tuple((name, sizes[name]) for name in VARIANTS[variant])


def train_from_images(positives, negatives, variant: str, epochs: int = 20, seed: int = 0,
                      learn_rate: float = 1e-3, regularization: float = 1e-2,
                      lbp_bins: int = 256, normalize_hog: bool = True) -> SvmModel:
    """Fit a small fixture model on 64x128 positive and negative samples."""
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {sorted(VARIANTS)}, got {variant!r}")
    samples = [(window_feature_vector(im, variant, lbp_bins, normalize_hog), 1)
               for im in positives]
    samples += [(window_feature_vector(im, variant, lbp_bins, normalize_hog), -1)
                for im in negatives]
    return train_sgd(samples, epochs, learn_rate, regularization, seed,
                     layout=feature_layout(variant, lbp_bins))


def _scorer(scheme: str):
    return score_windows_naive if scheme == "naive" else score_windows


def score_level(level: PyramidLevel, k: int, model: SvmModel, cfg: PipelineConfig, clock=None):
    """ScoreMap of one pyramid level, plus the feature grids it was built from."""
    clock = clock or (lambda stage: nullcontext())
    img = level.image.crop_to_cells()
    fa, fb = extract_features(img, model.names, lbp_bins_of(model), cfg.normalize_hog,
                              cfg.exec, cfg.lbp_scheme, clock)
    with clock("svm"):
        sm = _scorer(cfg.svm_scheme)(fa, fb, model, cfg.exec, level=k,
                                     scale_x=level.scale_x, scale_y=level.scale_y)
    return sm, (fa, fb)


def detect(image: GrayImage, config: PipelineConfig, model: SvmModel | None = None,
           return_score_maps: bool = False):
    """Detections in original-image coordinates, best first."""
    if model is None:
        if config.model_path is None:
            raise ValueError("no model given and config.model_path is unset")
        model = load_model(config.model_path)
    check_model(model, config.variant)
    threshold = model.threshold if config.threshold is None else config.threshold
    pyramid = build_pyramid(image, config.scale_step, config=config.exec)
    tasks = [lambda lv=lv, k=k: score_level(lv, k, model, config)[0]
             for k, lv in enumerate(pyramid)]
    maps = run_tasks(tasks, config.exec.workers)
    kept = nms_greedy(collect_detections(maps, threshold), config.nms_overlap)
    return (kept, maps) if return_score_maps else kept


# -- benchmark ---------------------------------------------------------------

@dataclass(frozen=True)
class BenchRow:
    stage: str
    image_size: str
    workers: int
    scheme: str
    px_per_ns: float
    fps: float

    def as_tuple(self):
        return (self.stage, self.image_size, self.workers, self.scheme,
                f"{self.px_per_ns:.6g}", f"{self.fps:.6g}")


@dataclass
class BenchReport:
    rows: list[BenchRow] = field(default_factory=list)
    # per variant: sum over levels of pixels x feature values per block
    work: dict[str, int] = field(default_factory=dict)

    def write_csv(self, fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in self.rows:
            writer.writerow(row.as_tuple())


def zero_model(variant: str, lbp_bins: int = 256) -> SvmModel:
    """All-zero weights and bias -1: never fires, costs the same to evaluate."""
    return SvmModel(tuple(Stream(n, np.zeros((WINDOW_BLOCKS_Y, WINDOW_BLOCKS_X, s)))
                          for n, s in feature_layout(variant, lbp_bins)), bias=-1.0)


def _main_scheme(stage: str, cfg: PipelineConfig) -> str:
    return {"lbp_hist": cfg.lbp_scheme, "svm": cfg.svm_scheme}.get(stage, "default")


def _bench_frame(image, model, cfg, compare_schemes, times) -> int:
    """Run one frame stage by stage, adding nanoseconds into ``times``."""
    @contextmanager
    def clock(stage, scheme):
        t0 = time.perf_counter_ns()
        yield
        times[(stage, scheme)] += time.perf_counter_ns() - t0

    def main_clock(stage):
        return clock(stage, _main_scheme(stage, cfg))

    with main_clock("pyramid"):
        pyramid = build_pyramid(image, cfg.scale_step, config=cfg.exec)
    maps = []
    pixels = 0
    for k, lv in enumerate(pyramid):
        sm, (fa, fb) = score_level(lv, k, model, cfg, main_clock)
        maps.append(sm)
        pixels += lv.image.width * lv.image.height
        if not compare_schemes:
            continue
        if fa is not None:
            alt = LBP_SCHEMES[1 - LBP_SCHEMES.index(cfg.lbp_scheme)]
            lmap = lbp_map(lv.image.crop_to_cells(), cfg.exec)
            with clock("lbp_hist", alt):
                if alt == "naive":
                    naive_lbp_block_histograms(lmap, fa.s, cfg.exec)
                else:
                    block_histograms(cell_histograms(lmap, fa.s, cfg.exec), cfg.exec)
        alt = SVM_SCHEMES[1 - SVM_SCHEMES.index(cfg.svm_scheme)]
        with clock("svm", alt):
            _scorer(alt)(fa, fb, model, cfg.exec)
    threshold = model.threshold if cfg.threshold is None else cfg.threshold
    with main_clock("nms"):
        nms_greedy(collect_detections(maps, threshold), cfg.nms_overlap)
    return pixels


def _stage_order(variant):
    stages = ["pyramid"]
    if "lbp" in VARIANTS[variant]:
        stages += ["lbp_map", "lbp_hist"]
    if "hog" in VARIANTS[variant]:
        stages += ["gradient", "hog_hist"]
    return stages + ["svm", "nms"]


def frame_work(image: GrayImage, variant: str, scale_step: float = 1.2, lbp_bins: int = 256) -> int:
    """Pixels x per-block feature values, summed over the cropped pyramid levels."""
    per_block = sum(s for _, s in feature_layout(variant, lbp_bins))
    return sum((w // 8 * 8) * (h // 8 * 8) * per_block
               for w, h in pyramid_dims(image.width, image.height, scale_step))


def benchmark(images, config: PipelineConfig, repetitions: int = 1, model: SvmModel | None = None,
              compare_schemes: bool = False, variants=None) -> BenchReport:
    """Median per-stage throughput over ``repetitions`` runs of every image.

    Levels run one after another here so each stage's time is attributable;
    each stage is still internally parallel. Image decode is not timed.
    """
    if isinstance(images, GrayImage):
        images = [images]
    images = list(images)
    if not images:
        raise ValueError("benchmark needs at least one image")
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    variants = list(variants or [config.variant])
    report = BenchReport()
    by_size = defaultdict(list)
    for img in images:
        by_size[f"{img.width}x{img.height}"].append(img)

    for variant in variants:
        vcfg = PipelineConfig(**{**config.__dict__, "variant": variant})
        vmodel = model if model is not None and model.names == VARIANTS[variant] \
            else zero_model(variant)
        check_model(vmodel, variant)
        report.work[variant] = sum(frame_work(img, variant, vcfg.scale_step, lbp_bins_of(vmodel))
                                   for img in images)
        for size, group in by_size.items():
            per_rep = []
            pixels = 0
            for _ in range(repetitions):
                times = defaultdict(int)
                pixels = sum(_bench_frame(img, vmodel, vcfg, compare_schemes, times)
                             for img in group)
                per_rep.append(times)
            keys = sorted({k for t in per_rep for k in t},
                          key=lambda k: (_stage_order(variant).index(k[0]), k[1]))
            med = {k: statistics.median(t[k] for t in per_rep) for k in keys}
            frames = len(group)
            for stage, scheme in keys:
                ns = max(med[(stage, scheme)], 1)
                report.rows.append(BenchRow(f"{variant}.{stage}", size, vcfg.exec.workers,
                                            scheme, pixels / ns, frames * 1e9 / ns))
            # whole-frame figures from the default-scheme stages
            default = [k for k in keys if k[1] == _main_scheme(k[0], vcfg)]
            totals = [sum(t[k] for k in default) for t in per_rep]
            no_nms = [sum(t[k] for k in default if k[0] != "nms") for t in per_rep]
            for scheme, series in (("with_nms", totals), ("without_nms", no_nms)):
                ns = max(statistics.median(series), 1)
                report.rows.append(BenchRow(f"{variant}.frame", size, vcfg.exec.workers,
                                            scheme, pixels / ns, frames * 1e9 / ns))
            log.info("benchmarked %s on %d %s frame(s)", variant, frames, size)
    return report
