"""Sliding-window linear SVM scoring, the model file format and a small trainer.

A 128x64 window at block offset (y, x) covers 15x7 block histograms. Its
feature vector is the row-major flattening ``[i][j][bin]`` of those blocks,
LBP stream first and HOG stream second, and its score is the dot product of
that vector with the model weights plus the bias.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass
from math import floor

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import CELL, WINDOW_HEIGHT, WINDOW_WIDTH, FeatureGrid, ScoreMap, _frozen
from .parallel import ExecConfig, group_strided_reduce, parallel_for_2d, serial_sum

WINDOW_BLOCKS_Y = WINDOW_HEIGHT // CELL - 1  # 15
WINDOW_BLOCKS_X = WINDOW_WIDTH // CELL - 1   # 7
STREAM_ORDER = ("lbp", "hog")
MAGIC = b"PDSVM01\0"


class ModelError(ValueError):
    pass


class StreamMismatchError(ModelError):
    """Feature grids do not line up with the model's streams."""


class BadMagicError(ModelError):
    pass


class VersionMismatchError(ModelError):
    pass


class LengthMismatchError(ModelError):
    pass


@dataclass(frozen=True, eq=False)
class Stream:
    name: str
    weights: np.ndarray  # (hn, wn, s)

    def __post_init__(self):
        if self.name not in STREAM_ORDER:
            raise ModelError(f"unknown stream {self.name!r}")
        w = np.array(self.weights, dtype=np.float64)
        if w.ndim != 3:
            raise ModelError(f"stream weights must be (hn, wn, s), got shape {w.shape}")
        object.__setattr__(self, "weights", _frozen(w))

    @property
    def s(self) -> int:
        return self.weights.shape[2]


@dataclass(frozen=True, eq=False)
class SvmModel:
    streams: tuple[Stream, ...]
    bias: float = 0.0
    threshold: float = 0.0

    def __post_init__(self):
        streams = tuple(sorted(self.streams, key=lambda st: STREAM_ORDER.index(st.name)))
        if not streams:
            raise ModelError("a model needs at least one stream")
        names = [st.name for st in streams]
        if len(set(names)) != len(names):
            raise ModelError(f"duplicate streams {names}")
        if len({st.weights.shape[:2] for st in streams}) != 1:
            raise ModelError("all streams must share the same window block layout")
        object.__setattr__(self, "streams", streams)
        object.__setattr__(self, "bias", float(self.bias))
        object.__setattr__(self, "threshold", float(self.threshold))

    @property
    def hn(self) -> int:
        return self.streams[0].weights.shape[0]

    @property
    def wn(self) -> int:
        return self.streams[0].weights.shape[1]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(st.name for st in self.streams)

    def stream(self, name: str) -> Stream:
        for st in self.streams:
            if st.name == name:
                return st
        raise StreamMismatchError(f"model has no {name!r} stream (has {self.names})")

    def weight_vector(self) -> np.ndarray:
        return np.concatenate([st.weights.ravel() for st in self.streams])

    def subset(self, names, bias: float | None = None) -> "SvmModel":
        """Model restricted to some streams, e.g. to score one stream alone."""
        return SvmModel(tuple(self.stream(n) for n in names),
                        self.bias if bias is None else bias, self.threshold)

    def with_threshold(self, threshold: float) -> "SvmModel":
        return SvmModel(self.streams, self.bias, threshold)

    def to_bytes(self) -> bytes:
        parts = [MAGIC, struct.pack("<I", len(self.streams))]
        for st in self.streams:
            hn, wn, s = st.weights.shape
            parts.append(struct.pack("<BIII", STREAM_ORDER.index(st.name), hn, wn, s))
            parts.append(st.weights.astype("<f8").tobytes())
        parts.append(struct.pack("<dd", self.bias, self.threshold))
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, raw: bytes) -> "SvmModel":
        if len(raw) < len(MAGIC):
            raise LengthMismatchError(f"model file is only {len(raw)} bytes")
        if raw[:5] != MAGIC[:5]:
            raise BadMagicError(f"not a model file (magic {raw[:8]!r})")
        if raw[:8] != MAGIC:
            raise VersionMismatchError(f"unsupported model version {raw[5:8]!r}")
        pos = len(MAGIC)

        def take(n):
            nonlocal pos
            if pos + n > len(raw):
                raise LengthMismatchError(f"model file truncated at byte {len(raw)}, "
                                          f"needed {pos + n}")
            chunk = raw[pos:pos + n]
            pos += n
            return chunk

        (count,) = struct.unpack("<I", take(4))
        streams = []
        for _ in range(count):
            tag, hn, wn, s = struct.unpack("<BIII", take(13))
            if tag >= len(STREAM_ORDER):
                raise ModelError(f"unknown stream tag {tag}")
            w = np.frombuffer(take(8 * hn * wn * s), dtype="<f8").reshape(hn, wn, s)
            streams.append(Stream(STREAM_ORDER[tag], w))
        bias, threshold = struct.unpack("<dd", take(16))
        if pos != len(raw):
            raise LengthMismatchError(f"{len(raw) - pos} unexpected trailing bytes")
        return cls(tuple(streams), bias, threshold)

    def __eq__(self, other):
        if not isinstance(other, SvmModel):
            return NotImplemented
        return self.to_bytes() == other.to_bytes()


def save_model(model: SvmModel, path) -> None:
    with open(os.fspath(path), "wb") as fh:
        fh.write(model.to_bytes())


def load_model(path) -> SvmModel:
    with open(path, "rb") as fh:
        return SvmModel.from_bytes(fh.read())


@dataclass(frozen=True)
class Detection:
    x: int
    y: int
    width: int
    height: int
    score: float
    level: int = 0

    def to_json(self) -> str:
        return json.dumps({"x": self.x, "y": self.y, "width": self.width,
                           "height": self.height, "score": self.score, "level": self.level})

    @classmethod
    def from_json(cls, line: str) -> "Detection":
        d = json.loads(line)
        return cls(int(d["x"]), int(d["y"]), int(d["width"]), int(d["height"]),
                   float(d["score"]), int(d["level"]))


# -- scoring -----------------------------------------------------------------

def _bind_grids(fa: FeatureGrid | None, fb: FeatureGrid | None, model: SvmModel):
    given = {name: g for name, g in zip(STREAM_ORDER, (fa, fb)) if g is not None}
    if not given:
        raise StreamMismatchError("at least one feature grid is required")
    if set(given) != set(model.names):
        raise StreamMismatchError(
            f"grids for {sorted(given)} do not match model streams {list(model.names)}")
    grids = [given[name] for name in model.names]
    dims = {(g.hb, g.wb) for g in grids}
    if len(dims) != 1:
        raise ValueError(f"feature grids disagree on block dims: {sorted(dims)}")
    for st, g in zip(model.streams, grids):
        if g.s != st.s:
            raise StreamMismatchError(
                f"{st.name} grid has {g.s} bins per block, model expects {st.s}")
    hb, wb = dims.pop()
    if hb < model.hn or wb < model.wn:
        raise ValueError(f"{hb}x{wb} block grid is smaller than the "
                         f"{model.hn}x{model.wn} window")
    return grids, hb - model.hn + 1, wb - model.wn + 1


def window_vectors(grids, y: int, hn: int, wn: int) -> np.ndarray:
    """Feature vectors of every window in window-row ``y``, shape (X, length).

    Always a fresh array.
    """
    n_x = grids[0].wb - wn + 1
    out = np.empty((n_x, sum(hn * wn * g.s for g in grids)))
    pos = 0
    for g in grids:
        band = g.values[y:y + hn]                      # (hn, wb, s)
        win = sliding_window_view(band, wn, axis=1)    # (hn, X, s, wn)
        n = hn * wn * g.s
        out[:, pos:pos + n].reshape(n_x, hn, wn, g.s)[...] = win.transpose(1, 0, 3, 2)
        pos += n
    return out


def _score(fa, fb, model, config, reduce_row, level=0, scale_x=1.0, scale_y=1.0) -> ScoreMap:
    grids, ny, nx = _bind_grids(fa, fb, model)
    weights = model.weight_vector()
    scores = np.empty((ny, nx))

    # one task per window row; inside it, one reduction per window
    def body(rows, cols):
        for y in range(rows.start, rows.stop):
            products = window_vectors(grids, y, model.hn, model.wn)
            np.multiply(products, weights, out=products)
            scores[y] = reduce_row(products) + model.bias

    parallel_for_2d(ny, nx, body, config, tiled=True)
    return ScoreMap(scores, level, scale_x, scale_y)


def score_windows(fa: FeatureGrid | None, fb: FeatureGrid | None, model: SvmModel,
                  config: ExecConfig | None = None, **level_info) -> ScoreMap:
    """Score every window with one lane group per window.

    Lane L of a group sums vector entries L, L+32, L+64, ...; the lanes are
    then folded pairwise like a warp shuffle-down.
    """
    gw = (config or ExecConfig()).group_width

    def reduce_row(products):
        return group_strided_reduce(products.shape[-1], lambda idx: products[:, idx], gw)

    return _score(fa, fb, model, config, reduce_row, **level_info)


def score_windows_naive(fa: FeatureGrid | None, fb: FeatureGrid | None, model: SvmModel,
                        config: ExecConfig | None = None, **level_info) -> ScoreMap:
    """Score every window as one sequential left-fold dot product."""
    return _score(fa, fb, model, config, serial_sum, **level_info)


def _round_half_up(v: float) -> int:
    return int(floor(v + 0.5))


def collect_detections(score_maps, threshold: float = 0.0) -> list[Detection]:
    """Windows scoring above ``threshold``, mapped back to original-image pixels."""
    out = []
    for sm in score_maps:
        ys, xs = np.nonzero(sm.scores > threshold)
        w = _round_half_up(WINDOW_WIDTH / sm.scale_x)
        h = _round_half_up(WINDOW_HEIGHT / sm.scale_y)
        for y, x in zip(ys.tolist(), xs.tolist()):
            out.append(Detection(_round_half_up(CELL * x / sm.scale_x),
                                 _round_half_up(CELL * y / sm.scale_y),
                                 w, h, float(sm.scores[y, x]), sm.level))
    return out


# -- training ----------------------------------------------------------------

def train_sgd(samples, epochs: int = 20, learn_rate: float = 0.01,
              regularization: float = 1e-4, seed: int = 0, layout=None,
              hn: int = WINDOW_BLOCKS_Y, wn: int = WINDOW_BLOCKS_X,
              threshold: float = 0.0) -> SvmModel:
    """Hinge-loss SGD on ``(vector, label)`` pairs with labels +1 / -1.

    ``layout`` lists ``(stream_name, bins_per_block)`` in vector order; by
    default the whole vector is a single ``lbp`` stream. Sample order per
    epoch comes from ``seed``, so equal inputs give bit-identical models.
    """
    if not samples:
        raise ValueError("no training samples")
    if len({np.size(v) for v, _ in samples}) != 1:
        raise ValueError("training vectors have inconsistent lengths")
    X = np.stack([np.asarray(v, dtype=np.float64).ravel() for v, _ in samples])
    y = np.array([float(lab) for _, lab in samples])
    if not set(np.unique(y)) <= {-1.0, 1.0}:
        raise ValueError("labels must be +1 or -1")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise ValueError("training needs both positive and negative samples")
    d = X.shape[1]
    if layout is None:
        if d % (hn * wn):
            raise ValueError(f"vector length {d} is not a multiple of {hn}x{wn}")
        layout = (("lbp", d // (hn * wn)),)
    names = [name for name, _ in layout]
    if names != sorted(names, key=STREAM_ORDER.index):
        raise ValueError(f"layout streams must be ordered {STREAM_ORDER}, got {names}")
    if sum(s for _, s in layout) * hn * wn != d:
        raise ValueError(f"layout {list(layout)} does not describe length-{d} vectors")

    rng = np.random.default_rng(seed)
    w = np.zeros(d)
    b = 0.0
    shrink = 1.0 - learn_rate * regularization
    for _ in range(epochs):
        for i in rng.permutation(len(y)):
            margin = y[i] * (X[i] @ w + b)
            w *= shrink
            if margin < 1.0:
                w += (learn_rate * y[i]) * X[i]
                b += learn_rate * y[i]

    streams, pos = [], 0
    for name, s in layout:
        n = hn * wn * s
        streams.append(Stream(name, w[pos:pos + n].reshape(hn, wn, s)))
        pos += n
    return SvmModel(tuple(streams), b, threshold)
