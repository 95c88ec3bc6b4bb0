"""Image and feature containers, PGM I/O and the image pyramid."""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from fractions import Fraction
from math import floor

import numpy as np

from .parallel import ExecConfig, parallel_for_2d

WINDOW_WIDTH = 64
WINDOW_HEIGHT = 128
CELL = 8


class PgmError(ValueError):
    """Base class for PGM decoding problems."""


class MalformedHeaderError(PgmError):
    pass


class TruncatedPayloadError(PgmError):
    pass


class UnsupportedMaxvalError(PgmError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit grayscale raster, row-major with the origin at the top left."""

    width: int
    height: int
    data: np.ndarray

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"image dims must be >= 1, got {self.width}x{self.height}")
        data = np.asarray(self.data)
        if data.size != self.width * self.height:
            raise ValueError(f"data length {data.size} != {self.width}*{self.height}")
        if data.dtype != np.uint8:
            if data.size and (data.min() < 0 or data.max() > 255):
                raise ValueError("intensities must lie in [0, 255]")
        data = np.array(data, dtype=np.uint8).reshape(self.height, self.width)
        object.__setattr__(self, "data", _frozen(data))

    @classmethod
    def from_array(cls, pixels) -> "GrayImage":
        pixels = np.asarray(pixels)
        if pixels.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {pixels.shape}")
        return cls(pixels.shape[1], pixels.shape[0], pixels)

    @property
    def shape(self) -> tuple[int, int]:
        return self.height, self.width

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.data, other.data))

    def crop(self, width: int, height: int) -> "GrayImage":
        """Keep the top-left ``width`` x ``height`` region."""
        if not (1 <= width <= self.width and 1 <= height <= self.height):
            raise ValueError(f"crop {width}x{height} outside {self.width}x{self.height}")
        return GrayImage(width, height, self.data[:height, :width])

    def crop_to_cells(self) -> "GrayImage":
        """Drop bottom rows and right columns so both dims are multiples of 8."""
        w, h = self.width // CELL * CELL, self.height // CELL * CELL
        if w == 0 or h == 0:
            raise ValueError(f"{self.width}x{self.height} image holds no full 8x8 cell")
        return self if (w, h) == (self.width, self.height) else self.crop(w, h)


@dataclass(frozen=True)
class PyramidLevel:
    image: GrayImage
    scale: float  # nominal 1 / scale_step**k
    scale_x: float = 1.0  # level width / original width
    scale_y: float = 1.0


@dataclass(frozen=True)
class ImagePyramid:
    levels: tuple[PyramidLevel, ...]

    def __len__(self):
        return len(self.levels)

    def __iter__(self):
        return iter(self.levels)

    def __getitem__(self, k) -> PyramidLevel:
        return self.levels[k]

    @property
    def dims(self) -> list[tuple[int, int]]:
        """(width, height) of every level."""
        return [(lv.image.width, lv.image.height) for lv in self.levels]


@dataclass(frozen=True, eq=False)
class FeatureGrid:
    """Per-block histograms laid out ``[block_row][block_col][bin]``."""

    values: np.ndarray
    kind: str = "lbp"  # "lbp" (integer counts), "hog" (real bins) or "cells"

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 3:
            raise ValueError(f"feature grid must be 3-D, got shape {values.shape}")
        object.__setattr__(self, "values", _frozen(np.array(values)))

    @property
    def hb(self) -> int:
        return self.values.shape[0]

    @property
    def wb(self) -> int:
        return self.values.shape[1]

    @property
    def s(self) -> int:
        return self.values.shape[2]

    def __eq__(self, other):
        if not isinstance(other, FeatureGrid):
            return NotImplemented
        return (self.values.shape == other.values.shape
                and bool(np.array_equal(self.values, other.values)))


@dataclass(frozen=True, eq=False)
class ScoreMap:
    """SVM scores of every window position on one pyramid level."""

    scores: np.ndarray
    level: int = 0
    scale_x: float = 1.0  # level width / original width
    scale_y: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "scores", _frozen(np.array(self.scores, dtype=np.float64)))

    @property
    def y_count(self) -> int:
        return self.scores.shape[0]

    @property
    def x_count(self) -> int:
        return self.scores.shape[1]

    @property
    def level_scale(self) -> float:
        return self.scale_x


# -- PGM ---------------------------------------------------------------------

_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n?)*([^\s#]+)")


def _parse_header(raw: bytes):
    pos = 0
    tokens = []
    for _ in range(4):
        m = _TOKEN.match(raw, pos)
        if not m:
            raise MalformedHeaderError("incomplete PGM header")
        tokens.append(m.group(1))
        pos = m.end()
    magic, w, h, maxval = tokens
    if magic != b"P5":
        raise MalformedHeaderError(f"expected binary PGM magic P5, got {magic[:8]!r}")
    try:
        width, height, maxval = int(w), int(h), int(maxval)
    except ValueError:
        raise MalformedHeaderError("non-numeric PGM dimensions or maxval") from None
    if width < 1 or height < 1:
        raise MalformedHeaderError(f"invalid PGM dimensions {width}x{height}")
    if pos >= len(raw) or raw[pos:pos + 1] not in (b" ", b"\t", b"\n", b"\r"):
        raise MalformedHeaderError("missing whitespace after PGM maxval")
    return width, height, maxval, pos + 1


def decode_pgm(raw: bytes) -> GrayImage:
    width, height, maxval, start = _parse_header(raw)
    if maxval != 255:
        raise UnsupportedMaxvalError(f"only maxval 255 is supported, got {maxval}")
    need = width * height
    payload = raw[start:start + need]
    if len(payload) < need:
        raise TruncatedPayloadError(f"expected {need} pixel bytes, found {len(payload)}")
    return GrayImage(width, height, np.frombuffer(payload, dtype=np.uint8))


def encode_pgm(image: GrayImage) -> bytes:
    return b"P5\n%d %d\n255\n" % (image.width, image.height) + image.data.tobytes()


def load_pgm(path) -> GrayImage:
    with open(path, "rb") as fh:
        return decode_pgm(fh.read())


def save_pgm(image: GrayImage, path) -> None:
    with open(os.fspath(path), "wb") as fh:
        fh.write(encode_pgm(image))


# -- resampling --------------------------------------------------------------

def _axis_taps(n_in: int, n_out: int):
    # pixel-centre alignment
    src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    lo = np.floor(src).astype(np.intp)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, src - lo


def downscale(image: GrayImage, out_width: int, out_height: int,
              config: ExecConfig | None = None) -> GrayImage:
    """Bilinear resample to a size no larger than the input."""
    if not (1 <= out_width <= image.width and 1 <= out_height <= image.height):
        raise ValueError(
            f"target {out_width}x{out_height} must be within 1..{image.width}x1..{image.height}")
    if (out_width, out_height) == (image.width, image.height):
        return image
    src = image.data.astype(np.float64)
    x0, x1, tx = _axis_taps(image.width, out_width)
    y0, y1, ty = _axis_taps(image.height, out_height)
    out = np.empty((out_height, out_width), dtype=np.uint8)

    def body(rows, cols):
        r0, r1, wy = y0[rows], y1[rows], ty[rows][:, None]
        top = src[r0][:, x0] * (1 - tx) + src[r0][:, x1] * tx
        bot = src[r1][:, x0] * (1 - tx) + src[r1][:, x1] * tx
        val = top * (1 - wy) + bot * wy
        out[rows] = np.clip(np.floor(val + 0.5), 0, 255)

    parallel_for_2d(out_height, out_width, body, config, tiled=True)
    return GrayImage(out_width, out_height, out)


def _step_fraction(scale_step: float) -> Fraction:
    return Fraction(scale_step).limit_denominator(10**6)


def pyramid_dims(width: int, height: int, scale_step: float = 1.2,
                 min_width: int = WINDOW_WIDTH, min_height: int = WINDOW_HEIGHT):
    """Level sizes from the floor recurrence ``d_k = floor(d_{k-1} / step)``."""
    if not scale_step > 1.0:
        raise ValueError(f"scale_step must be > 1, got {scale_step}")
    if width < min_width or height < min_height:
        raise ValueError(
            f"{width}x{height} image is smaller than one {min_width}x{min_height} window")
    step = _step_fraction(scale_step)
    dims = [(width, height)]
    while True:
        w, h = dims[-1]
        w, h = floor(w / step), floor(h / step)
        if w < min_width or h < min_height:
            return dims
        dims.append((w, h))


def build_pyramid(image: GrayImage, scale_step: float = 1.2, min_width: int = WINDOW_WIDTH,
                  min_height: int = WINDOW_HEIGHT, config: ExecConfig | None = None) -> ImagePyramid:
    """Downscaled copies of ``image``; each level is resampled from the original."""
    dims = pyramid_dims(image.width, image.height, scale_step, min_width, min_height)
    step = float(_step_fraction(scale_step))
    levels = []
    for k, (w, h) in enumerate(dims):
        levels.append(PyramidLevel(
            downscale(image, w, h, config),
            scale=step ** -k,
            scale_x=w / image.width,
            scale_y=h / image.height,
        ))
    return ImagePyramid(tuple(levels))
