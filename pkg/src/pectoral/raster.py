"""Raster carriers and the small primitives every stage shares.

Images are stored as ``uint16`` arrays in row-major order with the origin
at the top-left corner and ``y`` increasing downward.  Binary masks are
plain ``bool`` arrays of the same shape; a histogram is an ``int64`` array
with one bin per representable intensity.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, EmptyRegionError


class Orientation(str, enum.Enum):
    """Vertical image edge touched by the chest wall."""

    LEFT = "left"
    RIGHT = "right"

    def flipped(self) -> "Orientation":
        return Orientation.RIGHT if self is Orientation.LEFT else Orientation.LEFT


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Single-channel raster with 8- or 16-bit unsigned samples.

    ``pixels`` is always widened to ``uint16``; ``bit_depth`` records the
    nominal depth so codecs can write the file back unchanged.
    """

    pixels: np.ndarray
    bit_depth: int = 16

    def __post_init__(self):
        if self.bit_depth not in (8, 16):
            raise ValueError(f"bit_depth must be 8 or 16, got {self.bit_depth}")
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError(f"expected a non-empty 2-D raster, got shape {px.shape}")
        if px.dtype.kind not in "ui" and px.dtype != bool:
            raise ValueError(f"pixels must be integers, got {px.dtype}")
        if px.size and (int(px.min()) < 0 or int(px.max()) > (1 << self.bit_depth) - 1):
            raise ValueError(f"pixel values exceed the {self.bit_depth}-bit range")
        px = np.ascontiguousarray(px, dtype=np.uint16)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    @property
    def max_value(self) -> int:
        return (1 << self.bit_depth) - 1

    def with_pixels(self, pixels: np.ndarray) -> "GrayImage":
        return GrayImage(pixels, self.bit_depth)

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.bit_depth == other.bit_depth and np.array_equal(self.pixels, other.pixels)

    def __repr__(self):
        return f"GrayImage({self.width}x{self.height}, {self.bit_depth}-bit)"


def as_array(img) -> np.ndarray:
    return img.pixels if isinstance(img, GrayImage) else np.asarray(img)


def check_same_shape(a, b, what="roi"):
    if a.shape != b.shape:
        raise DimensionMismatchError(f"{what} shape {b.shape} does not match image shape {a.shape}")


def histogram(img: GrayImage, roi: np.ndarray | None = None) -> np.ndarray:
    """Count pixels per intensity, optionally restricted to ``roi``.

    Returns an ``int64`` array of length ``2**img.bit_depth``.
    """
    values = img.pixels
    if roi is not None:
        roi = np.asarray(roi, dtype=bool)
        check_same_shape(values, roi)
        values = values[roi]
    return np.bincount(values.ravel(), minlength=img.max_value + 1).astype(np.int64)


def min_max(img: GrayImage, roi: np.ndarray | None = None) -> tuple[int, int]:
    values = img.pixels
    if roi is not None:
        roi = np.asarray(roi, dtype=bool)
        check_same_shape(values, roi)
        values = values[roi]
    if values.size == 0:
        raise EmptyRegionError("min_max over an empty region")
    return int(values.min()), int(values.max())


def occupied_range(counts: np.ndarray) -> tuple[int, int, int]:
    """Return ``(lo, hi, n_occupied)`` for the non-empty bins of a histogram."""
    nz = np.flatnonzero(counts)
    if nz.size == 0:
        return 0, 0, 0
    return int(nz[0]), int(nz[-1]), int(nz.size)
