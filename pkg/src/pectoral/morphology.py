"""Binary morphology with disk footprints, connected components, and
grayscale reconstruction by dilation.

Disk dilation and erosion are computed from an exact Euclidean distance
transform, so their cost does not grow with the radius.  A pixel is within
the disk of radius ``r`` around another exactly when their squared distance
is at most ``r**2``, which is the footprint definition used by
:func:`disk_se`.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import cv2
import numba
import numpy as np
from scipy import ndimage as ndi

from .errors import DimensionMismatchError
from .raster import GrayImage


class Connectivity(enum.IntEnum):
    FOUR = 4
    EIGHT = 8

    @property
    def structure(self) -> np.ndarray:
        if self is Connectivity.FOUR:
            return ndi.generate_binary_structure(2, 1)
        return ndi.generate_binary_structure(2, 2)


@dataclass(frozen=True, eq=False)
class StructuringElement:
    radius: int
    footprint: np.ndarray

    @property
    def size(self) -> int:
        return int(self.footprint.sum())


def disk_se(radius: int) -> StructuringElement:
    """Lattice disk: offsets ``(dy, dx)`` with ``dx**2 + dy**2 <= radius**2``."""
    radius = int(radius)
    if radius < 0:
        raise ValueError("radius must be non-negative")
    d = np.arange(-radius, radius + 1)
    footprint = d[:, None] ** 2 + d[None, :] ** 2 <= radius * radius
    footprint.setflags(write=False)
    return StructuringElement(radius, footprint)


def _radius(se) -> int:
    return se.radius if isinstance(se, StructuringElement) else int(se)


def _sq_distance_to_zero(m: np.ndarray) -> np.ndarray:
    """Squared Euclidean distance from each pixel to the nearest False pixel."""
    # DIST_MASK_PRECISE is the exact (Felzenszwalb) transform, not a chamfer
    d = cv2.distanceTransform(m.astype(np.uint8), cv2.DIST_L2, cv2.DIST_MASK_PRECISE)
    d = d.astype(np.float64)
    return d * d


def binary_dilate(m: np.ndarray, se) -> np.ndarray:
    """Union of disk translates centred on the true pixels of ``m``."""
    m = np.asarray(m, dtype=bool)
    r = _radius(se)
    if r == 0 or not m.any():
        return m.copy()
    return _sq_distance_to_zero(~m) <= r * r + 0.5


def binary_erode(m: np.ndarray, se) -> np.ndarray:
    """Pixels whose disk lies wholly inside ``m``; outside the raster counts as False."""
    m = np.asarray(m, dtype=bool)
    r = _radius(se)
    if r == 0 or not m.any():
        return m.copy()
    padded = np.pad(m, 1, constant_values=False)
    return (_sq_distance_to_zero(padded) > r * r + 0.5)[1:-1, 1:-1]


def binary_close(m: np.ndarray, se) -> np.ndarray:
    return binary_erode(binary_dilate(m, se), se)


def binary_open(m: np.ndarray, se) -> np.ndarray:
    return binary_dilate(binary_erode(m, se), se)


@dataclass(frozen=True, eq=False)
class Components:
    """Labeled regions of a binary mask.

    ``labels`` holds 0 for background and ``1..count`` for the regions.
    """

    labels: np.ndarray
    count: int
    sizes: np.ndarray
    bboxes: list

    def region(self, label: int) -> np.ndarray:
        return self.labels == label

    def label_at(self, y: int, x: int) -> int:
        return int(self.labels[y, x])

    def contains(self, label: int, y: int, x: int) -> bool:
        return self.label_at(y, x) == label and label != 0

    def largest(self) -> int:
        """Label of the most populous region (lowest label on ties), 0 if none."""
        if self.count == 0:
            return 0
        return int(np.argmax(self.sizes)) + 1


def connected_components(m: np.ndarray, conn: Connectivity = Connectivity.EIGHT) -> Components:
    m = np.asarray(m, dtype=bool)
    labels, count = ndi.label(m, structure=Connectivity(conn).structure)
    sizes = np.bincount(labels.ravel(), minlength=count + 1)[1:]
    bboxes = [(s[0].start, s[1].start, s[0].stop, s[1].stop) for s in ndi.find_objects(labels)]
    return Components(labels, count, sizes, bboxes)


# Grayscale reconstruction -------------------------------------------------

@numba.njit(cache=True, inline="always")
def _lift(J, q, v):
    if J[q] > v:
        return J[q]
    return v


@numba.njit(cache=True, inline="always")
def _can_spread(J, I, q, v):
    return J[q] < v and J[q] < I[q]


@numba.njit(cache=True)
def _reconstruct_kernel(J, I, eight):
    h, w = J.shape
    J = J.ravel()
    I = I.ravel()

    # raster sweep: neighbours above and to the left
    for y in range(h):
        for x in range(w):
            p = y * w + x
            v = J[p]
            if x > 0:
                v = _lift(J, p - 1, v)
            if y > 0:
                v = _lift(J, p - w, v)
                if eight:
                    if x > 0:
                        v = _lift(J, p - w - 1, v)
                    if x < w - 1:
                        v = _lift(J, p - w + 1, v)
            m = I[p]
            J[p] = v if v < m else m

    # One LIFO bucket per gray level.  Entries are appended to (pix, nxt)
    # in order, which keeps writes sequential; nxt links each entry to the
    # previous head of its bucket.  The sweep files each pixel at most once
    # and propagation raises each pixel at most once, hence 2*h*w entries.
    # The buffers must not be reallocated inside the loops (numba then
    # loses the fast path for every access).
    head = np.full(65536, -1, dtype=np.int32)
    pix = np.empty(2 * h * w, dtype=np.int32)
    nxt = np.empty(2 * h * w, dtype=np.int32)
    n = 0
    top = -1
    for y in range(h - 1, -1, -1):
        for x in range(w - 1, -1, -1):
            p = y * w + x
            v = J[p]
            if x < w - 1:
                v = _lift(J, p + 1, v)
            if y < h - 1:
                v = _lift(J, p + w, v)
                if eight:
                    if x > 0:
                        v = _lift(J, p + w - 1, v)
                    if x < w - 1:
                        v = _lift(J, p + w + 1, v)
            m = I[p]
            v = v if v < m else m
            J[p] = v
            spread = x < w - 1 and _can_spread(J, I, p + 1, v)
            if not spread and y < h - 1:
                spread = _can_spread(J, I, p + w, v)
                if not spread and eight:
                    spread = ((x > 0 and _can_spread(J, I, p + w - 1, v))
                              or (x < w - 1 and _can_spread(J, I, p + w + 1, v)))
            if spread:
                pix[n] = p
                nxt[n] = head[v]
                head[v] = n
                n += 1
                if v > top:
                    top = v

    # settle from the highest level down; a pixel reached from level v can
    # never be raised again by a later, lower level
    level = np.int64(top)
    while level >= 0:
        e = head[level]
        if e < 0:
            level -= 1
            continue
        head[level] = nxt[e]
        p = pix[e]
        if J[p] != level:
            continue
        y = p // w
        x = p - y * w
        for dy in range(-1, 2):
            yy = y + dy
            if yy < 0 or yy >= h:
                continue
            for dx in range(-1, 2):
                xx = x + dx
                if xx < 0 or xx >= w or (dx == 0 and dy == 0):
                    continue
                if not eight and dx != 0 and dy != 0:
                    continue
                q = yy * w + xx
                if J[q] < level and J[q] < I[q]:
                    m = I[q]
                    nv = level if level < m else m
                    J[q] = nv
                    pix[n] = q
                    nxt[n] = head[nv]
                    head[nv] = n
                    n += 1
    return J.reshape(h, w)


def geodesic_reconstruct_dilation(marker: GrayImage, mask: GrayImage,
                                  conn: Connectivity = Connectivity.EIGHT) -> GrayImage:
    """Reconstruct ``mask`` from ``marker`` by iterated unit dilation.

    The result is the fixed point of ``r <- min(dilate(r), mask)`` started
    from ``marker``.  Two sequential sweeps (raster, then anti-raster)
    resolve monotone paths and collect the pixels that can still spread;
    those are then propagated through a gray-level bucket queue, highest
    level first, so each pixel settles after at most one queued update.
    Marker values above the mask are clamped down to it first.
    """
    if marker.shape != mask.shape:
        raise DimensionMismatchError(f"marker {marker.shape} and mask {mask.shape} differ")
    if 2 * mask.pixels.size >= 2**31:
        raise ValueError("raster too large for 32-bit pixel indices")
    I = np.ascontiguousarray(mask.pixels, dtype=np.uint16)
    J = np.minimum(marker.pixels, I).astype(np.uint16)
    out = _reconstruct_kernel(J, I, Connectivity(conn) is Connectivity.EIGHT)
    return GrayImage(out, mask.bit_depth)
