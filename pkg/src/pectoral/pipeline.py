"""End-to-end pectoral muscle identification for MLO mammograms.

Stages, in order: breast/background split, chest-wall side detection,
contrast windowing, marker extraction from the top rows, grayscale
reconstruction of the windowed image from the marker (which flattens
isolated bright tissue inside the breast), maximum-entropy thresholding,
close/open cleanup with disk footprints, selection of the component in the
top corner on the chest-wall side, and boundary tracing.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, fields, replace

import numpy as np
from scipy import ndimage as ndi

from .errors import (DegenerateHistogramError, DegenerateWindowError,
                     EmptyRegionError, StageError)
from .morphology import (Connectivity, binary_close, binary_open,
                         connected_components, disk_se,
                         geodesic_reconstruct_dilation)
from .raster import GrayImage, Orientation, histogram, min_max
from .thresholding import apply_threshold, kapur_threshold, otsu_threshold

WINDOW_MODES = ("range", "histogram")


@dataclass(frozen=True)
class PipelineConfig:
    """Tunables for :func:`segment_pectoral`.

    ``window_mode`` selects how the upper window bound is read: ``"range"``
    places it at ``window_upper_percentile`` of the way from the breast
    minimum to the breast maximum; ``"histogram"`` uses that quantile of the
    breast intensity distribution instead.
    """

    marker_rows_fraction: float = 0.04
    window_upper_percentile: float = 0.75
    window_mode: str = "range"
    close_radius_fraction: float = 0.01
    open_radius_fraction: float = 0.02
    connectivity: Connectivity = Connectivity.EIGHT
    invert_input: bool = False
    breast_threshold: str = "otsu"

    def __post_init__(self):
        for name in ("marker_rows_fraction", "window_upper_percentile",
                     "close_radius_fraction", "open_radius_fraction"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {value}")
        if self.window_mode not in WINDOW_MODES:
            raise ValueError(f"window_mode must be one of {WINDOW_MODES}")
        if self.breast_threshold != "otsu":
            raise ValueError("breast_threshold supports only 'otsu'")
        object.__setattr__(self, "connectivity", Connectivity(int(self.connectivity)))

    def marker_rows(self, height: int) -> int:
        return max(1, min(height, math.ceil(self.marker_rows_fraction * height)))

    def close_radius(self, width: int) -> int:
        return max(1, int(math.floor(self.close_radius_fraction * width + 0.5)))

    def open_radius(self, width: int) -> int:
        return max(1, int(math.floor(self.open_radius_fraction * width + 0.5)))

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = int(value) if isinstance(value, Connectivity) else value
        return out

    @classmethod
    def from_dict(cls, values: dict) -> "PipelineConfig":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in known:
                raise ValueError(f"unknown config key {key!r}")
            default = known[key].default
            if isinstance(default, bool):
                if isinstance(raw, str):
                    raw = raw.strip().lower() in ("1", "true", "yes", "on")
                kwargs[key] = bool(raw)
            elif isinstance(default, Connectivity):
                kwargs[key] = Connectivity(int(raw))
            elif isinstance(default, float):
                kwargs[key] = float(raw)
            else:
                kwargs[key] = str(raw)
        return cls(**kwargs)


@dataclass(frozen=True)
class PectoralStats:
    area: int
    mean_intensity: float


@dataclass(eq=False)
class SegmentationResult:
    """Outcome of :func:`segment_pectoral`.

    ``boundary`` is an ``(n, 2)`` integer array of ``(x, y)`` pixel
    coordinates ordered from the top edge towards the chest wall.
    ``stats`` is ``None`` when ``found`` is false.
    """

    pectoral: np.ndarray
    boundary: np.ndarray
    orientation: Orientation
    stats: PectoralStats | None
    found: bool = True
    thresholds: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    stages: dict | None = None


# Individual stages ---------------------------------------------------------

def working_image(img: GrayImage, cfg: PipelineConfig) -> GrayImage:
    if cfg.invert_input:
        return img.with_pixels(img.max_value - img.pixels.astype(np.int32))
    return img


def segment_breast(img: GrayImage, cfg: PipelineConfig = PipelineConfig(),
                   *, return_threshold: bool = False):
    """Breast-plus-pectoral region: largest Otsu-foreground component, holes filled."""
    work = working_image(img, cfg)
    t = otsu_threshold(histogram(work)).threshold
    fg = apply_threshold(work, t)
    comps = connected_components(fg, cfg.connectivity)
    breast = ndi.binary_fill_holes(comps.region(comps.largest()))
    return (breast, t) if return_threshold else breast


def detect_orientation(breast: np.ndarray) -> Orientation:
    breast = np.asarray(breast, dtype=bool)
    if not breast.any():
        raise EmptyRegionError("cannot detect orientation of an empty breast mask")
    half = breast.shape[1] // 2
    left = int(breast[:, :half].sum())
    right = int(breast[:, breast.shape[1] - half:].sum())
    return Orientation.LEFT if left > right else Orientation.RIGHT


def window_bounds(img: GrayImage, breast: np.ndarray, cfg: PipelineConfig) -> tuple[int, int]:
    lo, hi_all = min_max(img, breast)
    if cfg.window_mode == "range":
        hi = lo + int(math.floor(cfg.window_upper_percentile * (hi_all - lo) + 0.5))
    else:
        values = np.sort(img.pixels[breast], kind="stable")
        rank = max(0, math.ceil(cfg.window_upper_percentile * values.size) - 1)
        hi = int(values[rank])
    return lo, hi


def apply_window(img: GrayImage, breast: np.ndarray, cfg: PipelineConfig = PipelineConfig()) -> GrayImage:
    """Linear stretch of ``[lo, hi]`` onto the full range; background set to 0."""
    breast = np.asarray(breast, dtype=bool)
    lo, hi = window_bounds(img, breast, cfg)
    if hi <= lo:
        raise DegenerateWindowError(f"window collapses: lo={lo}, hi={hi}")
    full = img.max_value
    span = hi - lo
    v = img.pixels.astype(np.int64) - lo
    np.clip(v, 0, span, out=v)
    # round-half-up of v * full / span in exact integer arithmetic
    out = (2 * v * full + span) // (2 * span)
    out[~breast] = 0
    return img.with_pixels(out)


def marker_corner(shape, orient: Orientation) -> tuple[int, int]:
    """``(y, x)`` of the top corner on the chest-wall side."""
    return 0, (0 if orient is Orientation.LEFT else shape[1] - 1)


def build_marker(windowed: GrayImage, orient: Orientation, cfg: PipelineConfig = PipelineConfig(),
                 *, return_threshold: bool = False):
    rows = cfg.marker_rows(windowed.height)
    strip = windowed.pixels[:rows]
    marker = np.zeros_like(windowed.pixels)
    try:
        t = otsu_threshold(np.bincount(strip.ravel(), minlength=windowed.max_value + 1)).threshold
    except DegenerateHistogramError:
        t = None
        y, x = marker_corner(windowed.shape, orient)
        marker[y, x] = windowed.pixels[y, x]
    else:
        keep = strip > t
        marker[:rows][keep] = strip[keep]
    result = windowed.with_pixels(marker)
    return (result, t) if return_threshold else result


def _pad_margin(shape, box, margin):
    y0, x0, y1, x1 = box
    return max(0, y0 - margin), max(0, x0 - margin), min(shape[0], y1 + margin), min(shape[1], x1 + margin)


def cleanup(mask: np.ndarray, close_radius: int, open_radius: int) -> np.ndarray:
    """Close then open with disk footprints, treating the raster edges as
    continuing the mask outward (edge replication) so regions that touch the
    border are not eaten from outside."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return mask.copy()
    ys, xs = np.nonzero(mask.any(axis=1))[0], np.nonzero(mask.any(axis=0))[0]
    margin = close_radius + open_radius + 2
    y0, x0, y1, x1 = _pad_margin(mask.shape, (ys[0], xs[0], ys[-1] + 1, xs[-1] + 1), margin)
    crop = mask[y0:y1, x0:x1]
    pad = max(close_radius, open_radius) + 1
    grown = np.pad(crop, pad, mode="edge")
    grown = binary_open(binary_close(grown, disk_se(close_radius)), disk_se(open_radius))
    out = np.zeros_like(mask)
    out[y0:y1, x0:x1] = grown[pad:-pad, pad:-pad]
    return out


def select_corner_component(mask: np.ndarray, orient: Orientation, rows: int,
                            conn: Connectivity = Connectivity.EIGHT) -> np.ndarray:
    """Keep the component with the most pixels in the top ``rows`` rows of
    the chest-wall half; empty if no component reaches that region."""
    comps = connected_components(mask, conn)
    if comps.count == 0:
        return np.zeros_like(mask, dtype=bool)
    w = mask.shape[1]
    half = max(1, w // 2)
    cols = slice(0, half) if orient is Orientation.LEFT else slice(w - half, w)
    corner = comps.labels[:rows, cols]
    tally = np.bincount(corner.ravel(), minlength=comps.count + 1)[1:]
    if tally.max() == 0:
        return np.zeros_like(mask, dtype=bool)
    return comps.region(int(np.argmax(tally)) + 1)


def interface_pixels(mask: np.ndarray) -> np.ndarray:
    """Mask pixels with at least one in-raster 8-neighbour outside the mask."""
    mask = np.asarray(mask, dtype=bool)
    # border_value=1: pixels beyond the raster never count as outside
    return mask & ~ndi.binary_erosion(mask, structure=np.ones((3, 3), bool), border_value=1)


def boundary_mask(pectoral: np.ndarray, orient: Orientation) -> np.ndarray:
    edge = interface_pixels(pectoral)
    edge[0, :] = False
    if orient is Orientation.LEFT:
        edge[:, 0] = False
    else:
        edge[:, -1] = False
    return edge


def _trace(points: np.ndarray, start: int) -> np.ndarray:
    """Order points by walking to adjacent unvisited points, preferring
    4-neighbours; jumps to the nearest unvisited point when stuck."""
    n = len(points)
    lookup = {(int(x), int(y)): i for i, (x, y) in enumerate(points)}
    visited = np.zeros(n, dtype=bool)
    order = [start]
    visited[start] = True
    steps4 = ((0, 1), (1, 0), (-1, 0), (0, -1))
    steps8 = ((1, 1), (-1, 1), (1, -1), (-1, -1))
    cur = start
    for _ in range(n - 1):
        x, y = points[cur]
        nxt = -1
        for steps in (steps4, steps8):
            for dx, dy in steps:
                j = lookup.get((int(x + dx), int(y + dy)), -1)
                if j >= 0 and not visited[j]:
                    nxt = j
                    break
            if nxt >= 0:
                break
        if nxt < 0:
            rest = np.flatnonzero(~visited)
            d = np.abs(points[rest] - points[cur]).sum(axis=1)
            nxt = int(rest[np.argmin(d)])
        visited[nxt] = True
        order.append(nxt)
        cur = nxt
    return points[order]


def extract_boundary(pectoral: np.ndarray, orient: Orientation) -> np.ndarray:
    """Ordered ``(x, y)`` boundary pixels of the pectoral region.

    The trace starts at the topmost pixel (furthest from the chest wall on
    ties) and follows the contour down towards the chest wall.  Pixels on
    the top edge or the chest-wall edge are excluded.
    """
    edge = boundary_mask(pectoral, orient)
    ys, xs = np.nonzero(edge)
    if ys.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    points = np.stack([xs, ys], axis=1).astype(np.int64)
    depth = xs if orient is Orientation.LEFT else (edge.shape[1] - 1 - xs)
    start = int(np.lexsort((-depth, ys))[0])
    return _trace(points, start)


def pectoral_stats(original: GrayImage, pectoral: np.ndarray) -> PectoralStats:
    pectoral = np.asarray(pectoral, dtype=bool)
    area = int(pectoral.sum())
    if area == 0:
        raise EmptyRegionError("pectoral mask is empty")
    total = int(original.pixels[pectoral].sum(dtype=np.int64))
    return PectoralStats(area, total / area)


def render_overlay(img: GrayImage, result: SegmentationResult, alpha: float = 0.35,
                   cfg: PipelineConfig = PipelineConfig()) -> np.ndarray:
    """8-bit RGB view: windowed gray base, pectoral tinted red, boundary in yellow.

    The base is the contrast window used by the pipeline; images where no
    window can be formed (blank or flat breast) are shown unwindowed.
    """
    base = working_image(img, cfg)
    try:
        base = apply_window(base, segment_breast(base, replace(cfg, invert_input=False)), cfg)
    except (DegenerateHistogramError, DegenerateWindowError, EmptyRegionError):
        pass
    gray = (base.pixels >> (base.bit_depth - 8)).astype(np.float64)
    rgb = np.repeat(gray[:, :, None], 3, axis=2)
    m = np.asarray(result.pectoral, dtype=bool)
    if m.shape != gray.shape:
        raise ValueError("result does not match image dimensions")
    rgb[m, 0] = (1 - alpha) * rgb[m, 0] + alpha * 255.0
    rgb[m, 1] *= 1 - alpha
    rgb[m, 2] *= 1 - alpha
    out = np.floor(rgb + 0.5).clip(0, 255).astype(np.uint8)
    if len(result.boundary):
        xs, ys = result.boundary[:, 0], result.boundary[:, 1]
        out[ys, xs] = (255, 255, 0)
    return out


# Orchestration -------------------------------------------------------------

class _Stage:
    def __init__(self, name, timings):
        self.name = name
        self.timings = timings

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.timings[self.name] = time.perf_counter() - self.t0
        if exc is not None and not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        return False


def segment_pectoral(img: GrayImage, cfg: PipelineConfig = PipelineConfig(),
                     keep_stages: bool = False) -> SegmentationResult:
    timings: dict = {}
    thresholds: dict = {}
    stages: dict | None = {} if keep_stages else None

    with _Stage("breast", timings):
        work = working_image(img, cfg)
        breast, thresholds["breast"] = segment_breast(work, replace(cfg, invert_input=False),
                                                      return_threshold=True)
    with _Stage("orientation", timings):
        orient = detect_orientation(breast)
    with _Stage("window", timings):
        windowed = apply_window(work, breast, cfg)
    with _Stage("marker", timings):
        marker, thresholds["marker"] = build_marker(windowed, orient, cfg, return_threshold=True)
    with _Stage("reconstruct", timings):
        recon = geodesic_reconstruct_dilation(marker, windowed, cfg.connectivity)

    rows = cfg.marker_rows(img.height)
    found = True
    with _Stage("threshold", timings):
        try:
            t = kapur_threshold(histogram(recon, breast)).threshold
        except DegenerateHistogramError:
            # a flat reconstruction means nothing bright was reachable from the corner
            t = None
            found = False
        thresholds["kapur"] = t
        fg = apply_threshold(recon, t, breast) if found else np.zeros_like(breast)
    with _Stage("cleanup", timings):
        cleaned = cleanup(fg, cfg.close_radius(img.width), cfg.open_radius(img.width)) & breast
    with _Stage("select", timings):
        pectoral = select_corner_component(cleaned, orient, rows, cfg.connectivity)
        found = found and bool(pectoral.any())
    with _Stage("boundary", timings):
        boundary = extract_boundary(pectoral, orient)
    with _Stage("stats", timings):
        stats = pectoral_stats(img, pectoral) if found else None

    if stages is not None:
        stages.update(working=work, breast=breast, windowed=windowed, marker=marker,
                      reconstructed=recon, thresholded=fg, cleaned=cleaned, pectoral=pectoral)
    return SegmentationResult(pectoral, boundary, orient, stats, found, thresholds, timings, stages)
