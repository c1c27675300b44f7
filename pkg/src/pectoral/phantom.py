"""Synthetic MLO phantoms with exact ground truth, and mask evaluation.

A phantom is a dark background, a bright half-disc breast against one
vertical edge, a brighter pectoral wedge in the top corner on that edge,
optional dense blobs inside the breast, and seeded Gaussian noise.  The
pectoral/breast interface is either a straight line or a quadratic curve
``x = width * (c0 + c1*u + c2*u**2)`` with ``u = y / height``, measured
from the chest wall.
"""
from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import ndimage as ndi

from .errors import InvalidSpecError
from .pipeline import boundary_mask, interface_pixels
from .raster import GrayImage, Orientation

# pixel noise source; PCG64 streams are reproducible across platforms
NOISE_BIT_GENERATOR = "PCG64"


@dataclass(frozen=True)
class Blob:
    cx: float
    cy: float
    radius: float
    intensity: int


@dataclass(frozen=True)
class PhantomSpec:
    """Geometry and intensities of one phantom.

    ``edge`` is ``"straight"`` (uses ``edge_angle`` in degrees between the
    interface and the top edge, and ``edge_top_width`` as a fraction of the
    width), ``"curved"`` (uses ``edge_c0..edge_c2``) or ``"none"`` for a
    view without pectoral muscle.  Breast geometry is given by
    ``breast_radius`` (fraction of width) and ``breast_center_y`` (fraction
    of height).  Blob coordinates are in the left-oriented frame; right
    phantoms are mirrored after rendering.

    ``pectoral_ramp`` dims the muscle from ``pectoral_level`` at the top
    chest-wall corner towards the interface, by that fraction of the
    pectoral/breast contrast; ``pectoral_ramp_power`` shapes the profile
    (1 is linear, larger values keep the bright core small).  ``breast_falloff`` dims the breast radially
    from the chest wall to the skin line by that fraction of the
    breast/background contrast.
    """

    width: int = 256
    height: int = 320
    orientation: Orientation = Orientation.LEFT
    edge: str = "straight"
    edge_angle: float = 60.0
    edge_top_width: float = 0.35
    edge_c0: float = 0.0
    edge_c1: float = 0.0
    edge_c2: float = 0.0
    pectoral_level: int = 42000
    breast_level: int = 20000
    background_level: int = 2000
    breast_radius: float = 0.85
    breast_center_y: float = 0.55
    pectoral_ramp: float = 0.0
    pectoral_ramp_power: float = 1.0
    breast_falloff: float = 0.0
    blobs: tuple = ()
    noise_sigma: float = 0.0
    seed: int = 0
    bit_depth: int = 16

    def __post_init__(self):
        object.__setattr__(self, "orientation", Orientation(self.orientation))
        object.__setattr__(self, "blobs", tuple(b if isinstance(b, Blob) else Blob(*b) for b in self.blobs))


@dataclass(eq=False)
class Phantom:
    spec: PhantomSpec
    image: GrayImage
    truth_pectoral: np.ndarray
    truth_breast: np.ndarray


# Serialization (flat key = value text) --------------------------------------

def spec_to_text(spec: PhantomSpec) -> str:
    d = asdict(spec)
    d["orientation"] = spec.orientation.value
    d["blobs"] = ";".join(f"{b.cx:g},{b.cy:g},{b.radius:g},{b.intensity}" for b in spec.blobs)
    return "".join(f"{k} = {v}\n" for k, v in d.items())


def parse_key_values(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidSpecError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def spec_from_text(text: str) -> PhantomSpec:
    values = parse_key_values(text)
    defaults = PhantomSpec()
    kwargs = {}
    for key, raw in values.items():
        if not hasattr(defaults, key):
            raise InvalidSpecError(f"unknown phantom key {key!r}")
        try:
            if key == "blobs":
                blobs = []
                for item in filter(None, (s.strip() for s in raw.split(";"))):
                    cx, cy, r, inten = item.split(",")
                    blobs.append(Blob(float(cx), float(cy), float(r), int(inten)))
                kwargs[key] = tuple(blobs)
            elif key in ("orientation", "edge"):
                kwargs[key] = raw.lower()
            else:
                kwargs[key] = type(getattr(defaults, key))(raw)
        except ValueError as exc:
            raise InvalidSpecError(f"bad value for {key!r}: {raw!r}") from exc
    try:
        return PhantomSpec(**kwargs)
    except ValueError as exc:
        raise InvalidSpecError(str(exc)) from exc


# Generation -----------------------------------------------------------------

def edge_function(spec: PhantomSpec):
    """Distance of the interface from the chest wall as a function of ``y``
    (pixels), or ``None`` when the phantom has no pectoral muscle."""
    if spec.edge == "none":
        return None
    if spec.edge == "straight":
        if not 0.0 < spec.edge_angle < 90.0:
            raise InvalidSpecError("edge_angle must lie strictly between 0 and 90 degrees")
        a = spec.edge_top_width * spec.width
        y1 = a * math.tan(math.radians(spec.edge_angle))
        return lambda y: a * (1.0 - y / y1)
    if spec.edge == "curved":
        c0, c1, c2 = spec.edge_c0, spec.edge_c1, spec.edge_c2
        return lambda y: spec.width * (c0 + c1 * (y / spec.height) + c2 * (y / spec.height) ** 2)
    raise InvalidSpecError(f"unknown edge kind {spec.edge!r}")


def _validate(spec: PhantomSpec):
    if not 0.0 <= spec.pectoral_ramp < 1.0 or not 0.0 <= spec.breast_falloff < 1.0:
        raise InvalidSpecError("pectoral_ramp and breast_falloff must lie in [0, 1)")
    if not spec.pectoral_ramp_power > 0.0:
        raise InvalidSpecError("pectoral_ramp_power must be positive")
    if spec.width < 8 or spec.height < 8:
        raise InvalidSpecError("phantom must be at least 8x8")
    if spec.bit_depth not in (8, 16):
        raise InvalidSpecError("bit_depth must be 8 or 16")
    top = (1 << spec.bit_depth) - 1
    levels = (spec.background_level, spec.breast_level, spec.pectoral_level)
    if not all(0 <= v <= top for v in levels):
        raise InvalidSpecError("intensity levels exceed the bit depth")
    if spec.edge != "none" and spec.pectoral_level <= spec.breast_level:
        raise InvalidSpecError("pectoral_level must exceed breast_level")
    if spec.noise_sigma < 0:
        raise InvalidSpecError("noise_sigma must be non-negative")
    for b in spec.blobs:
        if b.intensity < spec.breast_level or b.intensity > top or b.radius <= 0:
            raise InvalidSpecError(f"invalid blob {b}")


def pectoral_rows(spec: PhantomSpec) -> np.ndarray:
    """Interface position at each row centre, ``nan`` below the wedge."""
    f = edge_function(spec)
    ys = np.arange(spec.height) + 0.5
    if f is None:
        return np.full(spec.height, np.nan)
    xs = np.array([f(y) for y in ys])
    if not 0.0 < f(0.0) < spec.width:
        raise InvalidSpecError("pectoral edge must meet the top edge inside the image")
    below = np.flatnonzero(xs <= 0.0)
    if below.size == 0:
        raise InvalidSpecError("pectoral edge leaves the image before reaching the chest wall")
    end = below[0]
    if np.any(xs[:end] >= spec.width):
        raise InvalidSpecError("pectoral edge leaves through the far side of the image")
    xs[end:] = np.nan
    return xs


def generate_phantom(spec: PhantomSpec) -> Phantom:
    _validate(spec)
    h, w = spec.height, spec.width
    yy, xx = np.mgrid[0:h, 0:w]
    xc, yc = xx + 0.5, yy + 0.5

    radius = spec.breast_radius * w
    breast = xc ** 2 + (yc - spec.breast_center_y * h) ** 2 <= radius ** 2

    edge_x = pectoral_rows(spec)
    with np.errstate(invalid="ignore"):
        pectoral = xc < edge_x[:, None]
    pectoral &= ~np.isnan(edge_x)[:, None]

    img = np.full((h, w), float(spec.background_level))
    rho = np.hypot(xc, yc - spec.breast_center_y * h) / radius
    falloff = spec.breast_falloff * (spec.breast_level - spec.background_level)
    img[breast] = spec.breast_level - falloff * rho[breast]
    for b in spec.blobs:
        disc = (xc - b.cx) ** 2 + (yc - b.cy) ** 2 <= b.radius ** 2
        if np.any(disc & pectoral):
            raise InvalidSpecError(f"blob at ({b.cx}, {b.cy}) overlaps the pectoral muscle")
        if np.any(disc & ~breast):
            raise InvalidSpecError(f"blob at ({b.cx}, {b.cy}) extends outside the breast")
        img[disc] = b.intensity
    if pectoral.any():
        # relative depth into the wedge: 0 at the interface, 1 at the corner
        with np.errstate(invalid="ignore", divide="ignore"):
            depth = 1.0 - xc / edge_x[:, None]
        reach = np.nanmax(np.where(pectoral, yc, np.nan))
        depth = np.clip(0.5 * depth + 0.5 * (1.0 - yc / reach), 0.0, 1.0)
        drop = spec.pectoral_ramp * (spec.pectoral_level - spec.breast_level)
        img[pectoral] = spec.pectoral_level - drop * (1.0 - depth[pectoral] ** spec.pectoral_ramp_power)
    truth_breast = breast | pectoral

    if spec.noise_sigma > 0:
        rng = np.random.Generator(np.random.PCG64(spec.seed))
        img += rng.normal(0.0, spec.noise_sigma, size=img.shape)
    top = (1 << spec.bit_depth) - 1
    pixels = np.clip(np.floor(img + 0.5), 0, top).astype(np.uint16)

    if spec.orientation is Orientation.RIGHT:
        pixels, pectoral, truth_breast = (np.fliplr(a).copy() for a in (pixels, pectoral, truth_breast))
    return Phantom(spec, GrayImage(pixels, spec.bit_depth), pectoral, truth_breast)


def wedge_area(spec: PhantomSpec) -> float:
    """Continuous area of a straight-edged wedge, in pixels."""
    a = spec.edge_top_width * spec.width
    return 0.5 * a * a * math.tan(math.radians(spec.edge_angle))


# Presets ----------------------------------------------------------------------

RAMP = (0.757, 0.857)
FALLOFF = (0.058, 0.107)
RAMP_POWER = (2.416, 2.416)
RADIUS = (0.581, 0.661)
CENTER = (0.4, 0.5)
LEVELS = {"background": (0.0, 0.032), "breast": (0.431, 0.511), "pectoral": (0.872, 0.952)}
PRESETS = ("straight", "curved", "mixed", "noisefree-curved", "none")


def _curved_coeffs(rng) -> tuple[float, float, float]:
    c0 = rng.uniform(0.28, 0.42)
    u1 = rng.uniform(0.45, 0.7)
    k = rng.choice([rng.uniform(0.6, 1.4), rng.uniform(-0.7, -0.4)])
    # x/w = c0 * (1 - s) * (1 + k s) with s = u / u1
    return float(c0), float(c0 * (k - 1.0) / u1), float(-c0 * k / u1 ** 2)


def _place_blobs(rng, spec: PhantomSpec, n: int, margin: float) -> tuple:
    h, w = spec.height, spec.width
    edge_x = pectoral_rows(spec)
    radius = spec.breast_radius * w
    cy0 = spec.breast_center_y * h
    blobs = []
    for _ in range(200 * max(n, 1)):
        if len(blobs) == n:
            break
        r = rng.uniform(0.02, 0.06) * w
        cx = rng.uniform(r, w)
        cy = rng.uniform(r, h - r)
        if math.hypot(cx, cy - cy0) + r > radius - 2:
            continue
        # keep clear of the pectoral wedge by at least `margin`
        lo, hi = int(max(0, cy - r - margin)), int(min(h, cy + r + margin + 1))
        near = edge_x[lo:hi]
        near = near[~np.isnan(near)]
        if near.size and cx - r - margin < near.max():
            continue
        if any(math.hypot(cx - b.cx, cy - b.cy) < r + b.radius + 2 for b in blobs):
            continue
        inten = int(rng.integers(spec.breast_level + (spec.pectoral_level - spec.breast_level) // 3,
                                 spec.pectoral_level + 1))
        blobs.append(Blob(round(cx, 2), round(cy, 2), round(r, 2), inten))
    return tuple(blobs)


def random_spec(rng, edge: str, width: int = 512, height: int = 640,
                noise_fraction: float = 0.05, seed: int = 0, bit_depth: int = 16) -> PhantomSpec:
    """Draw one phantom from the family used by the built-in suites."""
    full = (1 << bit_depth) - 1
    orientation = Orientation.LEFT if rng.random() < 0.5 else Orientation.RIGHT
    background = int(full * rng.uniform(*LEVELS["background"]))
    breast = int(full * rng.uniform(*LEVELS["breast"]))
    pectoral = int(full * rng.uniform(*LEVELS["pectoral"]))
    sigma = float(round(full * noise_fraction * rng.random(), 3))
    kw = dict(width=width, height=height, orientation=orientation, pectoral_level=pectoral,
              breast_level=breast, background_level=background, noise_sigma=sigma, seed=seed,
              breast_radius=round(rng.uniform(*RADIUS), 4),
              breast_center_y=round(rng.uniform(*CENTER), 4), bit_depth=bit_depth,
              pectoral_ramp=round(rng.uniform(*RAMP), 4),
              pectoral_ramp_power=round(rng.uniform(*RAMP_POWER), 4), breast_falloff=round(rng.uniform(*FALLOFF), 4))
    if edge == "straight":
        kw.update(edge="straight", edge_angle=round(rng.uniform(50, 72), 3),
                  edge_top_width=round(rng.uniform(0.25, 0.4), 4))
    elif edge == "curved":
        c0, c1, c2 = _curved_coeffs(rng)
        kw.update(edge="curved", edge_c0=round(c0, 6), edge_c1=round(c1, 6), edge_c2=round(c2, 6))
    elif edge == "none":
        kw.update(edge="none", breast_center_y=0.55, breast_radius=0.4)
    else:
        raise InvalidSpecError(f"unknown edge kind {edge!r}")
    spec = PhantomSpec(**kw)
    n_blobs = int(rng.integers(0, 4))
    return PhantomSpec(**{**kw, "blobs": _place_blobs(rng, spec, n_blobs, margin=0.05 * width)})


def preset_specs(preset: str, count: int, seed: int = 0, **kw) -> list[PhantomSpec]:
    """Deterministic list of specs for a named preset.

    ``mixed`` alternates halves: the first ``count // 2`` cases are
    straight-edged, the rest curved.  ``noisefree-curved`` renders flat
    tissue levels with no noise, so the only departure from a straight
    wedge is the curvature of the interface.
    """
    if preset not in PRESETS:
        raise InvalidSpecError(f"unknown preset {preset!r}; choose from {PRESETS}")
    rng = np.random.Generator(np.random.PCG64(seed))
    specs = []
    for i in range(count):
        case_seed = int(rng.integers(0, 2**31 - 1))
        if preset == "mixed":
            edge = "straight" if i < count // 2 else "curved"
        elif preset == "noisefree-curved":
            edge = "curved"
        else:
            edge = preset
        noise = 0.0 if preset == "noisefree-curved" else kw.get("noise_fraction", 0.05)
        spec = random_spec(rng, edge, noise_fraction=noise, seed=case_seed,
                           **{k: v for k, v in kw.items() if k != "noise_fraction"})
        if preset == "noisefree-curved":
            spec = dataclasses.replace(spec, pectoral_ramp=0.0, breast_falloff=0.0)
        specs.append(spec)
    return specs


# Evaluation -------------------------------------------------------------------

class ErrorClass(str, enum.Enum):
    CORRECT = "Correct"
    DENSE_AS_MUSCLE = "DenseAsMuscle"
    MUSCLE_AS_BREAST = "MuscleAsBreast"
    BOTH = "Both"
    NO_PECTORAL_FOUND = "NoPectoralFound"


DICE_CUTOFF = 0.95
SPILL_CUTOFF = 0.05


@dataclass(frozen=True)
class EvalReport:
    dice: float
    boundary_mean_distance: float
    error_class: ErrorClass
    over_fraction: float = 0.0
    under_fraction: float = 0.0


def dice(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    total = int(a.sum()) + int(b.sum())
    if total == 0:
        return 1.0
    return 2.0 * int((a & b).sum()) / total


def boundary_distance(a_edge: np.ndarray, b_edge: np.ndarray) -> float:
    """Symmetric mean distance between two sets of boundary pixels."""
    na, nb = int(a_edge.sum()), int(b_edge.sum())
    if na == 0 and nb == 0:
        return 0.0
    if na == 0 or nb == 0:
        return math.inf
    to_b = ndi.distance_transform_edt(~b_edge)
    to_a = ndi.distance_transform_edt(~a_edge)
    return 0.5 * (float(to_b[a_edge].mean()) + float(to_a[b_edge].mean()))


def evaluate(pred: np.ndarray, truth: np.ndarray, orientation: Orientation | None = None) -> EvalReport:
    """Score a predicted pectoral mask against ground truth.

    With ``orientation`` the boundary distance ignores the top and
    chest-wall edges, matching :func:`pectoral.pipeline.extract_boundary`.
    """
    pred = np.asarray(pred, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if pred.shape != truth.shape:
        raise ValueError(f"mask shapes differ: {pred.shape} vs {truth.shape}")
    d = dice(pred, truth)
    if orientation is None:
        dist = boundary_distance(interface_pixels(pred), interface_pixels(truth))
    else:
        dist = boundary_distance(boundary_mask(pred, orientation), boundary_mask(truth, orientation))

    n_truth = int(truth.sum())
    n_pred = int(pred.sum())
    if n_truth == 0:
        cls = ErrorClass.CORRECT if n_pred == 0 else ErrorClass.DENSE_AS_MUSCLE
        return EvalReport(d, dist, cls, float(n_pred > 0), 0.0)
    over = int((pred & ~truth).sum()) / n_truth
    under = int((truth & ~pred).sum()) / n_truth
    if n_pred == 0:
        cls = ErrorClass.NO_PECTORAL_FOUND
    elif over > SPILL_CUTOFF and under > SPILL_CUTOFF:
        cls = ErrorClass.BOTH
    elif over > SPILL_CUTOFF:
        cls = ErrorClass.DENSE_AS_MUSCLE
    elif under > SPILL_CUTOFF:
        cls = ErrorClass.MUSCLE_AS_BREAST
    elif d >= DICE_CUTOFF:
        cls = ErrorClass.CORRECT
    else:
        cls = ErrorClass.DENSE_AS_MUSCLE if over >= under else ErrorClass.MUSCLE_AS_BREAST
    return EvalReport(d, dist, cls, over, under)


# Straight-line baseline ---------------------------------------------------------

def line_fit_baseline(truth: np.ndarray, orientation: Orientation) -> np.ndarray:
    """Pectoral mask bounded by the least-squares line through the truth
    boundary, with the line written as distance-from-chest-wall against ``y``."""
    truth = np.asarray(truth, dtype=bool)
    h, w = truth.shape
    edge = boundary_mask(truth, orientation)
    ys, xs = np.nonzero(edge)
    if ys.size < 2:
        return truth.copy()
    depth = xs if orientation is Orientation.LEFT else w - 1 - xs
    slope, intercept = np.polyfit(ys.astype(float), depth.astype(float), 1)
    yy, xx = np.mgrid[0:h, 0:w]
    dd = xx if orientation is Orientation.LEFT else w - 1 - xx
    return dd <= intercept + slope * yy


def line_residual(mask: np.ndarray, orientation: Orientation) -> float:
    """RMS residual of the least-squares line through a mask's boundary."""
    edge = boundary_mask(mask, orientation)
    ys, xs = np.nonzero(edge)
    depth = xs if orientation is Orientation.LEFT else mask.shape[1] - 1 - xs
    coef = np.polyfit(ys.astype(float), depth.astype(float), 1)
    return float(np.sqrt(np.mean((np.polyval(coef, ys) - depth) ** 2)))
