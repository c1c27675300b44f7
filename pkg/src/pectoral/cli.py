"""Command-line interface: ``pectoral segment | validate | phantom``.

Exit codes: 0 success, 1 error, 2 (segment only) no pectoral muscle found.
Standard output carries only result paths; diagnostics go to standard error.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import batch
from .codecs import read_image, write_image, write_mask, write_rgb_png
from .errors import InvalidSpecError, StageError
from .phantom import PRESETS, generate_phantom, parse_key_values, preset_specs, spec_from_text, spec_to_text
from .pipeline import PipelineConfig, render_overlay, segment_pectoral
from .raster import GrayImage

EXIT_OK, EXIT_ERROR, EXIT_NOT_FOUND = 0, 1, 2

# flag name -> PipelineConfig field
CONFIG_FLAGS = {
    "marker_rows": "marker_rows_fraction",
    "window_percentile": "window_upper_percentile",
    "window_mode": "window_mode",
    "close_radius": "close_radius_fraction",
    "open_radius": "open_radius_fraction",
    "connectivity": "connectivity",
    "invert": "invert_input",
}


def _err(msg: str) -> None:
    print(f"pectoral: {msg}", file=sys.stderr)


def _config_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("pipeline configuration")
    g.add_argument("--config", metavar="FILE", help="flat 'key = value' file of PipelineConfig fields")
    g.add_argument("--marker-rows", type=float, metavar="FRAC",
                   help="marker strip height as a fraction of image height (default 0.04)")
    g.add_argument("--window-percentile", type=float, metavar="FRAC",
                   help="upper window bound along the breast intensity range (default 0.75)")
    g.add_argument("--window-mode", choices=("range", "histogram"),
                   help="read the upper bound from the value range or from the histogram")
    g.add_argument("--close-radius", type=float, metavar="FRAC",
                   help="closing disk radius as a fraction of image width (default 0.01)")
    g.add_argument("--open-radius", type=float, metavar="FRAC",
                   help="opening disk radius as a fraction of image width (default 0.02)")
    g.add_argument("--connectivity", type=int, choices=(4, 8))
    g.add_argument("--invert", action="store_true", default=None,
                   help="invert intensities first (images with a bright background)")
    g.add_argument("--no-timing", action="store_true", help="omit timings from JSON outputs")
    return p


def load_config(args) -> PipelineConfig:
    values = {}
    if args.config:
        values.update(parse_key_values(Path(args.config).read_text()))
    for flag, name in CONFIG_FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[name] = v
    return PipelineConfig.from_dict(values)


# segment ------------------------------------------------------------------------

def _stage_image(value, depth: int) -> GrayImage:
    if isinstance(value, GrayImage):
        return value
    if value.dtype == bool:
        return GrayImage(np.where(value, 255, 0).astype(np.uint16), 8)
    return GrayImage(value, depth)


def cmd_segment(args) -> int:
    try:
        cfg = load_config(args)
    except (OSError, ValueError) as exc:
        _err(f"[config] {exc}")
        return EXIT_ERROR
    try:
        img = read_image(args.input)
    except Exception as exc:
        _err(f"[input] {type(exc).__name__}: {exc}")
        return EXIT_ERROR
    try:
        result = segment_pectoral(img, cfg, keep_stages=args.dump_stages)
        overlay = render_overlay(img, result, cfg=cfg)
    except StageError as exc:
        _err(str(exc))
        return EXIT_ERROR

    out = Path(args.out)
    stats = {
        "input": str(args.input),
        "found": result.found,
        "orientation": result.orientation.value,
        "width": img.width,
        "height": img.height,
        "bit_depth": img.bit_depth,
        "thresholds": result.thresholds,
        "area": result.stats.area if result.stats else 0,
        "mean_intensity": round(result.stats.mean_intensity, 6) if result.stats else None,
        "boundary_points": int(len(result.boundary)),
        "config": cfg.to_dict(),
    }
    if not args.no_timing:
        stats["timings"] = {k: round(v, 6) for k, v in result.timings.items()}
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_mask(result.pectoral, out / "mask.png")
        (out / "boundary.txt").write_text("".join(f"{x} {y}\n" for x, y in result.boundary))
        write_rgb_png(overlay, out / "overlay.png")
        (out / "stats.json").write_text(json.dumps(stats, indent=2) + "\n")
        if args.dump_stages:
            stage_dir = out / "stages"
            stage_dir.mkdir(exist_ok=True)
            for i, (name, value) in enumerate(result.stages.items()):
                write_image(_stage_image(value, img.bit_depth), stage_dir / f"{i:02d}_{name}.png")
    except OSError as exc:
        _err(f"[output] {exc}")
        return EXIT_ERROR
    print(out)
    if not result.found:
        _err("no pectoral muscle found; wrote an empty mask")
        return EXIT_NOT_FOUND
    return EXIT_OK


# validate -----------------------------------------------------------------------

def resolve_jobs(source: str | None, count: int, seed: int) -> tuple[list, str]:
    if source is None:
        return batch.jobs_from_preset("mixed", count, seed), f"preset:mixed:count={count}:seed={seed}"
    path = Path(source)
    if path.is_dir():
        return batch.jobs_from_directory(path), f"directory:{path.name}"
    if path.is_file():
        return batch.jobs_from_suite_file(path), f"suite:{path.name}"
    if source in PRESETS:
        return batch.jobs_from_preset(source, count, seed), f"preset:{source}:count={count}:seed={seed}"
    raise InvalidSpecError(f"{source!r} is neither a directory, a suite file nor a preset {PRESETS}")


def cmd_validate(args) -> int:
    try:
        cfg = load_config(args)
        jobs, source = resolve_jobs(args.source, args.count, args.seed)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        _err(f"[suite] {exc}")
        return EXIT_ERROR
    records = batch.run_jobs(jobs, cfg, workers=args.jobs, timing=not args.no_timing)
    report = batch.build_report(records, cfg, source)
    try:
        path, _ = batch.write_report(report, args.report)
    except OSError as exc:
        _err(f"[output] {exc}")
        return EXIT_ERROR
    agg = report["aggregate"]
    _err(f"{agg['count']} case(s), {agg['failed']} failed; tallies {agg['tallies']}")
    print(path)
    return EXIT_OK


# phantom ------------------------------------------------------------------------

def cmd_phantom(args) -> int:
    try:
        if args.spec:
            base = spec_from_text(Path(args.spec).read_text())
            specs = [replace(base, seed=base.seed + i) for i in range(args.count)]
            label = f"spec:{Path(args.spec).name}"
        else:
            kw = {k: v for k, v in (("width", args.width), ("height", args.height)) if v is not None}
            specs = preset_specs(args.preset, args.count, args.seed, **kw)
            label = f"preset:{args.preset}"
        phantoms = [generate_phantom(s) for s in specs]
    except (OSError, ValueError) as exc:
        _err(f"[phantom] {exc}")
        return EXIT_ERROR

    out = Path(args.out)
    width = max(4, len(str(max(args.count - 1, 0))))
    cases = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for i, ph in enumerate(phantoms):
            stem = f"case_{i:0{width}d}"
            write_image(ph.image, out / f"{stem}.pgm")
            write_mask(ph.truth_pectoral, out / f"{stem}_truth.png")
            (out / f"{stem}.spec").write_text(spec_to_text(ph.spec))
            cases.append({"id": stem, "image": f"{stem}.pgm", "truth": f"{stem}_truth.png",
                          "spec": f"{stem}.spec", "orientation": ph.spec.orientation.value,
                          "edge": ph.spec.edge})
        manifest = {"source": label, "seed": args.seed, "count": args.count, "cases": cases}
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    except OSError as exc:
        _err(f"[output] {exc}")
        return EXIT_ERROR
    print(out / "manifest.json")
    return EXIT_OK


# entry point --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pectoral",
                                     description="Pectoral muscle identification in MLO mammograms.")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _config_parent()

    seg = sub.add_parser("segment", parents=[common], help="segment one image")
    seg.add_argument("input", help="PGM or PNG grayscale image")
    seg.add_argument("-o", "--out", default="pectoral_out", help="output directory")
    seg.add_argument("--dump-stages", action="store_true", help="also write every intermediate stage")
    seg.set_defaults(func=cmd_segment)

    val = sub.add_parser("validate", parents=[common], help="run a suite or a directory")
    val.add_argument("source", nargs="?",
                     help="phantom directory, image directory, suite file or preset name "
                          "(default: the mixed preset)")
    val.add_argument("-o", "--report", default="report.json", help="JSON report path (CSV written alongside)")
    val.add_argument("--count", type=int, default=200, help="cases for a preset source")
    val.add_argument("--seed", type=int, default=0, help="seed for a preset source")
    val.add_argument("--jobs", type=int, default=1, help="worker processes")
    val.set_defaults(func=cmd_validate)

    ph = sub.add_parser("phantom", help="write synthetic phantoms with truth masks")
    src = ph.add_mutually_exclusive_group()
    src.add_argument("--preset", choices=PRESETS, default="mixed")
    src.add_argument("--spec", metavar="FILE", help="flat 'key = value' phantom spec")
    ph.add_argument("--count", type=int, default=10)
    ph.add_argument("--seed", type=int, default=0)
    ph.add_argument("--width", type=int)
    ph.add_argument("--height", type=int)
    ph.add_argument("-o", "--out", default="phantoms", help="output directory")
    ph.set_defaults(func=cmd_phantom)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "count", 0) < 0:
        _err("--count must be non-negative")
        return EXIT_ERROR
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
