"""Batch evaluation over phantom suites and image directories.

Each job names one image, either a file on disk or a phantom spec that is
rendered inside the worker, and optionally a ground-truth pectoral mask.
Jobs run in a process pool; the report is assembled after sorting records
by job path, so the output does not depend on scheduling.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .codecs import read_image, read_mask
from .errors import InvalidSpecError, StageError
from .phantom import ErrorClass, PhantomSpec, evaluate, generate_phantom, parse_key_values, preset_specs
from .pipeline import PipelineConfig, segment_pectoral

REPORT_SCHEMA = "pectoral-run-report/1"
IMAGE_SUFFIXES = (".pgm", ".pnm", ".png")
TALLY_KEYS = [c.value for c in ErrorClass] + ["Unlabeled", "Failed"]
CSV_FIELDS = ("path", "status", "orientation", "breast_threshold", "marker_threshold",
              "kapur_threshold", "area", "mean_intensity", "error_class", "dice",
              "boundary_mean_distance")


@dataclass(frozen=True)
class Job:
    """One unit of batch work.

    ``path`` is the record key and sort key.  Exactly one of ``image`` (a
    file to read) and ``spec`` (a phantom to render) is set; ``truth`` is
    an optional mask file for on-disk images.
    """

    path: str
    image: str | None = None
    truth: str | None = None
    spec: PhantomSpec | None = None


# Job discovery ----------------------------------------------------------------

def jobs_from_preset(preset: str, count: int, seed: int = 0, **kw) -> list[Job]:
    specs = preset_specs(preset, count, seed, **kw)
    width = max(4, len(str(max(count - 1, 0))))
    return [Job(f"phantom:{preset}:{i:0{width}d}", spec=s) for i, s in enumerate(specs)]


def jobs_from_suite_file(path) -> list[Job]:
    """Suite spec: flat ``key = value`` text with ``preset``, ``count``,
    ``seed`` and optionally ``width``, ``height`` and ``noise_fraction``."""
    values = parse_key_values(Path(path).read_text())
    unknown = set(values) - {"preset", "count", "seed", "width", "height", "noise_fraction"}
    if unknown:
        raise InvalidSpecError(f"unknown suite keys: {', '.join(sorted(unknown))}")
    if "preset" not in values:
        raise InvalidSpecError("suite spec needs a 'preset' key")
    try:
        count = int(values.get("count", 200))
        seed = int(values.get("seed", 0))
        kw = {k: int(values[k]) for k in ("width", "height") if k in values}
        if "noise_fraction" in values:
            kw["noise_fraction"] = float(values["noise_fraction"])
    except ValueError as exc:
        raise InvalidSpecError(f"bad suite value: {exc}") from exc
    if count < 0:
        raise InvalidSpecError("count must be non-negative")
    return jobs_from_preset(values["preset"], count, seed, **kw)


def jobs_from_directory(root) -> list[Job]:
    """A phantom directory (with ``manifest.json``) gives labeled jobs;
    any other directory gives one unlabeled job per image file."""
    root = Path(root)
    manifest = root / "manifest.json"
    if manifest.is_file():
        data = json.loads(manifest.read_text())
        return [Job(case["image"], image=str(root / case["image"]),
                    truth=str(root / case["truth"]) if case.get("truth") else None)
                for case in data.get("cases", [])]
    files = sorted(p.name for p in root.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)
    return [Job(name, image=str(root / name)) for name in files]


# Execution --------------------------------------------------------------------

def _num(x, digits=6):
    if x is None:
        return None
    x = float(x)
    if not math.isfinite(x):
        return None
    return round(x, digits)


def run_job(job: Job, cfg: PipelineConfig, timing: bool = True) -> dict:
    """Segment and, when truth is available, evaluate one job.  Never raises."""
    record = {"path": job.path, "status": "failed", "error": None, "orientation": None,
              "thresholds": None, "area": None, "mean_intensity": None, "evaluation": None}
    if timing:
        record["timings"] = None
    try:
        if job.spec is not None:
            phantom = generate_phantom(job.spec)
            img, truth = phantom.image, phantom.truth_pectoral
        else:
            img = read_image(job.image)
            truth = read_mask(job.truth) if job.truth else None
        result = segment_pectoral(img, cfg)
    except StageError as exc:
        record["error"] = str(exc)
        return record
    except Exception as exc:
        record["error"] = f"[input] {type(exc).__name__}: {exc}"
        return record

    record["status"] = "ok" if result.found else "no-pectoral"
    record["orientation"] = result.orientation.value
    record["thresholds"] = dict(result.thresholds)
    if result.stats is not None:
        record["area"] = result.stats.area
        record["mean_intensity"] = _num(result.stats.mean_intensity)
    if truth is not None:
        try:
            ev = evaluate(result.pectoral, truth, result.orientation)
        except ValueError as exc:
            record["status"] = "failed"
            record["error"] = f"[evaluate] {exc}"
            return record
        record["evaluation"] = {
            "error_class": ev.error_class.value,
            "dice": _num(ev.dice),
            "boundary_mean_distance": _num(ev.boundary_mean_distance),
            "over_fraction": _num(ev.over_fraction),
            "under_fraction": _num(ev.under_fraction),
        }
    if timing:
        record["timings"] = {k: _num(v) for k, v in result.timings.items()}
    return record


def _run_job_args(args):
    return run_job(*args)


def run_jobs(jobs: list[Job], cfg: PipelineConfig, workers: int = 1, timing: bool = True) -> list[dict]:
    jobs = sorted(jobs, key=lambda j: j.path)
    args = [(j, cfg, timing) for j in jobs]
    if workers <= 1 or len(jobs) <= 1:
        return [run_job(*a) for a in args]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(_run_job_args, args, chunksize=max(1, len(jobs) // (4 * workers))))


def aggregate(records: list[dict]) -> dict:
    tallies = dict.fromkeys(TALLY_KEYS, 0)
    dices = []
    for r in records:
        if r["status"] == "failed":
            tallies["Failed"] += 1
        elif r["evaluation"] is None:
            tallies["Unlabeled"] += 1
        else:
            cls = r["evaluation"]["error_class"]
            tallies[cls] += 1
            if cls == ErrorClass.CORRECT.value:
                dices.append(r["evaluation"]["dice"])
    labeled = len(records) - tallies["Unlabeled"]
    correct = tallies[ErrorClass.CORRECT.value]
    return {
        "count": len(records),
        "failed": tallies["Failed"],
        "labeled": labeled,
        "tallies": tallies,
        "correct_fraction": _num(correct / labeled) if labeled else None,
        "error_rate": _num((labeled - correct) / labeled) if labeled else None,
        "mean_dice_correct": _num(sum(dices) / len(dices)) if dices else None,
    }


def build_report(records: list[dict], cfg: PipelineConfig, source: str) -> dict:
    return {
        "schema": REPORT_SCHEMA,
        "source": source,
        "config": cfg.to_dict(),
        "aggregate": aggregate(records),
        "records": records,
    }


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, allow_nan=False) + "\n"


def report_csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for r in report["records"]:
        th = r["thresholds"] or {}
        ev = r["evaluation"] or {}
        row = [r["path"], r["status"], r["orientation"], th.get("breast"), th.get("marker"),
               th.get("kapur"), r["area"], r["mean_intensity"], ev.get("error_class"),
               ev.get("dice"), ev.get("boundary_mean_distance")]
        writer.writerow(["" if v is None else v for v in row])
    return buf.getvalue()


def write_report(report: dict, path) -> tuple[Path, Path]:
    """Write the JSON report and a CSV summary next to it."""
    path = Path(path)
    if path.parent and not path.parent.exists():
        os.makedirs(path.parent, exist_ok=True)
    csv_path = path.with_suffix(".csv")
    path.write_text(report_json(report))
    csv_path.write_text(report_csv(report))
    return path, csv_path
