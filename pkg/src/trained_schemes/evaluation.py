"""Test-set error measurement, gain/speedup computation, and report emission.

Gain is the ratio of a standard scheme's mean test error to the trained
scheme's. Speedup compares the work (cells x time steps) a standard scheme
needs on a finer grid to match the trained scheme's coarse-grid error, found
either by direct refinement search or by power-law extrapolation from the
observed convergence order. CSV artifacts are fully deterministic; wall-clock
timings go to the JSON manifest only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import UnmatchedErrorError


def per_sample_errors(computed: np.ndarray, reference: np.ndarray, p: int,
                      scale: float) -> np.ndarray:
    """Per-sample discrete L^p errors: scale * sum over levels/nodes, per sample."""
    computed = np.asarray(computed, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if computed.shape != reference.shape:
        raise ValueError(f"shape mismatch {computed.shape} vs {reference.shape}")
    diff = np.abs(computed - reference) ** p
    return scale * diff.reshape(diff.shape[0], -1).sum(axis=1)


def test_error(computed: np.ndarray, reference: np.ndarray, p: int,
               scale: float) -> tuple[np.ndarray, float]:
    """(per-sample errors, mean) for stacked per-sample fields."""
    errs = per_sample_errors(computed, reference, p, scale)
    return errs, float(errs.mean())


def gain(std_mean: float, trained_mean: float) -> float:
    if trained_mean < 0 or std_mean < 0:
        raise ValueError("errors must be non-negative")
    if trained_mean == 0.0:
        return np.inf
    return std_mean / trained_mean


def observed_order(errors, resolutions) -> float:
    """Least-squares slope of log(error) against log(dx = 1/n)."""
    errors = np.asarray(errors, dtype=float)
    resolutions = np.asarray(resolutions, dtype=float)
    if errors.size < 3:
        raise ValueError("need at least 3 resolutions")
    if np.any(errors <= 0):
        raise ValueError("errors must be positive for a log fit")
    return float(np.polyfit(np.log(1.0 / resolutions), np.log(errors), 1)[0])


def speedup(trained_error: float, trained_work: float,
            std_by_resolution: dict[int, tuple[float, float]],
            method: str = "search", order: float | None = None,
            base_resolution: int | None = None) -> float:
    """Work ratio for the standard scheme to match the trained coarse error.

    std_by_resolution maps resolution -> (mean error, work). method="search"
    picks the smallest tested resolution whose error does not exceed the
    trained error (raising if none qualifies). method="extrapolate" solves
    the power law err(n) = err(n0) (n0/n)^order for the matching resolution
    n* and scales the work along the fitted work-vs-resolution power law.
    """
    if trained_error <= 0 or trained_work <= 0:
        raise ValueError("trained error and work must be positive")
    res_sorted = sorted(std_by_resolution)
    if method == "search":
        for n in res_sorted:
            err, work = std_by_resolution[n]
            if err <= trained_error:
                return work / trained_work
        raise UnmatchedErrorError(
            "no tested resolution matches the trained error; use extrapolation")
    if method != "extrapolate":
        raise ValueError(f"unknown speedup method '{method}'")
    if order is None or order <= 0:
        raise ValueError("extrapolation requires a positive observed order")
    n0 = base_resolution if base_resolution is not None else res_sorted[0]
    err0, _ = std_by_resolution[n0]
    n_star = n0 * (err0 / trained_error) ** (1.0 / order)
    works = np.array([std_by_resolution[n][1] for n in res_sorted])
    q = np.polyfit(np.log(res_sorted), np.log(works), 1)
    work_star = float(np.exp(np.polyval(q, np.log(n_star))))
    return work_star / trained_work


@dataclass
class Report:
    experiment_id: str
    seed: int
    config: dict = field(default_factory=dict)
    scheme_errors: dict = field(default_factory=dict)   # name -> mean error
    gains: dict = field(default_factory=dict)           # name -> gain
    metrics: dict = field(default_factory=dict)         # scalar extras
    params: dict = field(default_factory=dict)          # label -> trained value
    per_sample: dict = field(default_factory=dict)      # name -> list of errors
    timings: dict = field(default_factory=dict)         # seconds; manifest only


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def report_csv(report: Report) -> str:
    """Deterministic CSV: one `kind,name,value` row per metric."""
    lines = ["kind,name,value"]
    for name, v in report.scheme_errors.items():
        lines.append(f"error,{name},{_fmt(v)}")
    for name, v in report.gains.items():
        lines.append(f"gain,{name},{_fmt(v)}")
    for name, v in report.metrics.items():
        lines.append(f"metric,{name},{_fmt(v)}")
    for name, v in report.params.items():
        lines.append(f"param,{name},{_fmt(v)}")
    return "\n".join(lines) + "\n"


def emit_report(report: Report, out_dir: str | Path) -> list[Path]:
    """Write report.csv and manifest.json; returns the written paths."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{report.experiment_id}_report.csv"
        csv_path.write_text(report_csv(report), encoding="utf-8", newline="\n")
        manifest = {
            "experiment": report.experiment_id,
            "seed": report.seed,
            "version": _package_version(),
            "config": report.config,
            "scheme_errors": report.scheme_errors,
            "gains": report.gains,
            "metrics": report.metrics,
            "params": report.params,
            "per_sample_errors": {k: list(map(float, v))
                                  for k, v in report.per_sample.items()},
            "timings_seconds": report.timings,
        }
        man_path = out / f"{report.experiment_id}_manifest.json"
        man_path.write_text(json.dumps(manifest, sort_keys=True, indent=1,
                                       default=_json_scalar),
                            encoding="utf-8", newline="\n")
    except OSError as exc:
        raise OSError(f"failed writing report under {out}: {exc}") from exc
    return [csv_path, man_path]


def write_table_csv(path: Path, header: list[str], rows: list[list]) -> None:
    """Small deterministic CSV writer for figure data."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _json_scalar(obj):
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON-serializable: {type(obj)}")


def _package_version() -> str:
    from . import __version__
    return __version__
