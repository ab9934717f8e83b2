"""Run reports.

Everything that depends only on the configuration and the seed goes into
the main report files, which are byte-for-byte reproducible.  Wall-clock
measurements go into ``timing.json`` alone.
"""
from __future__ import annotations

import csv
import json
import math
import platform
from importlib import metadata
from pathlib import Path

import numpy as np

from .degree import DegreeResult
from .falsify import FalsificationResult


def fmt(x) -> str:
    """12 significant digits; ``inf``, ``-inf`` and ``nan`` spelled out."""
    if x is None:
        return ""
    return format(float(x), ".12g")


def jnum(x):
    """JSON-safe number: non-finite values become strings."""
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else fmt(x)


def versions() -> dict:
    out = {"python": platform.python_version(), "numpy": np.__version__}
    for pkg in ("artifact", "jsonschema"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = "unknown"
    return out


def write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def write_manifest(out: Path, cfg: dict, cfg_hash: str, command: str) -> None:
    write_json(out / "manifest.json", {
        "command": command,
        "config": cfg,
        "config_sha256": cfg_hash,
        "seed": cfg["seed"],
        "versions": versions(),
    })


def theta_dict(result: FalsificationResult, theta) -> dict:
    if theta is None:
        return {}
    h0, u = result.space.decode(theta)
    d = {"theta": [jnum(v) for v in theta], "h0": [jnum(v) for v in h0]}
    if u is not None:
        d["control_times"] = [jnum(v) for v in u.times]
        d["control_values"] = [[jnum(v) for v in row] for row in u.values]
    return d


def write_falsification(out: Path, result: FalsificationResult, prefix: str = "falsify") -> None:
    out.mkdir(parents=True, exist_ok=True)
    n = len(result.history[0].theta) if result.history else 0
    with open(out / f"{prefix}_tests.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["test", *[f"theta{i + 1}" for i in range(n)],
                    "robustness", "violated", "accepted", "error"])
        for r in result.history:
            w.writerow([r.index, *[repr(v) for v in r.theta],
                        "" if r.robustness is None else repr(r.robustness),
                        int(r.violated), int(r.accepted), r.error or ""])
    summary = {
        "falsified": result.falsified,
        "best_robustness": jnum(result.best_robustness),
        "tests_run": result.tests_run,
        "errors": result.errors,
        "rng_seed": result.rng_seed,
        "witness": theta_dict(result, result.best_theta),
    }
    write_json(out / f"{prefix}_summary.json", summary)


def falsification_timing(result: FalsificationResult) -> dict:
    return {
        "wall_time": result.wall_time,
        "per_test": [r.elapsed for r in result.history],
    }


def write_degree(out: Path, result: DegreeResult, bracket_log=()) -> None:
    out.mkdir(parents=True, exist_ok=True)
    name = result.parameter
    with open(out / "degree_iterations.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["stage", "step", name, "robustness", "falsified", "tests"])
        for i, p in enumerate(bracket_log):
            w.writerow(["bracket", i + 1, repr(p.value), repr(p.robustness), int(p.falsified), p.tests])
        for i, p in enumerate(result.log):
            w.writerow(["bisect", i + 1, repr(p.value), repr(p.robustness), int(p.falsified), p.tests])
    lo, hi = result.interval
    fixed = "tau" if name == "eps" else "eps"
    summary = {
        "parameter": name,
        fixed: result.fixed,
        "lower": jnum(lo),
        "upper": jnum(hi),
        "lower_exact": str(result.lower),
        "upper_exact": str(result.upper),
        "width_exact": str(result.width),
        "iterations": result.iterations,
        "witness_theta": result.witness,
    }
    write_json(out / "degree_summary.json", summary)
    with open(out / "degree_summary.txt", "w", encoding="utf-8") as fh:
        fh.write(f"{fixed} = {fmt(result.fixed)}\n")
        fh.write(f"{name} in [{fmt(lo)}, {fmt(hi)}] after {result.iterations} bisection steps\n")
        fh.write(f"width = {fmt(float(result.width))} (exact {result.width})\n")
        if result.witness is not None:
            fh.write(f"non-conformance witness at {name} = {fmt(lo)}: theta = "
                     f"[{', '.join(fmt(v) for v in result.witness)}]\n")
        else:
            fh.write("no probe found a violation; the lower end is the initial one\n")


def degree_timing(result: DegreeResult, bracket_log=()) -> dict:
    return {
        "bracket": [p.time for p in bracket_log],
        "bisect": [p.time for p in result.log],
        "total": sum(p.time for p in bracket_log) + sum(p.time for p in result.log),
    }


BENCH_COLUMNS = ["mutant", "magnitude", "runs", "falsified", "avg_tests", "avg_tests_all",
                 "avg_robustness", "n_neg_inf", "n_pos_inf", "avg_time"]
# wall-clock averages stay out of the reproducible csv
CSV_COLUMNS = BENCH_COLUMNS[:-1]


def write_bench(out: Path, rows: list[dict]) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "bench_summary.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([r[c] if isinstance(r[c], (str, int)) else fmt(r[c]) for c in CSV_COLUMNS])


def bench_table(rows: list[dict]) -> str:
    """Fixed-width text rendering of the bench summary."""
    cells = [BENCH_COLUMNS] + [
        [r[c] if isinstance(r[c], str) else (str(r[c]) if isinstance(r[c], int) else fmt(r[c]))
         for c in BENCH_COLUMNS] for r in rows
    ]
    widths = [max(len(str(row[i])) for row in cells) for i in range(len(BENCH_COLUMNS))]
    return "\n".join("  ".join(str(v).rjust(wd) for v, wd in zip(row, widths)) for row in cells)
