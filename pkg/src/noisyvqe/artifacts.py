"""CSV/JSON artifact round-trips for runs, sweeps, and traces."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .experiment import SweepResult, SweepRow
from .optimize import OptimizationTrace, TraceRecord


def write_sweep_csv(path, result: SweepResult) -> None:
    rows = result.rows
    n_params = rows[0].final_params.size if rows else 0
    header = ["intensity", "repetition", "final_energy", "best_energy"]
    header += [f"params_{j}" for j in range(n_params)]
    header += ["seed"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow(
                [repr(r.intensity), r.repetition, repr(r.final_energy), repr(r.best_energy)]
                + [repr(float(v)) for v in r.final_params]
                + [r.seed]
            )


def read_sweep_csv(path) -> list:
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        param_cols = [c for c in reader.fieldnames if c.startswith("params_")]
        param_cols.sort(key=lambda c: int(c.split("_")[1]))
        for rec in reader:
            out.append(
                SweepRow(
                    intensity=float(rec["intensity"]),
                    repetition=int(rec["repetition"]),
                    final_energy=float(rec["final_energy"]),
                    best_energy=float(rec["best_energy"]),
                    final_params=np.array([float(rec[c]) for c in param_cols]),
                    seed=int(rec["seed"]),
                )
            )
    return out


def write_trace_csv(path, trace: OptimizationTrace) -> None:
    n_params = trace.records[0].params.size
    header = ["iteration", "cumulative_evals", "stage", "energy"]
    header += [f"params_{j}" for j in range(n_params)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in trace.records:
            w.writerow(
                [r.iteration, r.cumulative_evals, r.stage, repr(r.energy)]
                + [repr(float(v)) for v in r.params]
            )


def read_trace_csv(path) -> OptimizationTrace:
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        param_cols = [c for c in reader.fieldnames if c.startswith("params_")]
        param_cols.sort(key=lambda c: int(c.split("_")[1]))
        for rec in reader:
            records.append(
                TraceRecord(
                    iteration=int(rec["iteration"]),
                    params=np.array([float(rec[c]) for c in param_cols]),
                    energy=float(rec["energy"]),
                    cumulative_evals=int(rec["cumulative_evals"]),
                    stage=int(rec["stage"]),
                )
            )
    return OptimizationTrace.from_records(records, "MAX_ITER")


def write_recalc_csv(path, trace: OptimizationTrace, recalculated) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "noisy_energy", "recalc_energy"])
        for rec, (it, e) in zip(trace.records, recalculated):
            w.writerow([it, repr(rec.energy), repr(e)])


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())


def sweep_summary(result: SweepResult) -> dict:
    cfg = result.config
    return {
        "ansatz": cfg.ansatz_kind,
        "optimizer": cfg.optimizer,
        "noise_axis": cfg.noise_axis,
        "repetitions": cfg.repetitions,
        "shots": cfg.shots,
        "init_mode": cfg.init_mode,
        "intensities": list(cfg.intensities),
        "fixed_noise": cfg.fixed_noise.to_json_dict(),
        "stats": {
            repr(k): {
                "mean": v["mean"],
                "std": v["std"],
                "n": v["n"],
                "histogram": v["histogram"],
            }
            for k, v in result.stats.items()
        },
    }
