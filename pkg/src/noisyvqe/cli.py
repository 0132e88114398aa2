"""Command-line front end: ``noisyvqe run`` executes a configured experiment
and persists CSV/JSON artifacts; ``noisyvqe report`` renders figures and
tables from a finished run directory.

Exit codes: 0 success, 1 runtime failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .ansatz import build_ansatz
from .artifacts import (
    read_sweep_csv,
    read_trace_csv,
    sweep_summary,
    write_json,
    write_recalc_csv,
    write_sweep_csv,
    write_trace_csv,
)
from .config import ConfigError, RunConfig, load_config
from .estimator import BackendConfig
from .experiment import (
    OPTIMIZERS,
    SweepConfig,
    detect_level_splitting,
    find_ground_basin_start,
    fit_noise_curve,
    recalculate_trace,
    run_noise_sweep,
    run_vqe,
)
from .hamiltonian import exact_spectrum, h2_hamiltonian
from .noise import NoiseModel
from .util import hash64


def _metadata(cfg: RunConfig, extra: dict | None = None) -> dict:
    meta = {
        "config_hash": cfg.config_hash(),
        "config_path": cfg.source_path,
        "kind": cfg.kind,
        "seed": cfg.seed,
        "versions": {
            "noisyvqe": __version__,
            "numpy": np.__version__,
            "python": sys.version.split()[0],
        },
    }
    if extra:
        meta.update(extra)
    return meta


def _backend_from(cfg: RunConfig, seed: int, default_mode: str = "EXACT") -> BackendConfig:
    section = cfg.section("backend") or {}
    mode = section.get("mode", default_mode)
    noise = None
    if mode == "NOISY":
        noise = NoiseModel.from_json_dict(section.get("noise", {}))
    return BackendConfig(mode, shots=int(section.get("shots", 1024)), noise=noise, rng_seed=seed)


def _optimizer_from(cfg: RunConfig, seed: int):
    section = cfg.section("optimizer") or {"name": "nft"}
    name = section.get("name", "nft")
    cfg_cls, _ = OPTIMIZERS[name]
    params = dict(section.get("params", {}))
    if name == "spsa_reopt":
        from .optimize import SpsaConfig

        for stage in ("coarse", "fine"):
            if stage in params:
                params[stage] = SpsaConfig(**params[stage])
    if "seed" in cfg_cls.__dataclass_fields__:
        params.setdefault("seed", seed)
    return name, cfg_cls(**params)


def _theta0_from(section: dict, n_params: int, seed: int) -> np.ndarray:
    if section.get("theta0") is not None:
        theta0 = np.asarray(section["theta0"], dtype=float)
        if theta0.shape != (n_params,):
            raise ValueError(f"theta0 must have {n_params} entries")
        return theta0
    rng = np.random.default_rng(hash64(seed, int(section.get("theta0_seed", 0))))
    return rng.uniform(-np.pi, np.pi, n_params)


def _cmd_exact_spectrum(cfg: RunConfig, out: Path, args) -> None:
    h = h2_hamiltonian()
    spectrum = exact_spectrum(h)
    write_json(
        out / "summary.json",
        {
            "ground_energy": float(spectrum[0]),
            "spectrum": [float(v) for v in spectrum],
            "hamiltonian": h.to_json_dict(),
        },
    )
    write_json(out / "metadata.json", _metadata(cfg))


def _cmd_vqe(cfg: RunConfig, out: Path, args, also_recalc: bool = False) -> None:
    ansatz = cfg.section("ansatz")["kind"]
    name, opt_cfg = _optimizer_from(cfg, cfg.seed)
    backend = _backend_from(cfg, cfg.seed, default_mode="EXACT")
    circuit = build_ansatz(ansatz)
    theta0 = _theta0_from(cfg.section("vqe") or {}, circuit.n_params, cfg.seed)
    trace = run_vqe(ansatz, name, opt_cfg, backend, theta0)
    write_trace_csv(out / "trace.csv", trace)
    summary = {
        "ansatz": ansatz,
        "optimizer": name,
        "final_energy": trace.final_energy,
        "best_energy": trace.best_energy,
        "final_params": [float(v) for v in trace.final_params],
        "best_params": [float(v) for v in trace.best_params],
        "terminated_by": trace.terminated_by,
        "evaluations": trace.total_evals,
    }
    if also_recalc:
        recalc = recalculate_trace(trace, ansatz)
        write_recalc_csv(out / "recalc.csv", trace, recalc)
        summary["final_recalc_energy"] = recalc[-1][1]
    write_json(out / "summary.json", summary)
    if args.dump_circuit:
        (out / "circuit.json").write_text(circuit.to_json() + "\n")
    if args.verbose:
        per_term = trace.metadata.get("gate_counts", {})
        print(f"gate counts: {per_term}")
    write_json(out / "metadata.json", _metadata(cfg, {"run": trace.metadata}))


def _cmd_recalc(cfg: RunConfig, out: Path, args) -> None:
    section = cfg.section("recalc") or {}
    ansatz = cfg.section("ansatz")["kind"]
    if section.get("trace_csv"):
        trace = read_trace_csv(section["trace_csv"])
        recalc = recalculate_trace(trace, ansatz)
        write_recalc_csv(out / "recalc.csv", trace, recalc)
        write_trace_csv(out / "trace.csv", trace)
        write_json(
            out / "summary.json",
            {
                "ansatz": ansatz,
                "source_trace": section["trace_csv"],
                "final_noisy_energy": trace.final_energy,
                "final_recalc_energy": recalc[-1][1],
            },
        )
        write_json(out / "metadata.json", _metadata(cfg))
    else:
        _cmd_vqe(cfg, out, args, also_recalc=True)


def _cmd_bakeoff(cfg: RunConfig, out: Path, args) -> None:
    ansatz = cfg.section("ansatz")["kind"]
    section = cfg.section("bakeoff")
    names = section.get("optimizers", list(OPTIMIZERS))
    reps = int(section.get("repetitions", 3))
    backend_base = _backend_from(cfg, cfg.seed, default_mode="EXACT")
    circuit = build_ansatz(ansatz)
    results = {}
    for name in names:
        cfg_cls, _ = OPTIMIZERS[name]
        finals = []
        for rep in range(reps):
            seed = hash64(cfg.seed, hash64(*[ord(c) for c in name]), rep)
            opt_cfg = cfg_cls()
            if "seed" in cfg_cls.__dataclass_fields__:
                opt_cfg = dataclasses.replace(opt_cfg, seed=seed)
            backend = dataclasses.replace(backend_base, rng_seed=seed)
            theta0 = np.random.default_rng(hash64(cfg.seed, 0x717, rep)).uniform(
                -np.pi, np.pi, circuit.n_params
            )
            trace = run_vqe(ansatz, name, opt_cfg, backend, theta0)
            write_trace_csv(out / f"trace_{name}_{rep}.csv", trace)
            finals.append(trace.best_energy)
        results[name] = {"best_energies": finals}
    write_json(
        out / "summary.json",
        {"ansatz": ansatz, "optimizers": list(names), "repetitions": reps, "results": results},
    )
    write_json(out / "metadata.json", _metadata(cfg))
    from .reports import render_bakeoff

    render_bakeoff(out, out)


def _cmd_sweep(cfg: RunConfig, out: Path, args) -> None:
    ansatz = cfg.section("ansatz")["kind"]
    name, opt_cfg = _optimizer_from(cfg, cfg.seed)
    section = cfg.section("sweep")
    backend_section = cfg.section("backend") or {}
    fixed_noise = NoiseModel.from_json_dict(backend_section.get("noise", {}))
    theta0 = section.get("theta0")
    if theta0 is None and section.get("ground_basin_start", False):
        theta0 = tuple(find_ground_basin_start(ansatz, name, opt_cfg, seed=cfg.seed))
    sweep_cfg = SweepConfig(
        ansatz_kind=ansatz,
        optimizer=name,
        optimizer_cfg=opt_cfg,
        noise_axis=section.get("noise_axis", "READOUT"),
        intensities=tuple(section.get("intensities", ())),
        fixed_noise=fixed_noise,
        repetitions=int(section.get("repetitions", 30)),
        shots=int(backend_section.get("shots", 1024)),
        seed_base=cfg.seed,
        init_mode=section.get("init_mode", "FIXED"),
        theta0=theta0,
    )
    keep = bool(section.get("keep_traces", False))
    result = run_noise_sweep(sweep_cfg, n_workers=args.workers, keep_traces=keep)
    write_sweep_csv(out / "sweep.csv", result)
    summary = sweep_summary(result)
    points = [
        (k, v["mean"], v["std"]) for k, v in result.stats.items()
    ]
    fits = {}
    if len(points) >= 3 and sweep_cfg.noise_axis != "SHOTS":
        lin = fit_noise_curve(points, "LINEAR")
        fits["LINEAR"] = {
            "coefficients": list(lin.coefficients),
            "rss": lin.residual_sum_squares,
            "r_squared": lin.r_squared,
        }
        if len(points) >= 4:
            try:
                erf_fit = fit_noise_curve(points, "ERF")
                fits["ERF"] = {
                    "coefficients": list(erf_fit.coefficients),
                    "rss": erf_fit.residual_sum_squares,
                    "r_squared": erf_fit.r_squared,
                }
            except RuntimeError:
                pass
    summary["fits"] = fits
    if theta0 is not None:
        summary["theta0"] = list(theta0)
    write_json(out / "summary.json", summary)
    if keep:
        traces_dir = out / "traces"
        traces_dir.mkdir(exist_ok=True)
        for i, row in enumerate(result.rows):
            if row.trace is not None:
                write_trace_csv(traces_dir / f"trace_{i:04d}.csv", row.trace)
    write_json(out / "metadata.json", _metadata(cfg, {"workers": args.workers}))


def _cmd_fit(cfg: RunConfig, out: Path, args) -> None:
    section = cfg.section("fit")
    src = Path(section["sweep_csv"])
    if src.is_dir():
        src = src / "sweep.csv"
    rows = read_sweep_csv(src)
    grouped: dict = {}
    for r in rows:
        grouped.setdefault(r.intensity, []).append(r.final_energy)
    points = [
        (k, float(np.mean(v)), float(np.std(v, ddof=1)) if len(v) > 1 else 0.0)
        for k, v in sorted(grouped.items())
    ]
    model = section.get("model", "BOTH")
    wanted = ("LINEAR", "ERF") if model == "BOTH" else (model,)
    fits = {}
    for m in wanted:
        fit = fit_noise_curve(points, m)
        fits[m] = {
            "coefficients": list(fit.coefficients),
            "rss": fit.residual_sum_squares,
            "r_squared": fit.r_squared,
        }
    write_json(out / "summary.json", {"source": str(src), "points": points, "fits": fits})
    write_json(out / "metadata.json", _metadata(cfg))


def _cmd_splitting(cfg: RunConfig, out: Path, args) -> None:
    section = cfg.section("splitting")
    src = Path(section["sweep_csv"])
    if src.is_dir():
        src = src / "sweep.csv"
    rows = read_sweep_csv(src)
    intensity = section.get("intensity")
    if intensity is None:
        intensity = max(r.intensity for r in rows)
    rows = [r for r in rows if r.intensity == float(intensity)]
    result = detect_level_splitting(
        [r.final_energy for r in rows], [r.final_params for r in rows]
    )
    write_json(
        out / "summary.json",
        {
            "source": str(src),
            "intensity": float(intensity),
            "levels": result.levels,
            "centers": list(result.centers),
            "gap": result.gap,
            "param_period_check": result.param_period_check,
        },
    )
    write_json(out / "metadata.json", _metadata(cfg))


_HANDLERS = {
    "EXACT_SPECTRUM": _cmd_exact_spectrum,
    "VQE": _cmd_vqe,
    "OPTIMIZER_BAKEOFF": _cmd_bakeoff,
    "SWEEP": _cmd_sweep,
    "RECALC": _cmd_recalc,
    "FIT": _cmd_fit,
    "SPLITTING": _cmd_splitting,
}


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        anchor = f"{args.config}:{exc.line}: " if exc.line else f"{args.config}: "
        print(f"{anchor}{exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"config not readable: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg.seed = args.seed
    out = Path(args.output_dir or cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        _HANDLERS[cfg.kind](cfg, out, args)
    except Exception as exc:  # runtime failure of a validated config
        print(f"run failed: {exc}", file=sys.stderr)
        return 1
    print(f"wrote artifacts to {out}")
    return 0


def cmd_report(args) -> int:
    from .reports import REPORT_KINDS

    run_dir = Path(args.run_dir)

    def available(kind: str) -> bool:
        _, needs = REPORT_KINDS[kind]
        return (run_dir / needs).exists() or (
            kind == "trace" and (run_dir / "recalc.csv").exists()
        )

    if args.kinds:
        kinds = args.kinds.split(",")
        unknown = [k for k in kinds if k not in REPORT_KINDS]
        if unknown:
            print(f"unknown report kinds: {unknown}", file=sys.stderr)
            return 2
        missing = [f"{k}: requires {REPORT_KINDS[k][1]}" for k in kinds if not available(k)]
        if missing:
            print("missing artifacts:\n  " + "\n  ".join(missing), file=sys.stderr)
            return 1
    else:
        kinds = [k for k in REPORT_KINDS if available(k)]
        if not kinds:
            print(f"no renderable artifacts in {run_dir}", file=sys.stderr)
            return 1
    out_dir = Path(args.output_dir) if args.output_dir else run_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    try:
        for k in kinds:
            render, _ = REPORT_KINDS[k]
            written += render(run_dir, out_dir)
    except Exception as exc:
        print(f"report failed: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noisyvqe",
        description="Noisy VQE simulation studies for the H2 ground-state energy",
    )
    parser.add_argument("--version", action="version", version=f"noisyvqe {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a configured experiment")
    run.add_argument("--config", required=True, help="TOML or JSON run configuration")
    run.add_argument("--output-dir", default=None, help="override run.output_dir")
    run.add_argument("--seed", type=int, default=None, help="override run.seed")
    run.add_argument(
        "--workers",
        type=int,
        default=int(os.environ.get("NOISY_VQE_WORKERS", "1")),
        help="parallel workers for sweep cells (default from NOISY_VQE_WORKERS)",
    )
    run.add_argument("--dump-circuit", action="store_true", help="write circuit.json")
    run.add_argument("--verbose", action="store_true", help="print per-run diagnostics")
    run.set_defaults(func=cmd_run)

    report = sub.add_parser("report", help="render figures and tables for a run directory")
    report.add_argument("--run-dir", required=True)
    report.add_argument(
        "--kinds", default=None, help="comma-separated subset of heatmap,noise_curve,trace,histogram"
    )
    report.add_argument("--output-dir", default=None, help="where to put figures (default run dir)")
    report.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
