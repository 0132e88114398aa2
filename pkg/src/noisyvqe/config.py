"""Run configuration: strict TOML/JSON parsing, validation, and hashing."""
from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .experiment import NOISE_AXES, OPTIMIZERS
from .noise import NoiseModel

RUN_KINDS = (
    "EXACT_SPECTRUM",
    "VQE",
    "OPTIMIZER_BAKEOFF",
    "SWEEP",
    "RECALC",
    "FIT",
    "SPLITTING",
)

ANSATZ_NAMES = ("RXYZ", "RY", "UCCSD")
BACKEND_NAMES = ("EXACT", "SHOTS", "NOISY")

# allowed keys per section; None marks sections validated separately
_SCHEMA = {
    "run": {"kind", "output_dir", "seed"},
    "ansatz": {"kind"},
    "optimizer": {"name", "params"},
    "backend": {"mode", "shots", "noise"},
    "vqe": {"theta0", "theta0_seed"},
    "bakeoff": {"optimizers", "repetitions", "theta0_seed"},
    "sweep": {
        "noise_axis",
        "intensities",
        "repetitions",
        "init_mode",
        "theta0",
        "keep_traces",
        "ground_basin_start",
    },
    "recalc": {"trace_csv"},
    "fit": {"sweep_csv", "model"},
    "splitting": {"sweep_csv", "intensity"},
}
_NOISE_KEYS = {"p_readout", "p_dep1", "p_dep2", "p_amp", "p_phase", "epsilon"}

_REQUIRED_SECTIONS = {
    "EXACT_SPECTRUM": (),
    "VQE": ("ansatz", "optimizer", "backend", "vqe"),
    "OPTIMIZER_BAKEOFF": ("ansatz", "backend", "bakeoff"),
    "SWEEP": ("ansatz", "optimizer", "backend", "sweep"),
    "RECALC": ("ansatz",),
    "FIT": ("fit",),
    "SPLITTING": ("splitting",),
}


class ConfigError(Exception):
    """Invalid configuration; ``line`` anchors the diagnostic when known."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


def _find_line(source: str, key: str) -> int | None:
    for lineno, text in enumerate(source.splitlines(), start=1):
        stripped = text.split("#", 1)[0]
        if key in stripped:
            return lineno
    return None


@dataclass
class RunConfig:
    kind: str
    output_dir: str
    seed: int
    raw: dict = field(default_factory=dict)
    source_path: str = ""

    def section(self, name: str, default=None):
        return self.raw.get(name, default)

    def config_hash(self) -> str:
        canonical = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def _check_unknown_keys(raw: dict, source: str) -> None:
    unknown_sections = set(raw) - set(_SCHEMA)
    if unknown_sections:
        key = sorted(unknown_sections)[0]
        raise ConfigError(f"unknown section [{key}]", _find_line(source, key))
    for section, allowed in _SCHEMA.items():
        body = raw.get(section)
        if body is None:
            continue
        if not isinstance(body, dict):
            raise ConfigError(f"section [{section}] must be a table", _find_line(source, section))
        extra = set(body) - allowed
        if extra:
            key = sorted(extra)[0]
            raise ConfigError(f"unknown key {key!r} in [{section}]", _find_line(source, key))
    noise = (raw.get("backend") or {}).get("noise")
    if noise is not None:
        extra = set(noise) - _NOISE_KEYS
        if extra:
            key = sorted(extra)[0]
            raise ConfigError(f"unknown key {key!r} in [backend.noise]", _find_line(source, key))
    params = (raw.get("optimizer") or {}).get("params")
    if params is not None:
        name = (raw.get("optimizer") or {}).get("name", "")
        if name in OPTIMIZERS:
            cfg_cls = OPTIMIZERS[name][0]
            allowed = set(cfg_cls.__dataclass_fields__)
            extra = set(params) - allowed
            if extra:
                key = sorted(extra)[0]
                raise ConfigError(
                    f"unknown key {key!r} in [optimizer.params] for {name}", _find_line(source, key)
                )


def _validate_values(raw: dict, source: str) -> None:
    run = raw.get("run") or {}
    kind = run.get("kind")
    if kind not in RUN_KINDS:
        raise ConfigError(f"run.kind must be one of {RUN_KINDS}, got {kind!r}", _find_line(source, "kind"))
    for sec in _REQUIRED_SECTIONS[kind]:
        if sec not in raw:
            raise ConfigError(f"run kind {kind} requires a [{sec}] section")
    ansatz = raw.get("ansatz")
    if ansatz is not None and ansatz.get("kind") not in ANSATZ_NAMES:
        raise ConfigError(
            f"ansatz.kind must be one of {ANSATZ_NAMES}", _find_line(source, "kind")
        )
    backend = raw.get("backend")
    if backend is not None:
        if backend.get("mode") not in BACKEND_NAMES:
            raise ConfigError(
                f"backend.mode must be one of {BACKEND_NAMES}", _find_line(source, "mode")
            )
        noise = backend.get("noise")
        if noise is not None:
            try:
                NoiseModel.from_json_dict(noise)
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"bad [backend.noise]: {exc}") from exc
    opt = raw.get("optimizer")
    if opt is not None and opt.get("name") not in OPTIMIZERS:
        raise ConfigError(
            f"optimizer.name must be one of {tuple(OPTIMIZERS)}", _find_line(source, "name")
        )
    sweep = raw.get("sweep")
    if sweep is not None:
        axis = sweep.get("noise_axis", "READOUT")
        if axis not in NOISE_AXES:
            raise ConfigError(
                f"sweep.noise_axis must be one of {NOISE_AXES}", _find_line(source, "noise_axis")
            )
    fit = raw.get("fit")
    if fit is not None and fit.get("model", "BOTH") not in ("LINEAR", "ERF", "BOTH"):
        raise ConfigError("fit.model must be LINEAR, ERF, or BOTH", _find_line(source, "model"))


def load_config(path) -> RunConfig:
    """Parse and validate a TOML (or JSON) run configuration."""
    path = Path(path)
    source = path.read_text()
    if path.suffix == ".json":
        try:
            raw = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"JSON parse error: {exc}", exc.lineno) from exc
    else:
        try:
            raw = tomllib.loads(source)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"TOML parse error: {exc}") from exc
    if not isinstance(raw, dict) or "run" not in raw:
        raise ConfigError("config must contain a [run] section")
    _check_unknown_keys(raw, source)
    _validate_values(raw, source)
    run = raw["run"]
    return RunConfig(
        kind=run["kind"],
        output_dir=run.get("output_dir", "runs/out"),
        seed=int(run.get("seed", 0)),
        raw=raw,
        source_path=str(path),
    )
