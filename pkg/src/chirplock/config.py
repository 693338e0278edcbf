"""Run configuration and reproducible CSV artifacts.

A run is described by a small INI-style file with four sections::

    [system]    any SystemParams field, e.g. detuning = 0.59
    [pulse]     f_start, f_stop, duration, amplitude, envelope, ramp
    [sweep]     parameter = detuning | amplitude; start; stop; steps
    [run]       engine, n_runs, seed0, init_qubit, output

Exactly one sweep axis per run. Every value is validated before any compute
starts, and validation failures carry the dotted field path.

Output CSV files begin with "#"-prefixed metadata lines that echo the full
configuration plus per-command results. The header contains nothing
environment-dependent (no timestamps, no worker counts), so a re-run with
the same config and seeds is byte-identical, and `read_csv` can rebuild the
RunConfig that produced any file.
"""

from __future__ import annotations

import configparser
import dataclasses
import io
import os

import numpy as np

from .errors import ChirplockError, ConfigError
from .model import SystemParams
from .quantum import ChirpPulse

SWEEP_PARAMETERS = ("detuning", "amplitude")
ENGINES = ("semiclassical", "quantum")

_SYSTEM_FIELDS = {f.name: f for f in dataclasses.fields(SystemParams)}
_PULSE_FIELDS = {f.name: f for f in dataclasses.fields(ChirpPulse)}
_INT_SYSTEM_KEYS = {"n_levels", "n_photons"}
_RUN_KEYS = ("engine", "n_runs", "seed0", "init_qubit", "output")


@dataclasses.dataclass(frozen=True)
class Sweep:
    """One linear sweep axis."""

    parameter: str
    start: float
    stop: float
    steps: int

    def __post_init__(self):
        if self.parameter not in SWEEP_PARAMETERS:
            raise ConfigError(
                f"sweep.parameter: {self.parameter!r} is not one of "
                f"{SWEEP_PARAMETERS}"
            )
        if self.steps < 1:
            raise ConfigError(f"sweep.steps: need at least 1, got {self.steps}")

    def grid(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.steps)


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Validated description of one command invocation."""

    system: SystemParams
    pulse: ChirpPulse | None
    sweep: Sweep
    engine: str = "semiclassical"
    n_runs: int = 400
    seed0: int = 0
    init_qubit: int = 0
    output: str = "."

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise ConfigError(f"run.engine: {self.engine!r} is not one of {ENGINES}")
        if self.n_runs < 1:
            raise ConfigError(f"run.n_runs: need at least 1, got {self.n_runs}")
        if self.seed0 < 0:
            raise ConfigError(f"run.seed0: must be non-negative, got {self.seed0}")
        if self.init_qubit not in (0, 1):
            raise ConfigError(f"run.init_qubit: must be 0 or 1, got {self.init_qubit}")

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)


def _convert(section: str, key: str, raw: str, typ):
    try:
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key}: cannot parse {raw!r} as {typ.__name__}")
    return raw


def _build_system(items: dict[str, str]) -> SystemParams:
    kwargs = {}
    for key, raw in items.items():
        if key not in _SYSTEM_FIELDS:
            raise ConfigError(f"system.{key}: unknown parameter")
        if key in _INT_SYSTEM_KEYS:
            kwargs[key] = _convert("system", key, raw, int)
        elif key == "kappa" and raw.lower() == "none":
            kwargs[key] = None
        else:
            kwargs[key] = _convert("system", key, raw, float)
    try:
        return SystemParams(**kwargs)
    except ChirplockError as exc:
        raise ConfigError(f"system: {exc}")


def _build_pulse(items: dict[str, str]) -> ChirpPulse:
    kwargs = {}
    for key, raw in items.items():
        if key not in _PULSE_FIELDS:
            raise ConfigError(f"pulse.{key}: unknown parameter")
        if key == "envelope":
            kwargs[key] = raw
        else:
            kwargs[key] = _convert("pulse", key, raw, float)
    try:
        return ChirpPulse(**kwargs)
    except ChirplockError as exc:
        raise ConfigError(f"pulse: {exc}")


def _build_sweep(items: dict[str, str]) -> Sweep:
    missing = {"parameter", "start", "stop", "steps"} - set(items)
    if missing:
        raise ConfigError(f"sweep: missing {', '.join(sorted(missing))}")
    extra = set(items) - {"parameter", "start", "stop", "steps"}
    if extra:
        raise ConfigError(f"sweep.{sorted(extra)[0]}: unknown key")
    return Sweep(
        parameter=items["parameter"],
        start=_convert("sweep", "start", items["start"], float),
        stop=_convert("sweep", "stop", items["stop"], float),
        steps=_convert("sweep", "steps", items["steps"], int),
    )


def parse_config(text: str) -> RunConfig:
    """Parse and validate config text; raises ConfigError with field paths."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax: {exc}")

    known = {"system", "pulse", "sweep", "run"}
    for section in cp.sections():
        if section not in known:
            raise ConfigError(f"{section}: unknown section")
    if "sweep" not in cp:
        raise ConfigError("sweep: section is required (exactly one sweep axis)")

    system = _build_system(dict(cp["system"])) if "system" in cp else SystemParams()
    pulse = _build_pulse(dict(cp["pulse"])) if "pulse" in cp else None
    sweep = _build_sweep(dict(cp["sweep"]))

    run_kwargs: dict = {}
    if "run" in cp:
        for key, raw in cp["run"].items():
            if key not in _RUN_KEYS:
                raise ConfigError(f"run.{key}: unknown key")
            if key in ("n_runs", "seed0", "init_qubit"):
                run_kwargs[key] = _convert("run", key, raw, int)
            else:
                run_kwargs[key] = raw
    return RunConfig(system=system, pulse=pulse, sweep=sweep, **run_kwargs)


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    return parse_config(text)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def config_pairs(cfg: RunConfig) -> list[tuple[str, str]]:
    """Canonical (dotted key, value) pairs; the CSV header source of truth."""
    pairs: list[tuple[str, str]] = []
    for f in dataclasses.fields(SystemParams):
        pairs.append((f"system.{f.name}", _fmt(getattr(cfg.system, f.name))))
    if cfg.pulse is not None:
        for f in dataclasses.fields(ChirpPulse):
            pairs.append((f"pulse.{f.name}", _fmt(getattr(cfg.pulse, f.name))))
    for f in dataclasses.fields(Sweep):
        pairs.append((f"sweep.{f.name}", _fmt(getattr(cfg.sweep, f.name))))
    pairs.append(("run.engine", cfg.engine))
    pairs.append(("run.n_runs", str(cfg.n_runs)))
    pairs.append(("run.seed0", str(cfg.seed0)))
    pairs.append(("run.init_qubit", str(cfg.init_qubit)))
    pairs.append(("run.output", cfg.output))
    return pairs


def config_from_pairs(pairs: dict[str, str]) -> RunConfig:
    """Rebuild a RunConfig from parsed header pairs (inverse of config_pairs)."""
    sections: dict[str, dict[str, str]] = {}
    for dotted, value in pairs.items():
        section, _, key = dotted.partition(".")
        sections.setdefault(section, {})[key] = value
    buf = io.StringIO()
    for name in ("system", "pulse", "sweep", "run"):
        if name not in sections:
            continue
        buf.write(f"[{name}]\n")
        for key, value in sections[name].items():
            buf.write(f"{key} = {value}\n")
    return parse_config(buf.getvalue())


def write_csv(
    path: str,
    command: str,
    columns: list[str],
    rows,
    cfg: RunConfig | None = None,
    meta: dict | None = None,
):
    """Write a CSV with a reproducible metadata header.

    Floats are rendered with repr (shortest exact round-trip), so identical
    inputs give identical bytes on any platform with IEEE doubles.
    """
    lines = ["# chirplock csv v1", f"# command = {command}"]
    if cfg is not None:
        for key, value in config_pairs(cfg):
            lines.append(f"# config.{key} = {value}")
    for key in sorted(meta or {}):
        lines.append(f"# meta.{key} = {_fmt((meta or {})[key])}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path: str):
    """Parse a chirplock CSV; returns (config or None, command, meta, columns, data).

    `data` is a dict column name -> float ndarray (NaN for non-numeric cells).
    """
    config_pairs_found: dict[str, str] = {}
    meta: dict[str, str] = {}
    command = ""
    columns: list[str] = []
    body: list[list[str]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                stripped = line[1:].strip()
                if "=" not in stripped:
                    continue
                key, _, value = stripped.partition("=")
                key, value = key.strip(), value.strip()
                if key == "command":
                    command = value
                elif key.startswith("config."):
                    config_pairs_found[key[len("config."):]] = value
                elif key.startswith("meta."):
                    meta[key[len("meta."):]] = value
            elif not columns:
                columns = line.split(",")
            elif line:
                body.append(line.split(","))
    cfg = config_from_pairs(config_pairs_found) if config_pairs_found else None

    def column(j):
        out = np.empty(len(body))
        for i, row in enumerate(body):
            try:
                out[i] = float(row[j])
            except (ValueError, IndexError):
                out[i] = np.nan
        return out

    data = {name: column(j) for j, name in enumerate(columns)}
    return cfg, command, meta, columns, data


def ensure_outdir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path
