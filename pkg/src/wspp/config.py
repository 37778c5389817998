"""Run configuration: ``key = value`` lines grouped under ``[section]`` headers.

Example::

    [system]
    rated_wind_power = 50
    ...
    [synthetic]
    seed = 7
    [scenarios]
    k_prices = 10
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .csvio import DataPaths
from .lp import OPT_TOL
from .market import SystemParams, ValidationError, validate
from .synth import SynthConfig


class ConfigError(ValidationError):
    pass


SYSTEM_KEYS = tuple(f.name for f in dataclasses.fields(SystemParams))
DATA_KEYS = tuple(f.name for f in dataclasses.fields(DataPaths))
SYNTH_KEYS = tuple(f.name for f in dataclasses.fields(SynthConfig))
SCENARIO_KEYS = ("k_prices", "k_reg", "wind_scenarios", "seed", "a_snapshot")
SOLVER_KEYS = ("method", "tol")
OUTPUT_KEYS = ("dir",)

SECTIONS = {
    "system": SYSTEM_KEYS,
    "data": DATA_KEYS,
    "synthetic": SYNTH_KEYS,
    "scenarios": SCENARIO_KEYS,
    "solver": SOLVER_KEYS,
    "output": OUTPUT_KEYS,
}


@dataclass(frozen=True)
class RunConfig:
    params: SystemParams
    data: Optional[DataPaths] = None
    synthetic: Optional[SynthConfig] = None
    k_prices: int = 10
    k_reg: int = 3
    wind_scenarios: int = 3
    seed: int = 0          # clustering seed
    a_snapshot: int = 1    # forecast snapshot Framework A decides on
    method: str = "auto"
    tol: float = OPT_TOL
    out_dir: Path = field(default=Path("out"))

    def __post_init__(self):
        if (self.data is None) == (self.synthetic is None):
            raise ConfigError("exactly one data source: give either [data] or [synthetic]")
        if self.k_prices < 1 or self.k_reg < 1:
            raise ConfigError("k_prices and k_reg must be at least 1")
        if self.wind_scenarios != 3:
            raise ConfigError("wind_scenarios must be 3 (p25/p50/p75)")
        if self.a_snapshot not in (1, 2, 3, 4):
            raise ConfigError("a_snapshot must be 1-4")
        if self.method not in ("auto", "simplex", "highs"):
            raise ConfigError(f"unknown solver method {self.method!r}")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


def _sections(text: str) -> dict:
    out: dict = {}
    current = None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"line {n}: malformed section header {raw.strip()!r}")
            current = line[1:-1].strip()
            if current not in SECTIONS:
                raise ConfigError(f"line {n}: unknown section [{current}]")
            if current in out:
                raise ConfigError(f"line {n}: section [{current}] repeated")
            out[current] = {}
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value")
        if current is None:
            raise ConfigError(f"line {n}: key outside any section")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in SECTIONS[current]:
            raise ConfigError(f"line {n}: unknown key {key!r} in [{current}]")
        if key in out[current]:
            raise ConfigError(f"line {n}: duplicate key {key!r}")
        out[current][key] = (n, value)
    return out


def _number(kind, n, key, value):
    try:
        return kind(value)
    except ValueError:
        raise ConfigError(f"line {n}: {key}={value!r} is not a valid {kind.__name__}") from None


def _synth(entries: dict) -> SynthConfig:
    types = {f.name: f.type for f in dataclasses.fields(SynthConfig)}
    kwargs = {}
    for key, (n, value) in entries.items():
        if key == "decay":
            kwargs[key] = tuple(_number(float, n, key, v.strip()) for v in value.split(","))
        elif types[key] in ("int", int):
            kwargs[key] = _number(int, n, key, value)
        else:
            kwargs[key] = _number(float, n, key, value)
    try:
        return SynthConfig(**kwargs)
    except ValidationError as exc:
        raise ConfigError(f"[synthetic]: {exc}") from None


def parse_config(text: str, base_dir=None, check_files: bool = True) -> RunConfig:
    """Parse and validate; relative data paths resolve against ``base_dir``."""
    sec = _sections(text)
    if "system" not in sec:
        raise ConfigError("missing [system] section")
    missing = [k for k in SYSTEM_KEYS if k not in sec["system"]]
    if missing:
        raise ConfigError(f"[system]: missing key {missing[0]}")
    params = SystemParams(**{k: _number(float, n, k, v) for k, (n, v) in sec["system"].items()})
    try:
        validate(params)
    except ValidationError as exc:
        raise ConfigError(f"[system]: {exc}") from None

    if ("data" in sec) == ("synthetic" in sec):
        raise ConfigError("exactly one data source: give either [data] or [synthetic]")
    data = synthetic = None
    if "data" in sec:
        missing = [k for k in DATA_KEYS if k not in sec["data"]]
        if missing:
            raise ConfigError(f"[data]: missing key {missing[0]}")
        base = Path(base_dir) if base_dir is not None else Path(".")
        resolved = {}
        for k in DATA_KEYS:
            n, value = sec["data"][k]
            p = Path(value)
            p = p if p.is_absolute() else base / p
            if check_files and not p.is_file():
                raise ConfigError(f"line {n}: {k} file not readable: {p}")
            resolved[k] = p
        data = DataPaths(**resolved)
    else:
        synthetic = _synth(sec["synthetic"])

    kw = {}
    for key, (n, value) in sec.get("scenarios", {}).items():
        kw[key] = _number(int, n, key, value)
    for key, (n, value) in sec.get("solver", {}).items():
        kw[key] = value if key == "method" else _number(float, n, key, value)
    if "dir" in sec.get("output", {}):
        kw["out_dir"] = Path(sec["output"]["dir"][1])
    return RunConfig(params, data, synthetic, **kw)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from None
    return parse_config(text, base_dir=path.parent)


def default_config_text() -> str:
    from .market import default_params

    p = default_params()
    lines = ["[system]"] + [f"{k} = {getattr(p, k)!r}" for k in SYSTEM_KEYS]
    lines += ["", "[synthetic]", "", "[scenarios]", "k_prices = 10", "k_reg = 3", ""]
    return "\n".join(lines)
