"""Run configuration and its INI file format.

Every key lives in one section; CLI flags use the same names with dashes.
"""
from __future__ import annotations

import configparser
import dataclasses
import os
from dataclasses import dataclass, fields
from pathlib import Path

SECTIONS = {
    "input": ("input", "customers", "profiles", "delimiter",
              "window_start", "window_end"),
    "ingest": ("min_days",),
    "rrs": ("n_sims", "n_trials", "rule"),
    "hodge": ("rho_star", "days_scale", "allowed_isolates"),
    "synth": ("synth", "synth_products", "synth_days", "synth_noise",
              "synth_lead_days", "synth_customers"),
    "run": ("seed", "threads", "out_dir"),
}


@dataclass
class RunConfig:
    input: str | None = None
    customers: str | None = None
    profiles: str | None = None
    delimiter: str = ","
    window_start: str | None = None
    window_end: str | None = None
    min_days: int = 51
    n_sims: int = 10_000
    n_trials: int = 100
    rule: str = "sigma"
    rho_star: float | None = None
    days_scale: float | None = None
    allowed_isolates: int = 1
    synth: bool = False
    synth_products: int = 6
    synth_days: int = 365
    synth_noise: float = 0.3
    synth_lead_days: float = 2.0
    synth_customers: int = 200
    seed: int = 0
    threads: int | None = None
    out_dir: str = "chpca_out"

    def __post_init__(self):
        for f in fields(self):
            setattr(self, f.name, _coerce(f, getattr(self, f.name)))

    @property
    def out(self) -> Path:
        return Path(self.out_dir)

    @property
    def n_threads(self) -> int:
        if self.threads:
            return int(self.threads)
        env = os.environ.get("CHPCA_THREADS")
        return int(env) if env else 1

    def window(self):
        if self.window_start and self.window_end:
            return (self.window_start, self.window_end)
        return None

    def updated(self, **overrides) -> "RunConfig":
        """Copy with every non-None override applied."""
        return dataclasses.replace(
            self, **{k: v for k, v in overrides.items() if v is not None})

    # -- file format -------------------------------------------------------

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        for section, keys in SECTIONS.items():
            cp[section] = {k: _format(getattr(self, k)) for k in keys}
        lines = []
        for section in cp.sections():
            lines.append(f"[{section}]")
            lines += [f"{k} = {v}" for k, v in cp[section].items()]
            lines.append("")
        return "\n".join(lines)

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_ini(), encoding="utf-8")
        return path

    @classmethod
    def from_ini(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.read_string(text)
        known = {k for keys in SECTIONS.values() for k in keys}
        values = {}
        for section in cp.sections():
            for key, raw in cp[section].items():
                if key not in known:
                    raise KeyError(f"unknown config key [{section}] {key}")
                values[key] = None if raw == "" else raw
        return cls(**values)

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"config file not found: {path}")
        return cls.from_ini(path.read_text(encoding="utf-8"))


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _coerce(f: dataclasses.Field, value):
    if value is None:
        return None
    kind = str(f.type)
    if "bool" in kind:
        if isinstance(value, str):
            return value.strip().lower() in ("1", "true", "yes", "on")
        return bool(value)
    if "int" in kind:
        return int(value)
    if "float" in kind:
        return float(value)
    return str(value)
