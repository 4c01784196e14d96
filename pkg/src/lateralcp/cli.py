"""Distance sweeps over both methods and plot-ready CSV/JSON output.

Config files are flat ``key = value`` text (``#`` starts a comment), SI units.
Keys are the :class:`SweepConfig` field names; unknown keys are errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from .emission import mode_decomposition
from .greens_cylinder import green_observables
from .numerics import QuadratureSpec
from .system import (DIPOLE_CS_D2, FIBER_RADIUS, MASS_CS, SILICA_INDEX, WAVELENGTH_CS_D2,
                     AtomPosition, AtomTransition, Fiber)

CSV_HEADER = ["d_A", "gamma_g_plus", "gamma_g_minus", "gamma_r_plus", "gamma_r_minus",
              "Gamma", "alpha", "F_modes", "F_green", "dp_z", "dv"]
POLARIZATION_ALIASES = {"sigma+": "sigma_plus", "sigma-": "sigma_minus", "pi": "pi",
                        "sigma_plus": "sigma_plus", "sigma_minus": "sigma_minus"}
METHODS = ("modes", "green", "both")


class ConfigError(ValueError):
    """Invalid or unknown configuration entry."""


@dataclass(frozen=True)
class SweepConfig:
    radius: float = FIBER_RADIUS
    n_real: float = SILICA_INDEX.real
    n_imag: float = SILICA_INDEX.imag
    wavelength: float = WAVELENGTH_CS_D2
    dipole: float = DIPOLE_CS_D2
    mass: float = MASS_CS
    polarization: str = "sigma_plus"
    d_min: float = 10e-9
    d_max: float = 1e-6
    steps: int = 60
    log_grid: bool = True
    method: str = "both"
    rel_tol: float = 1e-9
    format: str = "csv"

    def __post_init__(self):
        pol = POLARIZATION_ALIASES.get(self.polarization)
        if pol is None:
            raise ConfigError(f"unknown polarization {self.polarization!r}")
        object.__setattr__(self, "polarization", pol)
        if not self.d_min > 0:
            raise ConfigError("d_min must be positive")
        if self.d_max < self.d_min:
            raise ConfigError("d_max must be >= d_min")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ConfigError("steps must be a positive integer")
        if not self.rel_tol > 0:
            raise ConfigError("rel_tol must be positive")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")

    def grid(self) -> np.ndarray:
        if self.steps == 1:
            return np.array([self.d_min])
        if self.log_grid:
            return np.geomspace(self.d_min, self.d_max, self.steps)
        return np.linspace(self.d_min, self.d_max, self.steps)

    def fiber(self) -> Fiber:
        return Fiber(self.radius, complex(self.n_real, self.n_imag))

    def atom(self) -> AtomTransition:
        return AtomTransition.cesium_d2(self.polarization, self.wavelength, self.dipole, self.mass)


def _coerce(name, text, kind):
    if kind is bool:
        low = text.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{name}: expected a boolean, got {text!r}")
    try:
        return kind(text.strip())
    except ValueError as exc:
        raise ConfigError(f"{name}: cannot parse {text!r}") from exc


_TYPES = {"radius": float, "n_real": float, "n_imag": float, "wavelength": float, "dipole": float,
          "mass": float, "polarization": str, "d_min": float, "d_max": float, "steps": int,
          "log_grid": bool, "method": str, "rel_tol": float, "format": str}


def parse_config(text: str) -> dict:
    """Parse flat ``key = value`` lines into a dict of typed overrides."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = _coerce(key, value, _TYPES[key])
    return out


@dataclass
class SweepRecord:
    d_A: float
    gamma_g_plus: float | None = None
    gamma_g_minus: float | None = None
    gamma_r_plus: float | None = None
    gamma_r_minus: float | None = None
    Gamma: float | None = None
    alpha: float | None = None
    F_modes: float | None = None
    F_green: float | None = None
    dp_z: float | None = None
    dv: float | None = None
    F_rel_dev: float | None = None
    error: str | None = None


def run_point(config: SweepConfig, d_A: float) -> SweepRecord:
    fiber = config.fiber()
    atom = config.atom()
    pos = AtomPosition.at_distance(d_A, fiber)
    rec = SweepRecord(float(d_A))
    if config.method in ("modes", "both"):
        quad = QuadratureSpec(config.rel_tol, 0.0, 4000)
        dec = mode_decomposition(atom, pos, fiber, quad)
        r = dec.rates
        rec.gamma_g_plus, rec.gamma_g_minus = r.gamma_g_plus, r.gamma_g_minus
        rec.gamma_r_plus, rec.gamma_r_minus = r.gamma_r_plus, r.gamma_r_minus
        rec.Gamma, rec.alpha, rec.F_modes = dec.Gamma, dec.alpha, dec.force
    if config.method in ("green", "both"):
        obs = green_observables(atom, pos, fiber)
        rec.F_green = obs.F_z
        if rec.Gamma is None:
            rec.Gamma, rec.alpha = obs.Gamma, obs.alpha
    force = rec.F_modes if rec.F_modes is not None else rec.F_green
    rec.dp_z = force / rec.Gamma
    rec.dv = rec.dp_z / atom.mass
    if rec.F_modes is not None and rec.F_green is not None and rec.F_green != 0:
        rec.F_rel_dev = (rec.F_modes - rec.F_green) / abs(rec.F_green)
    return rec


def run_sweep(config: SweepConfig) -> list[SweepRecord]:
    """One record per grid point, in grid order.  Failed points carry ``error``."""
    records = []
    for d in config.grid():
        try:
            records.append(run_point(config, d))
        except Exception as exc:  # surfaced per point, never dropped
            records.append(SweepRecord(float(d), error=f"{type(exc).__name__}: {exc}"))
    return records


def _fmt(v):
    return "" if v is None else f"{v:.12g}"


def emit(records, fmt: str, config: SweepConfig | None = None) -> bytes:
    """Serialise records as CSV (fixed header, 12 significant digits) or JSON."""
    if not records:
        raise ValueError("no records to emit")
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for rec in records:
            writer.writerow([_fmt(getattr(rec, name)) for name in CSV_HEADER])
        return buf.getvalue().encode()
    if fmt == "json":
        payload = {"config": asdict(config) if config is not None else None,
                   "records": [asdict(rec) for rec in records]}
        return (json.dumps(payload, indent=2) + "\n").encode()
    raise ValueError(f"unknown format {fmt!r}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lateralcp", description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="flat key = value file (SI units)")
    ap.add_argument("--method", choices=METHODS)
    ap.add_argument("--out", help="output file (default: stdout)")
    ap.add_argument("--format", choices=("csv", "json"))
    ap.add_argument("--d-min", type=float, dest="d_min")
    ap.add_argument("--d-max", type=float, dest="d_max")
    ap.add_argument("--steps", type=int)
    ap.add_argument("--log-grid", dest="log_grid", action=argparse.BooleanOptionalAction, default=None)
    ap.add_argument("--polarization", choices=("sigma+", "sigma-", "pi"))
    return ap


def config_from_args(args) -> SweepConfig:
    values = {}
    if args.config:
        with open(args.config) as fh:
            values.update(parse_config(fh.read()))
    for f in fields(SweepConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    return replace(SweepConfig(), **values) if values else SweepConfig()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    records = run_sweep(config)
    data = emit(records, config.format, config)
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)
    ok = True
    for rec in records:
        if rec.error:
            ok = False
            print(f"d_A = {rec.d_A:.6g} m: {rec.error}", file=sys.stderr)
            continue
        f = rec.F_modes if rec.F_modes is not None else rec.F_green
        print(f"d_A = {rec.d_A * 1e9:9.3f} nm  Gamma/2pi = {rec.Gamma / (2 * np.pi) / 1e6:8.4f} MHz  "
              f"alpha = {rec.alpha:+.5f}  F = {f / 1e-24:+10.4f} x 1e-24 N", file=sys.stderr)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
