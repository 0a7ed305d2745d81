"""Run configuration: JSON schema, validation, bundled presets.

A run config is a JSON object:

    {
      "units": "natural" | "si",
      "qubit": {"omega": float, "delta": float},
      "ensemble": {"gamma_min": ..., "gamma_max": ..., "n_d": ...,
                   "v_mean": ..., "v_sd": ..., "delta_p_eq": ...}
                  or {"fluctuators": [{"v":..., "gamma":..., "delta_p_eq":...}, ...]},
      "protocol": {"kind": "none"|"asymmetric"|"symmetric", "dt": float, "cycles": int},
      "init": {"qubit": "superposition"|"ground", "env": "thermal" | 1 | -1},
      "n_traj": int, "master_seed": int,
      "grid": {"t_max": float, "n_points": int},
      "spectrum": {"dt_sample": float, "n_segments": int, "segment_length": int},
      "outputs": {"csv_path": str, "json_path": str}
    }

Validation failures name the offending field path.  "units" is a label
copied to output metadata: natural runs are dimensionless, si runs use
seconds with rates and couplings as angular frequencies.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .noise import EnsembleSpec, Fluctuator
from .dynamics import QubitParams
from .schedule import PROTOCOL_KINDS, PulseProtocol

DEFAULT_N_TRAJ = 20_000
DEFAULT_SEED = 12345
DEFAULT_N_POINTS = 400


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def _need(d: dict, key: str, path: str):
    if key not in d:
        raise ConfigError(f"{path}.{key}", "missing required field")
    return d[key]


def _number(x, path: str) -> float:
    if not isinstance(x, (int, float)) or isinstance(x, bool):
        raise ConfigError(path, f"expected a number, got {x!r}")
    return float(x)


def _integer(x, path: str) -> int:
    if not isinstance(x, int) or isinstance(x, bool):
        raise ConfigError(path, f"expected an integer, got {x!r}")
    return x


@dataclass
class RunConfig:
    """Validated run description with defaults resolved."""

    qubit: QubitParams
    ensemble: EnsembleSpec | list[Fluctuator]
    protocol: PulseProtocol
    init_qubit: str
    init_env: str | int
    n_traj: int
    master_seed: int
    grid_t_max: float
    grid_n_points: int
    units: str = "natural"
    spectrum: dict = field(default_factory=dict)
    csv_path: str | None = None
    json_path: str | None = None
    warnings: list[str] = field(default_factory=list)

    def resolved_dict(self) -> dict:
        """Canonical echo of the configuration; re-running it reproduces the
        emitted data bit-exactly (for the same package version)."""
        if isinstance(self.ensemble, EnsembleSpec):
            ens = json.loads(self.ensemble.to_json())
        else:
            ens = {
                "fluctuators": [
                    {"v": f.v, "gamma": f.gamma, "delta_p_eq": f.delta_p_eq}
                    for f in self.ensemble
                ]
            }
        return {
            "units": self.units,
            "qubit": {"omega": self.qubit.omega, "delta": self.qubit.delta},
            "ensemble": ens,
            "protocol": {
                "kind": self.protocol.kind,
                "dt": self.protocol.dt,
                "cycles": self.protocol.cycles,
            },
            "init": {"qubit": self.init_qubit, "env": self.init_env},
            "n_traj": self.n_traj,
            "master_seed": self.master_seed,
            "grid": {"t_max": self.grid_t_max, "n_points": self.grid_n_points},
            "spectrum": self.spectrum,
        }

    def make_grid(self) -> np.ndarray:
        """Sample grid: ~n_points uniform times, snapped onto the pulse
        half-interval lattice for controlled runs, with every cycle boundary
        included."""
        n = self.grid_n_points
        t_max = self.grid_t_max
        if self.protocol.kind == "none":
            return np.linspace(t_max / n, t_max, n)
        h = self.protocol.dt / 2
        uniform = np.linspace(t_max / n, t_max, n)
        snapped = np.maximum(np.round(uniform / h), 1) * h
        strobo = 2 * self.protocol.dt * np.arange(1, self.protocol.cycles + 1)
        grid = np.unique(np.concatenate([snapped, strobo[strobo <= t_max + 1e-12]]))
        return grid[grid <= t_max + 1e-9]


def parse_config(raw: dict, path: str = "config") -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError(path, "top level must be a JSON object")
    warnings: list[str] = []

    units = raw.get("units", "natural")
    if units not in ("natural", "si"):
        raise ConfigError("config.units", f"must be 'natural' or 'si', got {units!r}")

    qraw = _need(raw, "qubit", "config")
    qubit = QubitParams(
        omega=_number(qraw.get("omega", 0.0), "config.qubit.omega"),
        delta=_number(qraw.get("delta", 0.0), "config.qubit.delta"),
    )

    eraw = _need(raw, "ensemble", "config")
    ensemble: EnsembleSpec | list[Fluctuator]
    if "fluctuators" in eraw:
        ensemble = []
        for i, fr in enumerate(eraw["fluctuators"]):
            p = f"config.ensemble.fluctuators[{i}]"
            try:
                ensemble.append(
                    Fluctuator(
                        v=_number(_need(fr, "v", p), f"{p}.v"),
                        gamma=_number(_need(fr, "gamma", p), f"{p}.gamma"),
                        delta_p_eq=_number(fr.get("delta_p_eq", 0.0), f"{p}.delta_p_eq"),
                    )
                )
            except ValueError as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(p, str(exc)) from exc
        if not ensemble:
            raise ConfigError("config.ensemble.fluctuators", "must not be empty")
    else:
        p = "config.ensemble"
        try:
            ensemble = EnsembleSpec(
                gamma_min=_number(_need(eraw, "gamma_min", p), f"{p}.gamma_min"),
                gamma_max=_number(_need(eraw, "gamma_max", p), f"{p}.gamma_max"),
                n_d=_integer(_need(eraw, "n_d", p), f"{p}.n_d"),
                v_mean=_number(_need(eraw, "v_mean", p), f"{p}.v_mean"),
                v_sd=_number(_need(eraw, "v_sd", p), f"{p}.v_sd"),
                delta_p_eq=_number(eraw.get("delta_p_eq", 0.0), f"{p}.delta_p_eq"),
            )
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(p, str(exc)) from exc

    praw = _need(raw, "protocol", "config")
    kind = _need(praw, "kind", "config.protocol")
    if kind not in PROTOCOL_KINDS:
        raise ConfigError("config.protocol.kind", f"must be one of {PROTOCOL_KINDS}")
    try:
        protocol = PulseProtocol(
            kind=kind,
            dt=_number(praw.get("dt", 0.0), "config.protocol.dt") if kind != "none" else 0.0,
            cycles=_integer(praw.get("cycles", 0), "config.protocol.cycles"),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("config.protocol", str(exc)) from exc

    iraw = raw.get("init", {})
    init_qubit = iraw.get("qubit", "superposition")
    if init_qubit not in ("superposition", "ground"):
        raise ConfigError("config.init.qubit", "must be 'superposition' or 'ground'")
    init_env = iraw.get("env", "thermal")
    if init_env not in ("thermal", 1, -1):
        raise ConfigError("config.init.env", "must be 'thermal', 1 or -1")

    if "n_traj" in raw:
        n_traj = _integer(raw["n_traj"], "config.n_traj")
        if n_traj < 1:
            raise ConfigError("config.n_traj", "must be >= 1")
    else:
        n_traj = DEFAULT_N_TRAJ
        warnings.append(f"n_traj missing, defaulting to {DEFAULT_N_TRAJ}")

    master_seed = _integer(raw.get("master_seed", DEFAULT_SEED), "config.master_seed")

    graw = raw.get("grid", {})
    span = protocol.total_time
    t_max = _number(graw.get("t_max", span if span > 0 else 0.0), "config.grid.t_max")
    if t_max <= 0:
        raise ConfigError("config.grid.t_max", "must be > 0 (required for free evolution)")
    if span > 0 and t_max > span * (1 + 1e-12):
        raise ConfigError(
            "config.grid.t_max",
            f"exceeds the protocol span 2*cycles*dt = {span}",
        )
    n_points = _integer(graw.get("n_points", DEFAULT_N_POINTS), "config.grid.n_points")
    if n_points < 1:
        raise ConfigError("config.grid.n_points", "must be >= 1")

    oraw = raw.get("outputs", {})
    return RunConfig(
        qubit=qubit,
        ensemble=ensemble,
        protocol=protocol,
        init_qubit=init_qubit,
        init_env=init_env,
        n_traj=n_traj,
        master_seed=master_seed,
        grid_t_max=t_max,
        grid_n_points=n_points,
        units=units,
        spectrum=raw.get("spectrum", {}),
        csv_path=oraw.get("csv_path"),
        json_path=oraw.get("json_path"),
        warnings=warnings,
    )


def load_config(path) -> RunConfig:
    """Read, parse and validate a JSON run configuration file."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"parse error in {path}: {exc}") from exc
    return parse_config(raw)


# --- bundled parameter presets ---

_V1 = 9.2e7

PRESETS: dict[str, dict] = {
    # pure dephasing by a wide-band charge ensemble; physical units (si):
    # times in seconds, rates/couplings as angular frequencies.  The 1 Hz
    # low-frequency cutoff is an extrapolation flag, kept as-is.
    "fig1": {
        "units": "si",
        "qubit": {"omega": 0.0, "delta": 0.0},
        "ensemble": {
            "gamma_min": 1.0,
            "gamma_max": 1e12,
            "n_d": 1000,
            "v_mean": _V1,
            "v_sd": 0.2 * _V1,
            "delta_p_eq": 0.08,
        },
        "protocol": {"kind": "symmetric", "dt": 1e-9, "cycles": 1},
        "init": {"qubit": "superposition", "env": "thermal"},
        "n_traj": 100_000,
        "master_seed": DEFAULT_SEED,
        "grid": {"t_max": 2e-9, "n_points": 400},
    },
    # Gaussian 1/f dephasing (weak coupling, natural units)
    "fig2a": {
        "units": "natural",
        "qubit": {"omega": 1.0, "delta": 0.0},
        "ensemble": {
            "gamma_min": 1e-4,
            "gamma_max": 100.0,
            "n_d": 100,
            "v_mean": 1e-4,
            "v_sd": 2e-5,
            "delta_p_eq": 0.08,
        },
        "protocol": {"kind": "symmetric", "dt": 10.0, "cycles": 100},
        "init": {"qubit": "superposition", "env": "thermal"},
        "n_traj": 20_000,
        "master_seed": DEFAULT_SEED,
        "grid": {"t_max": 2000.0, "n_points": 400},
    },
    # non-Gaussian via a lower rate window
    "fig2b": {
        "units": "natural",
        "qubit": {"omega": 1.0, "delta": 0.0},
        "ensemble": {
            "gamma_min": 1e-6,
            "gamma_max": 100.0,
            "n_d": 100,
            "v_mean": 1e-4,
            "v_sd": 2e-5,
            "delta_p_eq": 0.08,
        },
        "protocol": {"kind": "symmetric", "dt": 10.0, "cycles": 100},
        "init": {"qubit": "superposition", "env": "thermal"},
        "n_traj": 20_000,
        "master_seed": DEFAULT_SEED,
        "grid": {"t_max": 2000.0, "n_points": 400},
    },
    # non-Gaussian via stronger couplings
    "fig2c": {
        "units": "natural",
        "qubit": {"omega": 1.0, "delta": 0.0},
        "ensemble": {
            "gamma_min": 1e-4,
            "gamma_max": 100.0,
            "n_d": 100,
            "v_mean": 0.01,
            "v_sd": 0.002,
            "delta_p_eq": 0.08,
        },
        "protocol": {"kind": "symmetric", "dt": 0.1, "cycles": 100},
        "init": {"qubit": "superposition", "env": "thermal"},
        "n_traj": 20_000,
        "master_seed": DEFAULT_SEED,
        "grid": {"t_max": 20.0, "n_points": 400},
    },
    # charge-degeneracy working point over the fig2c ensemble
    "fig3": {
        "units": "natural",
        "qubit": {"omega": 0.0, "delta": 1.0},
        "ensemble": {
            "gamma_min": 1e-4,
            "gamma_max": 100.0,
            "n_d": 100,
            "v_mean": 0.01,
            "v_sd": 0.002,
            "delta_p_eq": 0.08,
        },
        "protocol": {"kind": "symmetric", "dt": 1.0, "cycles": 20},
        "init": {"qubit": "ground", "env": "thermal"},
        "n_traj": 200_000,
        "master_seed": DEFAULT_SEED,
        "grid": {"t_max": 40.0, "n_points": 400},
    },
}


def load_preset(name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}; have {sorted(PRESETS)}")
    return parse_config(json.loads(json.dumps(PRESETS[name])))
