"""Command-line entry points: simulate, compare, analytic, spectrum.

Every command takes --config <json> or --preset <name>, plus overrides
--seed, --traj, --threads and an --out-dir for the emitted files.  Each
emitted CSV has a JSON metadata sidecar embedding the fully resolved
configuration and master seed; re-running that configuration reproduces
the CSV byte for byte at any thread count.  Errors print one JSON object
to stderr and exit nonzero.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .benchmarks import SingleChargeParams, Z_multi, transfer_matrix_Z_cycles
from .config import ConfigError, PRESETS, RunConfig, load_config, load_preset
from .dynamics import run_ensemble
from .noise import EnsembleSpec, analytic_spectrum, sample_ensemble
from .rng import ensemble_stream
from .spectrum import (
    OneOverFWindowNotFound,
    estimate_effective_cutoffs,
    fit_loglog_slope,
    synthesize_trace,
    welch_spectrum,
)

# Conventions baked into the closed-form evaluation; emitted with analytic
# results so downstream consumers know exactly which reading is implemented.
ANALYTIC_CONVENTIONS = {
    "coupling_symbol": "2*v/gamma",
    "exponent_scale": "gamma*dt",
    "delta_p0_sign": "+1 means initial signal value +v/2",
    "modulus": "per-charge complex value, thermal average, then magnitude",
}


def _resolve_config(args) -> RunConfig:
    if bool(args.config) == bool(args.preset):
        raise ConfigError("cli", "exactly one of --config or --preset is required")
    cfg = load_config(args.config) if args.config else load_preset(args.preset)
    if args.seed is not None:
        cfg.master_seed = args.seed
    if args.traj is not None:
        if args.traj < 1:
            raise ConfigError("cli.traj", "must be >= 1")
        cfg.n_traj = args.traj
    return cfg


def _out_paths(cfg: RunConfig, args, stem: str) -> tuple[str, str]:
    base = args.preset or os.path.splitext(os.path.basename(args.config))[0]
    os.makedirs(args.out_dir, exist_ok=True)
    csv = cfg.csv_path or os.path.join(args.out_dir, f"{stem}_{base}.csv")
    jsn = cfg.json_path or os.path.join(args.out_dir, f"{stem}_{base}.json")
    return csv, jsn


def _write_meta(path: str, cfg: RunConfig, extra: dict, wall: float, written: list[str]):
    meta = {
        "tool": {"name": "rtndd", "version": __version__},
        "config": cfg.resolved_dict(),
        "master_seed": cfg.master_seed,
        "warnings": cfg.warnings,
        "outputs": written,
        "telemetry": {"wall_time_s": wall},  # excluded from reproducibility
    }
    meta.update(extra)
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_simulate(args) -> int:
    cfg = _resolve_config(args)
    for w in cfg.warnings:
        print(f"warning: {w}", file=sys.stderr)
    csv_path, json_path = _out_paths(cfg, args, "simulate")
    grid = cfg.make_grid()
    t0 = time.perf_counter()
    series = run_ensemble(
        cfg.qubit, cfg.ensemble, cfg.protocol, grid, cfg.init_qubit, cfg.init_env,
        cfg.n_traj, cfg.master_seed, workers=args.threads,
    )
    wall = time.perf_counter() - t0
    series.to_csv(csv_path)
    _write_meta(json_path, cfg, {"command": "simulate"}, wall, [csv_path])
    print(f"wrote {csv_path} and {json_path}")
    return 0


def cmd_compare(args) -> int:
    cfg = _resolve_config(args)
    dts = [float(x) for x in args.dt_list.split(",") if x.strip()]
    if not dts:
        raise ConfigError("cli.dt_list", "needs at least one dt")
    if cfg.protocol.kind == "none":
        raise ConfigError("config.protocol.kind", "compare needs a controlled protocol")
    csv_base, json_path = _out_paths(cfg, args, "compare")
    t_max = cfg.grid_t_max
    written = []
    summary = []
    t0 = time.perf_counter()
    for dt in dts:
        cycles = max(1, int(round(t_max / (2 * dt))))
        sub = RunConfig(**{**cfg.__dict__,
                           "protocol": type(cfg.protocol)(cfg.protocol.kind, dt, cycles),
                           "grid_t_max": 2 * dt * cycles})
        grid = sub.make_grid()
        series = run_ensemble(
            sub.qubit, sub.ensemble, sub.protocol, grid, sub.init_qubit, sub.init_env,
            sub.n_traj, sub.master_seed, workers=args.threads,
        )
        path = csv_base.replace(".csv", f"_dt{dt:g}.csv")
        series.to_csv(path)
        written.append(path)
        strobo = 2 * dt * np.arange(1, cycles + 1)
        for frac in (0.25, 0.5, 0.75, 1.0):
            tsel = strobo[min(int(round(frac * cycles)) - 1, cycles - 1)]
            j = int(np.argmin(np.abs(grid - tsel)))
            summary.append((dt, grid[j], series.coh[j], series.sem_coh[j]))
    wall = time.perf_counter() - t0
    sum_path = csv_base.replace(".csv", "_summary.csv")
    with open(sum_path, "w") as fh:
        fh.write("dt,t,coh,sem_coh\n")
        for row in summary:
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")
    written.append(sum_path)
    _write_meta(json_path, cfg, {"command": "compare", "dt_list": dts}, wall, written)
    print(f"wrote {len(written)} files and {json_path}")
    return 0


def cmd_analytic(args) -> int:
    cfg = _resolve_config(args)
    if cfg.protocol.kind == "none":
        raise ConfigError("config.protocol.kind", "analytic needs a controlled protocol")
    dt = cfg.protocol.dt
    n_max = cfg.protocol.cycles or 10
    csv_path, json_path = _out_paths(cfg, args, "analytic")
    if isinstance(cfg.ensemble, EnsembleSpec):
        flucts = sample_ensemble(cfg.ensemble, ensemble_stream(cfg.master_seed))
    else:
        flucts = cfg.ensemble
    charges = [
        SingleChargeParams(v=f.v, gamma=f.gamma, delta_p_eq=f.delta_p_eq, init=cfg.init_env)
        for f in flucts
    ]
    t0 = time.perf_counter()
    rows = []
    for n in range(1, n_max + 1):
        z_eq = Z_multi(charges, dt, n)
        z_or = 1.0
        for c in charges:
            z_or *= transfer_matrix_Z_cycles(c, dt, [n])[0]
        rows.append((n, 2 * n * dt, z_eq, z_or, abs(z_eq - z_or)))
    wall = time.perf_counter() - t0
    with open(csv_path, "w") as fh:
        fh.write("N,t,Z_eq2,Z_oracle,abs_diff\n")
        for n, t, a, b, d in rows:
            fh.write(f"{n},{t:.17g},{a:.17g},{b:.17g},{d:.17g}\n")
    _write_meta(json_path, cfg, {"command": "analytic", "conventions": ANALYTIC_CONVENTIONS},
                wall, [csv_path])
    print(f"wrote {csv_path} and {json_path}")
    return 0


def cmd_spectrum(args) -> int:
    cfg = _resolve_config(args)
    csv_path, json_path = _out_paths(cfg, args, "spectrum")
    if isinstance(cfg.ensemble, EnsembleSpec):
        flucts = sample_ensemble(cfg.ensemble, ensemble_stream(cfg.master_seed))
        gamma_max = cfg.ensemble.gamma_max
    else:
        flucts = cfg.ensemble
        gamma_max = max(f.gamma for f in flucts)
    sp = cfg.spectrum
    seg_len = int(sp.get("segment_length", args.segment_length))
    n_seg = int(sp.get("n_segments", args.n_segments))
    dt_sample = float(sp.get("dt_sample", args.dt_sample or 1.0 / (20.0 * gamma_max)))
    t0 = time.perf_counter()
    trace = synthesize_trace(flucts, dt_sample, seg_len * n_seg, cfg.master_seed)
    est = welch_spectrum(trace, dt_sample, n_seg)
    try:
        lo, hi = estimate_effective_cutoffs(est)
        est.cutoffs = (lo, hi)
        fit_lo, fit_hi = 2 * lo, hi / 2
    except (OneOverFWindowNotFound, ValueError):
        est.cutoffs = None
        fit_lo = est.omegas[0] * 10
        fit_hi = est.omegas[-1] / 10
    try:
        est.slope, est.slope_err = fit_loglog_slope(est, fit_lo, fit_hi)
    except ValueError:
        est.slope, est.slope_err = fit_loglog_slope(est, est.omegas[4], est.omegas[-5])
    wall = time.perf_counter() - t0
    s_an = analytic_spectrum(flucts, est.omegas)
    with open(csv_path, "w") as fh:
        fh.write("omega,s_hat,s_analytic\n")
        for w, sh, sa in zip(est.omegas, est.s_hat, s_an):
            fh.write(f"{w:.17g},{sh:.17g},{sa:.17g}\n")
    summary = {
        "slope": est.slope,
        "slope_err": est.slope_err,
        "gamma_e_min": None if est.cutoffs is None else est.cutoffs[0],
        "gamma_e_max": None if est.cutoffs is None else est.cutoffs[1],
        "dt_sample": dt_sample,
        "n_segments": n_seg,
        "segment_length": seg_len,
    }
    _write_meta(json_path, cfg, {"command": "spectrum", "summary": summary}, wall, [csv_path])
    print(f"wrote {csv_path} and {json_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rtndd",
        description="Monte Carlo and analytic toolkit for qubit decoupling from telegraph 1/f noise",
    )
    parser.add_argument("--version", action="version", version=f"rtndd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="path to a JSON run configuration")
        p.add_argument("--preset", choices=sorted(PRESETS), help="bundled parameter set")
        p.add_argument("--seed", type=int, default=None, help="override master seed")
        p.add_argument("--traj", type=int, default=None, help="override trajectory count")
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                       help="worker processes (results are thread-count independent)")
        p.add_argument("--out-dir", default=".", help="directory for emitted files")

    p = sub.add_parser("simulate", help="run one ensemble average, emit CSV series")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="sweep pulse intervals at a fixed window")
    common(p)
    p.add_argument("--dt-list", required=True, help="comma-separated pulse intervals")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("analytic", help="closed form vs transfer-matrix oracle at cycle boundaries")
    common(p)
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("spectrum", help="synthesize a noise trace and estimate its spectrum")
    common(p)
    p.add_argument("--dt-sample", type=float, default=None, help="trace sampling step")
    p.add_argument("--n-segments", type=int, default=64)
    p.add_argument("--segment-length", type=int, default=2**15)
    p.set_defaults(func=cmd_spectrum)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(json.dumps({"error": {"type": "config", "field": exc.path, "message": str(exc)}}),
              file=sys.stderr)
        return 1
    except OSError as exc:
        print(json.dumps({"error": {"type": "io", "message": str(exc),
                                    "path": getattr(exc, "filename", None)}}), file=sys.stderr)
        return 1
    except ValueError as exc:
        print(json.dumps({"error": {"type": "value", "message": str(exc)}}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
