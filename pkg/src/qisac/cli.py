"""Command-line front end: analytics tables, convergence runs, trade-off sweeps.

Configuration files are single JSON documents with three sections::

    {
      "channel":    {"E": 10, "eta": 0.8, "Na": 3, "theta_deg": 45},
      "algo":       {"gamma_frac": 0.6, "lambda": 0.01, "eps": 1e-3,
                     "t_max": 500, "l_max": 500, "newton_max": 100,
                     "psi0_deg": 90, "block_refresh": true},
      "experiment": {"n_block": 1000, "trials": 50, "seed": 1},
      "sweep":      [[0.1, 3, 5000], ...]          // sweep command only
    }

Exactly one of ``gamma_frac`` (fraction of the achievable Fisher maximum) or
``gamma_abs`` (absolute block Fisher) must be present.  All angles in files
and flags are degrees; the library works in radians internally.  ``eps`` is
the shared tolerance of the outer, EM, and Newton updates; ``eps: 0``
disables outer early stopping (the run always lasts t_max iterations)
and leaves the inner tolerances at the default.

Outputs are CSV (header row, LF line endings, 17-significant-digit floats)
plus a JSON summary embedding the resolved config and package version.
Exit codes: 0 success, 2 configuration error, 3 numerical failure.
The master seed is taken from --seed, else the config, else the QISAC_SEED
environment variable, else 0.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import (
    ber_theory,
    fc_max,
    fisher_argmax,
    fisher_high_snr,
    fisher_symbol,
    pareto_known_theta,
)
from .controller import AlgoConfig
from .em import EmConfig
from .errors import ConfigError, QisacError
from .montecarlo import (
    ExperimentSpec,
    run_convergence_experiment,
    run_tradeoff_sweep,
    steady_mean,
    steady_psi,
)
from .physics import ChannelParams

_DEFAULTS_ALGO = {
    "lambda": 0.01,
    "eps": 1e-3,
    "t_max": 500,
    "l_max": 500,
    "newton_max": 100,
    "psi0_deg": 0.0,
    "block_refresh": True,
}
_DEFAULT_TRIALS = {"run": 50, "sweep": 200}


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _write_json(path: Path, doc: dict) -> None:
    with open(path, "w", newline="") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"missing required key {where}.{key}")
    return section[key]


def parse_config(doc: dict, command: str) -> tuple[ExperimentSpec, dict, bool]:
    """Validate a config document and build the experiment description.

    Returns the spec, a normalized echo document (defaults filled, angles
    still in degrees) that re-parses to an identical spec, and whether the
    file itself carried a seed (the echo always lists one).
    """
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    for section in ("channel", "algo", "experiment"):
        if section not in doc or not isinstance(doc[section], dict):
            raise ConfigError(f"missing or invalid section {section!r}")
    unknown = set(doc) - {"channel", "algo", "experiment", "sweep"}
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")

    ch = doc["channel"]
    try:
        params = ChannelParams(
            E=float(_require(ch, "E", "channel")),
            eta=float(_require(ch, "eta", "channel")),
            Na=float(_require(ch, "Na", "channel")),
            theta=math.radians(float(_require(ch, "theta_deg", "channel"))),
        )
    except ValueError as err:
        raise ConfigError(f"invalid channel parameters: {err}") from err

    al = dict(doc["algo"])
    has_frac = "gamma_frac" in al
    has_abs = "gamma_abs" in al
    if has_frac == has_abs:
        raise ConfigError("exactly one of algo.gamma_frac / algo.gamma_abs is required")
    gamma = float(al.pop("gamma_frac") if has_frac else al.pop("gamma_abs"))
    merged = dict(_DEFAULTS_ALGO)
    unknown = set(al) - set(merged)
    if unknown:
        raise ConfigError(f"unknown algo keys: {sorted(unknown)}")
    merged.update(al)
    eps = float(merged["eps"])
    # the outer loop accepts 0 (= no early stop); the inner updates need a
    # positive tolerance, so they fall back to the default in that case
    inner_eps = eps if eps > 0 else float(_DEFAULTS_ALGO["eps"])
    try:
        em_cfg = EmConfig(
            eps=inner_eps,
            l_max=int(merged["l_max"]),
            newton_max=int(merged["newton_max"]),
            newton_tol=inner_eps,
        )
        algo = AlgoConfig(
            gamma_min=gamma,
            lam=float(merged["lambda"]),
            eps=eps,
            t_max=int(merged["t_max"]),
            em=em_cfg,
            psi0=math.radians(float(merged["psi0_deg"])),
            gamma_relative=has_frac,
            block_refresh=bool(merged["block_refresh"]),
        )
    except ValueError as err:
        raise ConfigError(f"invalid algo parameters: {err}") from err

    ex = doc["experiment"]
    trials = int(ex.get("trials", _DEFAULT_TRIALS[command if command in _DEFAULT_TRIALS else "run"]))
    seed = ex.get("seed")
    sweep = None
    if "sweep" in doc:
        raw = doc["sweep"]
        if not isinstance(raw, list) or not raw:
            raise ConfigError("sweep must be a non-empty list of [gamma_frac, Na, N]")
        try:
            sweep = tuple((float(g), float(na), int(n)) for g, na, n in raw)
        except (TypeError, ValueError) as err:
            raise ConfigError(f"malformed sweep entry: {err}") from err
    elif command == "sweep":
        raise ConfigError("sweep command requires a sweep section")

    try:
        spec = ExperimentSpec(
            params=params,
            algo=algo,
            n_block=int(_require(ex, "n_block", "experiment")),
            trials=trials,
            seed=int(seed) if seed is not None else 0,
            sweep=sweep,
        )
    except ValueError as err:
        raise ConfigError(f"invalid experiment parameters: {err}") from err

    echo = {
        "channel": {"E": params.E, "eta": params.eta, "Na": params.Na,
                    "theta_deg": math.degrees(params.theta)},
        "algo": {
            ("gamma_frac" if has_frac else "gamma_abs"): gamma,
            "lambda": algo.lam,
            "eps": algo.eps,
            "t_max": algo.t_max,
            "l_max": em_cfg.l_max,
            "newton_max": em_cfg.newton_max,
            "psi0_deg": math.degrees(algo.psi0),
            "block_refresh": algo.block_refresh,
        },
        "experiment": {"n_block": spec.n_block, "trials": spec.trials, "seed": spec.seed},
    }
    if sweep is not None:
        echo["sweep"] = [[g, na, n] for g, na, n in sweep]
    return spec, echo, seed is not None


def _load_config(path: str, command: str) -> tuple[ExperimentSpec, dict, bool]:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"config {path} is not valid JSON: {err}") from err
    return parse_config(doc, command)


def _resolve_seed(flag_seed, spec_seed, config_had_seed: bool):
    """--seed flag beats the config; QISAC_SEED is the fallback; else 0."""
    if flag_seed is not None:
        return int(flag_seed)
    if config_had_seed:
        return spec_seed
    env = os.environ.get("QISAC_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as err:
            raise ConfigError(f"QISAC_SEED must be an integer, got {env!r}") from err
    return 0


def cmd_analytics(args) -> int:
    try:
        params = ChannelParams(E=args.E, eta=args.eta, Na=args.Na, theta=0.0)
    except ValueError as err:
        raise ConfigError(str(err)) from err
    if args.grid < 2:
        raise ConfigError("--grid must be >= 2")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    phis_deg = np.linspace(0.0, 180.0, args.grid)
    rows = []
    for pd in phis_deg:
        p = replace(params, theta=math.radians(pd))
        rep = fisher_symbol(p, 0.0)
        rows.append((float(pd), ber_theory(p, 0.0), rep.per_symbol, fisher_high_snr(p, 0.0)))
    _write_csv(out / "analytics_grid.csv",
               ["phi_deg", "ber_theory", "fisher", "fisher_high_snr"], rows)

    phi_star, f_peak = fisher_argmax(params)
    a2s2 = params.amplitude() ** 2 / params.noise_var()
    _write_json(out / "analytics_fcmax.json", {
        "version": __version__,
        "channel": {"E": params.E, "eta": params.eta, "Na": params.Na},
        "n": args.n,
        "fc_max": fc_max(params, args.n),
        "fisher_peak_per_symbol": f_peak,
        "phi_argmax_deg": math.degrees(phi_star),
        "upper_bound_n_a2_over_sigma2": args.n * a2s2,
    })

    fcm = fc_max(params, args.n)
    prows = []
    for gf in np.linspace(0.0, 1.0, args.pareto_points):
        pt = pareto_known_theta(params, args.n, gf * fcm)
        prows.append((float(gf), pt.gamma_min, math.degrees(pt.phi_star), pt.ber))
    _write_csv(out / "analytics_pareto.csv",
               ["gamma_frac", "gamma_min", "phi_star_deg", "ber"], prows)
    print(f"analytics written to {out} (grid={args.grid}, n={args.n})")
    return 0


def cmd_run(args) -> int:
    spec, echo, had_seed = _load_config(args.config, "run")
    seed = _resolve_seed(args.seed, spec.seed, had_seed)
    spec = replace(spec, seed=seed)
    echo["experiment"]["seed"] = seed
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    result = run_convergence_experiment(spec, threads=args.threads)

    rows = []
    for k, tr in enumerate(result.traces):
        for t in range(len(tr)):
            rows.append((
                t, k,
                math.degrees(tr.theta_hat[t]),
                math.degrees(tr.psi[t]),
                float(tr.fc[t]),
                tr.fc_max,
                float(tr.ber_emp[t]),
                float(tr.ber_theory[t]),
                tr.target[t],
            ))
    _write_csv(out / "run_trace.csv",
               ["iter", "trial", "theta_hat_deg", "psi_deg", "fc", "fc_max",
                "ber_emp", "ber_theory", "target"], rows)

    psis = [steady_psi(tr) for tr in result.traces]
    th_err = [steady_mean(np.degrees(np.abs(
        np.minimum((tr.theta_hat - tr.theta_true) % np.pi,
                   (tr.theta_true - tr.theta_hat) % np.pi))), len(tr))
        for tr in result.traces]
    fcs = [steady_mean(tr.fc, len(tr)) for tr in result.traces]
    bers = [steady_mean(tr.ber_emp, len(tr)) for tr in result.traces]
    gamma = result.traces[0].gamma_min
    summary = {
        "version": __version__,
        "master_seed": seed,
        "config": echo,
        "trials_ok": len(result.traces),
        "trials_failed": [{"trial": i, "error": msg} for i, msg in result.failures],
        "fc_max": result.traces[0].fc_max,
        "gamma_min": gamma,
        "steady": {
            "psi_deg_median": float(np.median([math.degrees(p) for p in psis])),
            "psi_deg_per_trial": [math.degrees(p) for p in psis],
            "theta_err_deg_median": float(np.median(th_err)),
            "fc_median": float(np.median(fcs)),
            "fc_over_gamma_median": float(np.median(fcs) / gamma) if gamma > 0 else None,
            "ber_emp_mean": float(np.mean(bers)),
        },
        "iterations_per_trial": [len(tr) for tr in result.traces],
    }
    _write_json(out / "run_summary.json", summary)
    print(f"run complete: {len(result.traces)}/{spec.trials} trials ok, "
          f"median steady psi = {summary['steady']['psi_deg_median']:.2f} deg")
    return 0


def cmd_sweep(args) -> int:
    spec, echo, had_seed = _load_config(args.config, "sweep")
    seed = _resolve_seed(args.seed, spec.seed, had_seed)
    spec = replace(spec, seed=seed)
    echo["experiment"]["seed"] = seed
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    curve = run_tradeoff_sweep(spec, threads=args.threads)
    rows = [(p.gamma_frac, p.na, p.n, p.ber_sim, p.ber_stderr, p.ber_theory)
            for p in curve.points]
    _write_csv(out / "sweep_results.csv",
               ["gamma_frac", "Na", "N", "ber_sim", "ber_stderr",
                "ber_theory_known_theta"], rows)
    _write_json(out / "sweep_summary.json", {
        "version": __version__,
        "master_seed": seed,
        "config": echo,
        "trials_per_point": curve.trials,
        "points": [{
            "gamma_frac": p.gamma_frac, "Na": p.na, "N": p.n,
            "ber_sim": p.ber_sim, "ber_stderr": p.ber_stderr,
            "ber_theory_known_theta": p.ber_theory,
            "phi_star_deg": math.degrees(p.phi_star) if np.isfinite(p.phi_star) else None,
            "feasible": p.feasible,
        } for p in curve.points],
    })
    print(f"sweep complete: {len(curve.points)} points")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="qisac",
        description="BPSK homodyne sensing/communication simulator",
    )
    ap.add_argument("--seed", type=int, default=None,
                    help="master seed override (beats config and QISAC_SEED)")
    ap.add_argument("--out-dir", default=".", help="directory for output files")
    ap.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                    help="worker threads for independent trials")
    sub = ap.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analytics", help="closed-form tables on a phase-offset grid")
    pa.add_argument("--E", type=float, default=10.0, help="mean photon number")
    pa.add_argument("--eta", type=float, default=0.8, help="transmissivity")
    pa.add_argument("--Na", type=float, default=3.0, help="thermal photon number")
    pa.add_argument("--grid", type=int, default=181, help="grid points over [0, 180] deg")
    pa.add_argument("--n", type=int, default=1000, help="block length for block-level outputs")
    pa.add_argument("--pareto-points", type=int, default=21,
                    help="points on the known-theta trade-off curve")
    pa.set_defaults(func=cmd_analytics)

    pr = sub.add_parser("run", help="convergence experiment from a config file")
    pr.add_argument("config", help="JSON config path")
    pr.set_defaults(func=cmd_run)

    ps = sub.add_parser("sweep", help="trade-off sweep from a config file")
    ps.add_argument("config", help="JSON config path (requires sweep section)")
    ps.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except QisacError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
