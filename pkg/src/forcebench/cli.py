"""Command-line front end.

    workbench <freqresp|bodeintegral|rootlocus|simulate|sweep>
              --config <path> [--out <path>] [--gains lo:hi:n] [--seed N]

Exit codes: 0 success (a diverged simulation is a result, not a failure),
2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import analysis, report
from .analysis import (
    BODE_POINTS_DEFAULT,
    FrequencyGrid,
    SweepGrid,
    bode_integral,
    critical_gain,
    design_sweep,
    frequency_response,
    root_locus,
    sensitivity_peak,
)
from .config import load_config
from .dlti import UNSTABLE, classify_stability
from .errors import ConfigError, WorkbenchError
from .models import inner_complementary, inner_sensitivity, unit_gain_force_loop
from .simulate import compute_metrics, run_simulation

FREQRESP_POINTS = 1024


def _parse_gains(spec: str):
    try:
        lo_s, hi_s, n_s = spec.split(":")
        lo, hi, n = float(lo_s), float(hi_s), int(n_s)
    except ValueError:
        raise ConfigError(f"--gains must be lo:hi:n, got {spec!r}") from None
    if n < 1 or hi < lo:
        raise ConfigError(f"--gains needs hi >= lo and n >= 1, got {spec!r}")
    if n == 1:
        return np.array([lo])
    if lo > 0:
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


def cmd_freqresp(args) -> int:
    cfg = load_config(args.config)
    gains = cfg.gains()
    alpha = cfg.force_loop().ratios.alpha
    S = inner_sensitivity(alpha, gains)
    T = inner_complementary(alpha, gains)
    w_lo = 1e-2 * cfg.g_dob
    w_hi = math.pi / cfg.T_s
    omega = np.geomspace(min(w_lo, 0.99 * w_hi), w_hi, FREQRESP_POINTS)
    grid = FrequencyGrid(tuple(omega * cfg.T_s), "log")
    resp_s = frequency_response(S, grid)
    resp_t = frequency_response(T, grid)

    trailer = []
    try:
        trailer.append(f"peak_S={report.fmt(sensitivity_peak(S))}")
    except WorkbenchError:
        print("warning: sensitivity peak undefined (unstable inner loop)", file=sys.stderr)
        trailer.append("peak_S=nan")
    csv, gp, png = report.out_paths(args.out)
    rows = zip(omega, resp_s.magnitude_db, resp_s.phase_deg,
               resp_t.magnitude_db, resp_t.phase_deg)
    report.write_csv(csv, ["omega_rad_s", "mag_S_dB", "phase_S_deg",
                           "mag_T_dB", "phase_T_deg"], rows, trailer)
    report.write_text(gp, report.gnuplot_freqresp(csv.name, png.with_suffix("").name + "_gp.png"))
    report.render_freqresp(png, omega, resp_s.magnitude_db, resp_s.phase_deg,
                           resp_t.magnitude_db, resp_t.phase_deg)
    for line in trailer:
        print(line)
    return 0


def cmd_bodeintegral(args) -> int:
    cfg = load_config(args.config)
    S = inner_sensitivity(cfg.force_loop().ratios.alpha, cfg.gains())
    result = bode_integral(S, BODE_POINTS_DEFAULT)
    parts = [f"integral={report.fmt(result.value)}"]
    if result.stable:
        peak = sensitivity_peak(S)
        verdict = "PASS" if abs(result.value) < 1e-3 else "FLAG"
        parts += [f"sensitivity_peak={report.fmt(peak)}", f"verdict={verdict}"]
        if verdict == "FLAG":
            parts.append("note=quadrature-off-zero")
    else:
        parts += ["sensitivity_peak=nan", "verdict=FLAG",
                  "note=unstable-inner-loop-zero-identity-inapplicable"]
    print(" ".join(parts))
    return 0


def cmd_rootlocus(args) -> int:
    cfg = load_config(args.config)
    loop = unit_gain_force_loop(cfg.force_loop())
    gain_grid = _parse_gains(args.gains) if args.gains else np.geomspace(1e-3, 1e3, 400)
    locus = root_locus(loop, gain_grid)
    crit = critical_gain(loop)
    csv, gp, png = report.out_paths(args.out)
    rows = []
    for i, k in enumerate(locus.gains):
        for j in range(locus.branch_points.shape[1]):
            p = locus.branch_points[i, j]
            if np.isnan(p.real):
                continue
            rows.append((k, j, p.real, p.imag, abs(p)))
    report.write_csv(csv, ["gain", "branch", "re", "im", "abs"], rows,
                     [f"critical_gain={report.fmt(crit.value)}",
                      f"critical_gain_status={crit.status}"])
    report.write_text(gp, report.gnuplot_rootlocus(csv.name, png.with_suffix("").name + "_gp.png"))
    report.render_rootlocus(png, locus.branch_points, loop.poles())
    print(f"critical_gain={report.fmt(crit.value)} status={crit.status}")
    return 0


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    scn = cfg.scenario(seed=args.seed)
    trace = run_simulation(scn)
    metrics = compute_metrics(trace, scn.tau_ref.final_value)
    trailer = [
        f"steady_state_error={report.fmt(metrics.steady_state_error)}",
        f"overshoot_pct={report.fmt(metrics.overshoot_pct)}",
        f"settling_time_s={report.fmt(metrics.settling_time)}",
        f"settled={report.fmt(metrics.settled)}",
        f"rms_estimation_error={report.fmt(metrics.rms_estimation_error)}",
        f"diverged={report.fmt(metrics.diverged)}",
    ]
    csv, gp, png = report.out_paths(args.out)
    rows = zip(trace.t, trace.q, trace.dq, trace.ddq, trace.current,
               trace.tau_c, trace.tau_c_hat, trace.tau_ref)
    report.write_csv(csv, ["t", "q", "dq", "ddq", "current",
                           "tau_c", "tau_c_hat", "tau_ref"], rows, trailer)
    report.write_text(gp, report.gnuplot_simulate(csv.name, png.with_suffix("").name + "_gp.png"))
    report.render_simulation(png, trace.t, trace.tau_c, trace.tau_c_hat, trace.tau_ref)
    for line in trailer:
        print(line)
    return 0


SWEEP_COLUMNS = ["alpha", "delta", "g_dob", "g_rtob", "T_s", "sensitivity_peak",
                 "bode_integral", "critical_gain", "max_zero_magnitude",
                 "nmp_flag", "error"]


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    grid = SweepGrid(
        alphas=cfg.sweep_alpha, deltas=cfg.sweep_delta, g_dobs=cfg.sweep_g_dob,
        g_rtobs=cfg.sweep_g_rtob, sample_times=cfg.sweep_T_s,
        K_env=cfg.K_env, D_env=cfg.D_env, J_m=cfg.J_m, K_tau=cfg.K_tau,
        bode_points=cfg.sweep_bode_points,
        gain_bracket=(cfg.sweep_gain_lo, cfg.sweep_gain_hi),
    )
    records = design_sweep(grid)
    rows = [
        (r.alpha, r.delta, r.g_dob, r.g_rtob, r.T_s, r.sensitivity_peak,
         r.bode_integral, r.critical_gain, r.max_zero_magnitude, r.nmp_flag,
         r.error if r.error is not None else "")
        for r in records
    ]
    csv, _, _ = report.out_paths(args.out)
    report.write_csv(csv, SWEEP_COLUMNS, rows)
    print(f"rows={len(rows)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="workbench",
        description="Discrete-time analysis and simulation workbench for "
                    "observer-based sensorless force control.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, needs_out=True, doc=""):
        p = sub.add_parser(name, help=doc)
        p.add_argument("--config", required=True, help="TOML configuration file")
        if needs_out:
            p.add_argument("--out", required=True, help="output path (CSV stem)")
        p.add_argument("--gains", default=None, help="gain grid as lo:hi:n")
        p.add_argument("--seed", type=int, default=None, help="noise seed override")
        p.set_defaults(func=func)

    add("freqresp", cmd_freqresp, doc="inner-loop frequency responses (CSV, gnuplot, PNG)")
    add("bodeintegral", cmd_bodeintegral, needs_out=False,
        doc="discrete log-sensitivity integral report")
    add("rootlocus", cmd_rootlocus, doc="closed-loop pole trajectories over the force gain")
    add("simulate", cmd_simulate, doc="time-domain closed-loop simulation")
    add("sweep", cmd_sweep, doc="batch design-space evaluation")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except WorkbenchError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
