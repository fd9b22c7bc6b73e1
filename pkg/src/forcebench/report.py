"""Output writers for the command-line tool: RFC-4180-style CSV with
17-significant-digit floats, companion gnuplot scripts referencing the CSVs,
and matplotlib renderings of the same figures written next to the data.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    v = float(x)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.17g}"


def write_csv(path, header, rows, trailer=()):
    """Write comma-separated data with LF line endings and a '#' trailer."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
        for line in trailer:
            fh.write(f"# {line}\n")


def out_paths(out):
    """(csv, gnuplot script, png) paths derived from the --out argument."""
    out = Path(out)
    stem = out.with_suffix("") if out.suffix == ".csv" else out
    csv = stem.with_suffix(".csv")
    return csv, stem.with_suffix(".gp"), stem.with_suffix(".png")


# ---------------------------------------------------------------------------
# gnuplot scripts

def gnuplot_freqresp(csv_name, png_name) -> str:
    return f"""\
# frequency responses of the inner-loop sensitivity pair
set datafile separator ','
set terminal pngcairo size 900,700
set output '{png_name}'
set multiplot layout 2,1
set logscale x
set xlabel 'omega [rad/s]'
set ylabel 'magnitude [dB]'
set grid
plot '{csv_name}' using 1:2 with lines title 'S', \\
     '{csv_name}' using 1:4 with lines title 'T'
set ylabel 'phase [deg]'
plot '{csv_name}' using 1:3 with lines title 'S', \\
     '{csv_name}' using 1:5 with lines title 'T'
unset multiplot
"""


def gnuplot_rootlocus(csv_name, png_name) -> str:
    return f"""\
# closed-loop pole trajectories over the force gain, with the unit circle
set datafile separator ','
set terminal pngcairo size 700,700
set output '{png_name}'
set size ratio -1
set xlabel 'Re z'
set ylabel 'Im z'
set grid
set parametric
set trange [0:2*pi]
plot cos(t),sin(t) with lines lc 'gray' title 'unit circle', \\
     '{csv_name}' using 3:4 with dots lc 'blue' title 'poles'
"""


def gnuplot_simulate(csv_name, png_name) -> str:
    return f"""\
# contact torque, its estimate and the reference over time
set datafile separator ','
set terminal pngcairo size 900,500
set output '{png_name}'
set xlabel 't [s]'
set ylabel 'torque [N m]'
set grid
plot '{csv_name}' using 1:6 with lines title 'tau_c', \\
     '{csv_name}' using 1:7 with lines title 'tau_c estimate', \\
     '{csv_name}' using 1:8 with lines dt 2 title 'tau_ref'
"""


def write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# matplotlib figures

def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    return plt


def render_freqresp(png_path, omega, mag_s, phase_s, mag_t, phase_t):
    plt = _pyplot()
    fig, (ax_m, ax_p) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    ax_m.semilogx(omega, mag_s, label="S")
    ax_m.semilogx(omega, mag_t, label="T")
    ax_m.set_ylabel("magnitude [dB]")
    ax_m.grid(True, which="both", alpha=0.4)
    ax_m.legend()
    ax_p.semilogx(omega, phase_s, label="S")
    ax_p.semilogx(omega, phase_t, label="T")
    ax_p.set_xlabel("omega [rad/s]")
    ax_p.set_ylabel("phase [deg]")
    ax_p.grid(True, which="both", alpha=0.4)
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)


def render_rootlocus(png_path, branch_points, open_loop_poles):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.5, 6.5))
    circle = np.exp(1j * np.linspace(0, 2 * math.pi, 512))
    ax.plot(circle.real, circle.imag, color="gray", lw=1, label="unit circle")
    for j in range(branch_points.shape[1]):
        branch = branch_points[:, j]
        ax.plot(branch.real, branch.imag, ".", ms=2)
    ax.plot(open_loop_poles.real, open_loop_poles.imag, "x", color="black",
            ms=8, label="open-loop poles")
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    ax.set_aspect("equal")
    ax.grid(alpha=0.4)
    ax.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)


def render_simulation(png_path, t, tau_c, tau_c_hat, tau_ref):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.plot(t, tau_c, label="tau_c")
    ax.plot(t, tau_c_hat, label="tau_c estimate", lw=0.9)
    ax.plot(t, tau_ref, "--", label="tau_ref", color="gray")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("torque [N m]")
    ax.grid(alpha=0.4)
    ax.legend()
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
