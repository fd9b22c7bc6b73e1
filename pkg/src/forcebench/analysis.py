"""Frequency-domain and root-space analysis: frequency responses, the
discrete Bode sensitivity integral, sensitivity peaks, root loci over the
force gain, critical-gain and minimum-phase-boundary bisections, and batch
design sweeps."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dlti import (
    CANCEL_TOL_DEFAULT,
    MARGINAL_BAND_DEFAULT,
    UNSTABLE,
    Poly,
    RationalTF,
    cancel,
    classify_stability,
    evaluate_many,
    poly_roots,
)
from .errors import InvalidInputError, NoCrossingError, UnsupportedModelError
from .models import (
    DerivedRatios,
    EnvModel,
    ForceLoopConfig,
    ObserverGains,
    ServoParams,
    inner_sensitivity,
    phi_polys,
    unit_gain_force_loop,
)

GAIN_GRID_POINTS_DEFAULT = 400
BODE_POINTS_DEFAULT = 2 ** 20
PEAK_GRID_POINTS = 4096
#: non-minimum-phase band: wider than the stability band so that repeated
#: zeros pinned exactly on the circle (free-space (z-1)^2, or (z-1)^3 at
#: delta = 1) are not flagged through their numerical splitting
NMP_BAND = 1e-6


@dataclass(frozen=True)
class FrequencyGrid:
    """Ordered normalized frequencies omega*T_s in (-pi, pi]."""

    points: tuple
    spacing: str

    def __post_init__(self):
        pts = np.asarray(self.points)
        if len(pts) == 0:
            raise InvalidInputError("frequency grid is empty")
        if np.any(np.diff(pts) <= 0):
            raise InvalidInputError("frequency grid must be strictly increasing")
        if pts[0] <= -math.pi or pts[-1] > math.pi:
            raise InvalidInputError("frequency grid must lie within (-pi, pi]")

    @classmethod
    def uniform_midpoint(cls, n):
        h = 2.0 * math.pi / n
        return cls(tuple(-math.pi + (np.arange(n) + 0.5) * h), "midpoint")

    @classmethod
    def uniform_endpoint(cls, n):
        pts = np.linspace(-math.pi, math.pi, n + 1)[1:]
        return cls(tuple(pts), "endpoint")

    @classmethod
    def log_spaced(cls, lo, hi, n):
        if not (0 < lo < hi <= math.pi):
            raise InvalidInputError(f"log grid needs 0 < lo < hi <= pi, got [{lo}, {hi}]")
        return cls(tuple(np.geomspace(lo, hi, n)), "log")

    def as_array(self):
        return np.asarray(self.points)


@dataclass(frozen=True)
class FrequencyResponse:
    """Magnitude (dB) and unwrapped phase (deg) over a frequency grid."""

    grid: FrequencyGrid
    magnitude_db: np.ndarray
    phase_deg: np.ndarray


def frequency_response(tf: RationalTF, grid: FrequencyGrid) -> FrequencyResponse:
    """Evaluate on the unit circle; samples on a pole become +inf dB."""
    theta = grid.as_array()
    vals = evaluate_many(tf, np.exp(1j * theta))
    mag = np.abs(vals)
    with np.errstate(divide="ignore"):
        mag_db = 20.0 * np.log10(mag)
    finite = np.isfinite(vals)
    phase = np.zeros_like(theta)
    phase[finite] = np.angle(vals[finite])
    phase = np.degrees(np.unwrap(phase))
    return FrequencyResponse(grid, mag_db, phase)


@dataclass(frozen=True)
class BodeIntegralResult:
    """Midpoint-rule value of the log-sensitivity integral.

    ``stable`` is False when S has a pole outside the unit circle, in which
    case the zero right-hand side of the discrete Bode identity no longer
    applies and the value is reported as-is.
    """

    value: float
    stable: bool
    n_points: int


def bode_integral(S: RationalTF, n_points: int = BODE_POINTS_DEFAULT) -> BodeIntegralResult:
    """Composite midpoint estimate of the integral of ln|S(e^{j theta})|
    over (-pi, pi].

    Midpoint placement guarantees no sample lands on theta = 0, where the
    sensitivity of a loop with integral action has a logarithmic zero.
    """
    if not S.is_proper:
        raise InvalidInputError("bode_integral needs a proper transfer function")
    if n_points < 2 ** 14 or (n_points & (n_points - 1)) != 0:
        raise InvalidInputError(f"n_points must be a power of two >= 2^14, got {n_points}")
    h = 2.0 * math.pi / n_points
    theta = -math.pi + (np.arange(n_points) + 0.5) * h
    vals = np.abs(evaluate_many(S, np.exp(1j * theta)))
    with np.errstate(divide="ignore"):
        integrand = np.log(vals)
    value = float(np.sum(integrand) * h)
    stable = classify_stability(S).classification != UNSTABLE
    return BodeIntegralResult(value, stable, n_points)


def _golden_section_max(f, a, b, tol):
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - inv_phi * (b - a)
    x2 = a + inv_phi * (b - a)
    f1, f2 = f(x1), f(x2)
    while (b - a) > tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + inv_phi * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - inv_phi * (b - a)
            f1 = f(x1)
    xm = 0.5 * (a + b)
    return xm, f(xm)


def sensitivity_peak(S: RationalTF) -> float:
    """Peak of |S| over the unit circle (absolute units, not dB).

    Coarse grid of PEAK_GRID_POINTS points on [0, pi] refined by
    golden-section search around the grid maximum.
    """
    report = classify_stability(S)
    if report.classification == UNSTABLE:
        raise UnsupportedModelError(
            f"sensitivity peak undefined for unstable S (spectral radius {report.spectral_radius:.6g})"
        )
    theta = np.linspace(0.0, math.pi, PEAK_GRID_POINTS)
    mags = np.abs(evaluate_many(S, np.exp(1j * theta)))
    i = int(np.argmax(mags))
    lo = theta[max(i - 1, 0)]
    hi = theta[min(i + 1, len(theta) - 1)]

    def f(w):
        return abs(complex(S.num(np.exp(1j * w))) / complex(S.den(np.exp(1j * w))))

    if hi > lo:
        _, peak = _golden_section_max(f, lo, hi, 1e-10)
    else:
        peak = mags[i]
    return float(max(peak, mags[i]))


# ---------------------------------------------------------------------------
# root locus and gain bisection

@dataclass(frozen=True)
class LocusBranch:
    """Closed-loop pole trajectories over an ascending gain grid.

    branch_points has shape (n_gains, n_poles); column j follows one pole by
    nearest-neighbor matching between consecutive gain slices.
    """

    gains: tuple
    branch_points: np.ndarray
    spectral_radius: np.ndarray


def closed_loop_char(L_unit: RationalTF, gain: float) -> Poly:
    """Characteristic polynomial den + gain*num of unity feedback around
    gain * L_unit."""
    return L_unit.den + gain * L_unit.num


def _match_to_previous(prev: np.ndarray, current: np.ndarray) -> np.ndarray:
    """Greedy nearest-neighbor assignment, closest pairs claimed first."""
    ordered = np.empty_like(current)
    pairs = sorted(
        (abs(p - c), i, j)
        for i, p in enumerate(prev)
        for j, c in enumerate(current)
    )
    done_prev, done_cur = set(), set()
    for _, i, j in pairs:
        if i in done_prev or j in done_cur:
            continue
        ordered[i] = current[j]
        done_prev.add(i)
        done_cur.add(j)
    return ordered


def root_locus(L_unit: RationalTF, gain_grid) -> LocusBranch:
    """Track closed-loop poles of unity feedback around k*L_unit over the
    ascending gains k; the first slice equals the open-loop poles."""
    gains = np.asarray(gain_grid, dtype=float)
    if len(gains) == 0:
        raise InvalidInputError("gain grid is empty")
    if np.any(np.diff(gains) < 0):
        raise InvalidInputError("gain grid must be ascending")
    slices = []
    rho = np.empty(len(gains))
    prev = None
    for i, k in enumerate(gains):
        roots = np.sort_complex(poly_roots(closed_loop_char(L_unit, k)))
        if prev is not None and len(roots) == len(prev):
            roots = _match_to_previous(prev, roots)
        slices.append(roots)
        prev = roots
        rho[i] = np.max(np.abs(roots)) if len(roots) else 0.0
    n_poles = max(len(s) for s in slices)
    pts = np.full((len(gains), n_poles), np.nan + 0j, dtype=complex)
    for i, s in enumerate(slices):
        pts[i, :len(s)] = s
    return LocusBranch(tuple(gains), pts, rho)


@dataclass(frozen=True)
class CriticalGainResult:
    """Gain at which the closed loop first reaches the unit circle.

    status is "found" (value is the crossing), "stable-throughout" (value is
    +inf, no instability inside the bracket) or "unstable-at-zero" (value 0,
    the loop is already unstable at the smallest tested gain).
    """

    value: float
    status: str


def critical_gain(L_unit: RationalTF, bracket=(1e-4, 1e4), n_scan: int = GAIN_GRID_POINTS_DEFAULT,
                  rel_tol: float = 1e-6, eps: float = MARGINAL_BAND_DEFAULT) -> CriticalGainResult:
    """Bisection on the closed-loop spectral radius crossing 1.

    Common factors shared by num and den are removed first: they contribute
    gain-independent closed-loop roots (for example the stationary (z-1)^2
    pair of the free-space force loop) that are never "reached" by the gain
    and whose eigenvalue splitting would poison the crossing test.
    """
    L = cancel(L_unit, CANCEL_TOL_DEFAULT)

    def unstable(k):
        roots = poly_roots(closed_loop_char(L, k))
        return bool(np.max(np.abs(roots)) > 1.0 + eps) if len(roots) else False

    lo, hi = bracket
    if not (0 < lo < hi):
        raise InvalidInputError(f"bracket must satisfy 0 < lo < hi, got {bracket}")
    grid = np.geomspace(lo, hi, n_scan)
    last_stable = 0.0
    first_unstable = None
    for k in grid:
        if unstable(k):
            first_unstable = k
            break
        last_stable = k
    if first_unstable is None:
        return CriticalGainResult(math.inf, "stable-throughout")
    if last_stable == 0.0:
        if unstable(lo):
            return CriticalGainResult(0.0, "unstable-at-zero")
        last_stable = lo
    a, b = last_stable, first_unstable
    while (b - a) > rel_tol * max(1.0, abs(b)):
        mid = 0.5 * (a + b)
        if unstable(mid):
            b = mid
        else:
            a = mid
    return CriticalGainResult(0.5 * (a + b), "found")


def _deflate(coeffs: np.ndarray, root: complex) -> np.ndarray:
    """Synthetic division by (z - root); the remainder is dropped."""
    out = np.empty(len(coeffs) - 1, dtype=complex)
    acc = coeffs[0]
    for i in range(len(coeffs) - 1):
        out[i] = acc
        acc = acc * root + coeffs[i + 1]
    return out


def min_phase_boundary(env: EnvModel, gains: ObserverGains, delta_bracket,
                       tol: float = 1e-10, eps: float = MARGINAL_BAND_DEFAULT) -> float:
    """Critical delta at which the largest zero of the plant/environment
    numerator cubic reaches the unit circle, found by bisection.

    Zeros shared by the cubic at both bracket endpoints are independent of
    delta (the free-space factorization pins a double zero at z = 1 for
    every delta) and cannot cross the circle by tuning it, so they are
    deflated before the magnitude test; otherwise their numerical splitting
    inside a near-triple cluster would defeat the eps band.
    """
    lo, hi = delta_bracket
    if not (0 < lo < hi):
        raise InvalidInputError(f"delta bracket must satisfy 0 < lo < hi, got {delta_bracket}")

    def cubic(delta):
        ratios = DerivedRatios.from_alpha_delta(1.0, delta)
        phi_n, _ = phi_polys(env, ratios, gains)
        return phi_n

    roots_lo = list(poly_roots(cubic(lo)))
    roots_hi = list(poly_roots(cubic(hi)))
    fixed = []
    for r in roots_lo:
        j = int(np.argmin([abs(r - s) for s in roots_hi])) if roots_hi else -1
        if j >= 0 and abs(r - roots_hi[j]) < 1e-6:
            fixed.append(roots_hi.pop(j))

    def excess(delta):
        c = cubic(delta).as_array().astype(complex)
        for r in fixed:
            c = _deflate(c, r)
        if len(c) < 2:
            return -math.inf
        roots = np.roots(c)
        return float(np.max(np.abs(roots))) - 1.0 if len(roots) else -math.inf

    f_lo, f_hi = excess(lo), excess(hi)
    if not (f_lo <= eps < f_hi):
        raise NoCrossingError((lo, hi), (f_lo, f_hi))
    a, b = lo, hi
    while (b - a) > tol * max(1.0, b):
        mid = 0.5 * (a + b)
        if excess(mid) > eps:
            b = mid
        else:
            a = mid
    return 0.5 * (a + b)


# ---------------------------------------------------------------------------
# design sweeps

@dataclass(frozen=True)
class SweepGrid:
    """Cartesian design grid; records come out in lexicographic order over
    (alpha, delta, g_dob, g_rtob, T_s)."""

    alphas: tuple
    deltas: tuple
    g_dobs: tuple
    g_rtobs: tuple
    sample_times: tuple
    K_env: float
    D_env: float
    J_m: float = 0.1
    K_tau: float = 0.5
    bode_points: int = 2 ** 16
    gain_bracket: tuple = (1e-4, 1e4)


@dataclass(frozen=True)
class SweepRecord:
    """Metrics for one design tuple; error is None unless evaluation failed."""

    alpha: float
    delta: float
    g_dob: float
    g_rtob: float
    T_s: float
    sensitivity_peak: float
    bode_integral: float
    critical_gain: float
    max_zero_magnitude: float
    nmp_flag: bool
    error: str | None = None


def _sweep_one(grid: SweepGrid, alpha, delta, g_dob, g_rtob, T_s) -> SweepRecord:
    gains = ObserverGains(g_dob, g_rtob, T_s)
    env = EnvModel(grid.K_env, grid.D_env, grid.J_m)
    ratios = DerivedRatios.from_alpha_delta(alpha, delta)
    S = inner_sensitivity(alpha, gains)
    peak = sensitivity_peak(S)
    integral = bode_integral(S, grid.bode_points).value
    phi_n, _ = phi_polys(env, ratios, gains)
    max_zero = float(np.max(np.abs(poly_roots(phi_n))))
    cfg = ForceLoopConfig(1.0, ServoParams.matched(grid.J_m, grid.K_tau),
                          gains, env, ratio_override=ratios)
    crit = critical_gain(unit_gain_force_loop(cfg), bracket=grid.gain_bracket)
    return SweepRecord(alpha, delta, g_dob, g_rtob, T_s, peak, integral,
                       crit.value, max_zero, max_zero > 1.0 + NMP_BAND)


def design_sweep(grid: SweepGrid) -> list:
    """Evaluate every tuple of the grid; failures are recorded in-row and
    never abort the sweep.  Output order is deterministic (lexicographic)."""
    records = []
    for alpha in grid.alphas:
        for delta in grid.deltas:
            for g_dob in grid.g_dobs:
                for g_rtob in grid.g_rtobs:
                    for T_s in grid.sample_times:
                        try:
                            records.append(_sweep_one(grid, alpha, delta, g_dob, g_rtob, T_s))
                        except Exception as exc:  # recorded, not raised
                            records.append(SweepRecord(
                                alpha, delta, g_dob, g_rtob, T_s,
                                math.nan, math.nan, math.nan, math.nan, False,
                                error=f"{type(exc).__name__}: {exc}"))
    return records
