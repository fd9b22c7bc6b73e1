"""Independent brute-force machinery used to validate the closed forms:
matrix exponential, exact zero-order-hold discretization, state-space to
transfer-function conversion, numeric block composition of the full force
loop, and reference quadrature.

Matrices are plain dense numpy arrays (row-major, <= 8x8 here).  Nothing in
this module uses the closed-form loop formulas, so agreement between
:func:`compose_loop_numeric` and ``models.force_open_loop`` is a genuine
two-route check.
"""

from __future__ import annotations

import math

import numpy as np

from .dlti import CANCEL_TOL_DEFAULT, Poly, RationalTF, cancel, tf_series
from .errors import InvalidInputError, SingularSampleError
from .models import XI_OMEGA0, XI_OMEGA_N, ForceLoopConfig


def mat_exp(A: np.ndarray, t: float = 1.0) -> np.ndarray:
    """e^{A t} by scaling-and-squaring with a truncated-Taylor core."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInputError(f"matrix exponential needs a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)) or not math.isfinite(t):
        raise InvalidInputError("matrix exponential needs finite entries")
    M = A * t
    n = M.shape[0]
    norm = np.linalg.norm(M, np.inf)
    squarings = max(0, int(np.ceil(np.log2(norm))) + 1) if norm > 0 else 0
    M = M / (2.0 ** squarings)
    out = np.eye(n)
    term = np.eye(n)
    for k in range(1, 30):
        term = term @ M / k
        out = out + term
        if np.max(np.abs(term)) < 1e-20 * max(1.0, np.max(np.abs(out))):
            break
    for _ in range(squarings):
        out = out @ out
    return out


def zoh_ab(A: np.ndarray, B: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact discretization of x' = Ax + Bu over dt via the augmented block
    [[A, B], [0, 0]] exponential."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n, m = A.shape[0], B.shape[1]
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = A
    aug[:n, n:] = B
    big = mat_exp(aug, dt)
    return big[:n, :n], big[:n, n:]


def ss_to_tf(Ad: np.ndarray, Bd: np.ndarray, C: np.ndarray, D: float,
             sample_time: float) -> RationalTF:
    """SISO z-domain transfer function of (Ad, Bd, C, D) via the
    Leverrier-Faddeev resolvent recursion (no per-element determinants)."""
    Ad = np.asarray(Ad, dtype=float)
    Bd = np.asarray(Bd, dtype=float).reshape(-1, 1)
    C = np.asarray(C, dtype=float).reshape(1, -1)
    n = Ad.shape[0]
    # char poly z^n + c1 z^(n-1) + ... + cn and resolvent numerators N_k
    den = np.zeros(n + 1)
    den[0] = 1.0
    Bk = np.eye(n)
    num = np.zeros(n + 1)
    num[1] = (C @ Bk @ Bd).item()
    M = Ad @ Bk
    for k in range(1, n):
        ck = -np.trace(M) / k
        den[k] = ck
        Bk = M + ck * np.eye(n)
        num[k + 1] = (C @ Bk @ Bd).item()
        M = Ad @ Bk
    den[n] = -np.trace(M) / n
    num = num + D * den
    return RationalTF(Poly(num), Poly(den), sample_time)


# ---------------------------------------------------------------------------
# numeric composition of the force loop (no closed-form loop formulas)

def _plant_velocity_tf(cfg: ForceLoopConfig) -> RationalTF:
    """ZOH-discrete transfer function from motor current to sampled velocity
    of the engaged spring-damper plant."""
    s = cfg.servo
    env = cfg.env
    A = np.array([
        [0.0, 1.0],
        [-env.K_env / s.J_m, -env.D_env / s.J_m],
    ])
    B = np.array([[0.0], [s.K_tau / s.J_m]])
    Ad, Bd = zoh_ab(A, B, cfg.gains.T_s)
    return ss_to_tf(Ad, Bd, np.array([0.0, 1.0]), 0.0, cfg.gains.T_s)


def compose_loop_numeric(cfg: ForceLoopConfig, tol: float = CANCEL_TOL_DEFAULT) -> RationalTF:
    """Open-loop force transfer function re-derived by block composition.

    Composes the exact ZOH plant, the backward-difference acceleration path
    and the two Backward-Euler observers purely by transfer-function algebra,
    then reduces the result by explicit cancellation.  The servo parameters
    are taken from the materialized ServoParams (a ratio_override must be
    materialized by the caller; the config layer does this).
    """
    s = cfg.servo
    g = cfg.gains
    Ts = g.T_s
    one = RationalTF.constant(1.0, Ts)

    p_v = _plant_velocity_tf(cfg)
    bd = RationalTF(Poly([1.0, -1.0]), Poly([Ts, 0.0]), Ts)  # backward difference
    accel_meas = tf_series(bd, p_v)                          # current -> measured accel

    q_dob = RationalTF(Poly([g.g_dob * Ts, 0.0]), Poly([1.0 + g.g_dob * Ts, -1.0]), Ts)
    q_rtob = RationalTF(Poly([g.g_rtob * Ts, 0.0]), Poly([1.0 + g.g_rtob * Ts, -1.0]), Ts)

    c_nom = s.J_mn / s.K_tau_n
    # inner loop solved for current per desired acceleration:
    #   I = c*qdd_des + Q_dob*(I - c*accel_meas*I)
    #   I/qdd_des = c / (1 - Q_dob*(1 - c*accel_meas))
    inner_gap = RationalTF(
        (one.num * accel_meas.den) + Poly([-c_nom]) * accel_meas.num,
        accel_meas.den, Ts)                                   # 1 - c*accel_meas
    loop_gain = tf_series(q_dob, inner_gap)
    denom_tf = RationalTF(loop_gain.den - loop_gain.num, loop_gain.den, Ts)  # 1 - Q*(...)
    current_per_qdd = RationalTF(Poly([c_nom]) * denom_tf.den, denom_tf.num, Ts)

    # torque observer: tau_hat/I = Q_rtob*(K_tau_i - J_mi*accel_meas)
    est_gap = RationalTF(
        Poly([s.K_tau_i]) * accel_meas.den + Poly([-s.J_mi]) * accel_meas.num,
        accel_meas.den, Ts)
    tau_hat_per_current = tf_series(q_rtob, est_gap)

    loop = tf_series(current_per_qdd, tau_hat_per_current)
    loop = RationalTF(cfg.C_tau * loop.num, loop.den, Ts)
    return cancel(loop, tol)


def arbitrate_exponent_convention(cfg: ForceLoopConfig, n_probe: int = 16):
    """Decide which decay-exponent convention reproduces the composed loop.

    Evaluates the numeric composition and both closed-form variants on a set
    of unit-circle probe points and returns (winning convention, residuals)
    where residuals maps convention name to the max relative deviation.
    """
    from dataclasses import replace as _replace

    from .dlti import evaluate_many
    from .models import force_open_loop

    numeric = compose_loop_numeric(cfg)
    theta = np.linspace(0.05, 2.9, n_probe)
    z = np.exp(1j * theta)
    ref = evaluate_many(numeric, z)
    residuals = {}
    for conv in (XI_OMEGA0, XI_OMEGA_N):
        variant = _replace(cfg, env=_replace(cfg.env, exponent_convention=conv))
        vals = evaluate_many(force_open_loop(variant), z)
        residuals[conv] = float(np.max(np.abs(vals - ref) / np.maximum(np.abs(ref), 1e-30)))
    winner = min(residuals, key=residuals.get)
    # a tie within tolerance (undamped environment) resolves to the default
    if abs(residuals[XI_OMEGA0] - residuals[XI_OMEGA_N]) < 1e-12:
        winner = XI_OMEGA0
    return winner, residuals


# ---------------------------------------------------------------------------
# reference quadrature

def reference_quadrature(f, n: int) -> float:
    """Composite midpoint estimate of the integral of f over (-pi, pi) with a
    Richardson refinement from the n- and 2n-point rules."""
    if n < 2 or (n & (n - 1)) != 0:
        raise InvalidInputError(f"n must be a power of two >= 2, got {n}")

    def midpoint(m):
        h = 2.0 * math.pi / m
        theta = -math.pi + (np.arange(m) + 0.5) * h
        vals = np.asarray(f(theta), dtype=float)
        if not np.all(np.isfinite(vals)):
            bad = int(np.argmax(~np.isfinite(vals)))
            raise SingularSampleError(theta[bad], vals[bad])
        return float(np.sum(vals) * h)

    coarse = midpoint(n)
    fine = midpoint(2 * n)
    return (4.0 * fine - coarse) / 3.0
