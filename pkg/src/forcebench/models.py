"""Servo, observer and environment parameter records plus the closed-form
transfer-function builders for the inner disturbance-observer loop, the
reaction-torque-observer filter and the outer force loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .dlti import Poly, RationalTF, tf_series
from .errors import InvalidInputError, UnsupportedModelError

XI_OMEGA0 = "xi-omega0"
XI_OMEGA_N = "xi-omega-n"

#: shipped bench-scale defaults for reproduction runs (the standard figure set)
DEFAULT_PLANT = {
    "J_m": 0.1,       # kg*m^2
    "K_tau": 0.5,     # N*m/A
    "K_env": 4000.0,  # N*m/rad
    "D_env": 12.0,    # N*m*s/rad; xi ~ 0.3, omega_n*T_s ~ 0.19 at T_s = 1 ms
}


def _require_positive(**values):
    for name, v in values.items():
        if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
            raise InvalidInputError(f"{name} must be a positive finite number, got {v}")


@dataclass(frozen=True)
class ServoParams:
    """Actual, nominal (inner observer) and identified (torque observer)
    inertia / torque-coefficient pairs, all strictly positive."""

    J_m: float
    K_tau: float
    J_mn: float
    K_tau_n: float
    J_mi: float
    K_tau_i: float

    def __post_init__(self):
        _require_positive(J_m=self.J_m, K_tau=self.K_tau, J_mn=self.J_mn,
                          K_tau_n=self.K_tau_n, J_mi=self.J_mi, K_tau_i=self.K_tau_i)

    @classmethod
    def matched(cls, J_m=DEFAULT_PLANT["J_m"], K_tau=DEFAULT_PLANT["K_tau"]):
        """Nominal and identified values equal to the actual plant."""
        return cls(J_m, K_tau, J_m, K_tau, J_m, K_tau)


@dataclass(frozen=True)
class DerivedRatios:
    """Dimensionless mismatch ratios; delta = alpha/beta always."""

    alpha: float
    beta: float
    delta: float

    def __post_init__(self):
        _require_positive(alpha=self.alpha, beta=self.beta, delta=self.delta)
        if abs(self.delta - self.alpha / self.beta) > 1e-12 * abs(self.delta):
            raise InvalidInputError(
                f"delta={self.delta} inconsistent with alpha/beta={self.alpha / self.beta}"
            )

    @classmethod
    def from_alpha_delta(cls, alpha, delta):
        return cls(alpha, alpha / delta, delta)

    @classmethod
    def from_alpha_beta(cls, alpha, beta):
        return cls(alpha, beta, alpha / beta)


def derived_ratios(servo: ServoParams) -> DerivedRatios:
    """Mismatch ratios of a servo parameter set.

    beta = (J_mn*K_tau_i)/(J_mi*K_tau_n) as printed; alpha uses the
    self-consistent convention alpha = (J_mn*K_tau)/(J_m*K_tau_n), which makes
    delta = alpha/beta = (J_mi*K_tau)/(J_m*K_tau_i) rise with identified
    inertia and fall with identified torque coefficient.
    """
    alpha = (servo.J_mn * servo.K_tau) / (servo.J_m * servo.K_tau_n)
    beta = (servo.J_mn * servo.K_tau_i) / (servo.J_mi * servo.K_tau_n)
    return DerivedRatios(alpha, beta, alpha / beta)


@dataclass(frozen=True)
class ObserverGains:
    """Observer bandwidths (rad/s) and the controller sample time (s)."""

    g_dob: float
    g_rtob: float
    T_s: float

    def __post_init__(self):
        _require_positive(g_dob=self.g_dob, g_rtob=self.g_rtob, T_s=self.T_s)


@dataclass(frozen=True)
class EnvModel:
    """Spring-damper environment plus the inertia bound to its modal form.

    Only underdamped (xi < 1) environments are representable by the cos/sinc
    coefficient formulas, so overdamped models are rejected.  The degenerate
    free-space case K_env = D_env = 0 is kept and handled by explicit limits
    (decay factor, cosine and sinc all equal to 1).
    """

    K_env: float
    D_env: float
    m_bind: float
    exponent_convention: str = XI_OMEGA0

    def __post_init__(self):
        if not (self.K_env >= 0 and math.isfinite(self.K_env)):
            raise InvalidInputError(f"K_env must be >= 0, got {self.K_env}")
        if not (self.D_env >= 0 and math.isfinite(self.D_env)):
            raise InvalidInputError(f"D_env must be >= 0, got {self.D_env}")
        _require_positive(m_bind=self.m_bind)
        if self.exponent_convention not in (XI_OMEGA0, XI_OMEGA_N):
            raise InvalidInputError(
                f"exponent_convention must be {XI_OMEGA0!r} or {XI_OMEGA_N!r}"
            )
        if self.K_env == 0.0 and self.D_env > 0.0:
            raise UnsupportedModelError(
                "K_env = 0 with D_env > 0 has no underdamped mode (xi diverges)"
            )
        if self.K_env > 0.0 and self.xi >= 1.0:
            raise UnsupportedModelError(
                f"overdamped environment (xi = {self.xi:.4g} >= 1) is not representable"
            )

    @property
    def free_space(self):
        return self.K_env == 0.0 and self.D_env == 0.0

    @property
    def omega0(self):
        return math.sqrt(self.K_env / self.m_bind)

    @property
    def xi(self):
        if self.K_env == 0.0:
            return 0.0
        return self.D_env / (2.0 * self.omega0 * self.m_bind)

    @property
    def omega_n(self):
        return self.omega0 * math.sqrt(1.0 - self.xi ** 2)


def env_discrete_factors(env: EnvModel, T_s: float):
    """(E, C, S) = (decay factor, cos(omega_n*T_s), sinc(omega_n*T_s)).

    E uses omega0 or omega_n in the exponent per env.exponent_convention.
    Raises if the environment mode is at or above the Nyquist rate.
    """
    _require_positive(T_s=T_s)
    if env.free_space:
        return 1.0, 1.0, 1.0
    wn_Ts = env.omega_n * T_s
    if wn_Ts >= math.pi:
        raise InvalidInputError(
            f"environment mode omega_n*T_s = {wn_Ts:.4g} is not below the Nyquist rate pi"
        )
    w_exp = env.omega0 if env.exponent_convention == XI_OMEGA0 else env.omega_n
    E = math.exp(-env.xi * w_exp * T_s)
    C = math.cos(wn_Ts)
    S = math.sin(wn_Ts) / wn_Ts if wn_Ts > 0 else 1.0
    return E, C, S


@dataclass(frozen=True)
class ForceLoopConfig:
    """Everything the outer force loop needs: gain, servo, observers, environment."""

    C_tau: float
    servo: ServoParams
    gains: ObserverGains
    env: EnvModel
    ratio_override: DerivedRatios | None = None

    def __post_init__(self):
        if not (self.C_tau >= 0 and math.isfinite(self.C_tau)):
            raise InvalidInputError(f"C_tau must be >= 0, got {self.C_tau}")

    @property
    def ratios(self) -> DerivedRatios:
        if self.ratio_override is not None:
            return self.ratio_override
        return derived_ratios(self.servo)

    def with_gain(self, C_tau) -> "ForceLoopConfig":
        return replace(self, C_tau=C_tau)


# ---------------------------------------------------------------------------
# inner-loop closed forms

def inner_sensitivity(alpha: float, gains: ObserverGains) -> RationalTF:
    """S(z) = (z-1)/(z-(1-alpha*g_dob*T_s))."""
    _require_positive(alpha=alpha)
    a = alpha * gains.g_dob * gains.T_s
    return RationalTF(Poly([1.0, -1.0]), Poly([1.0, -(1.0 - a)]), gains.T_s)


def inner_complementary(alpha: float, gains: ObserverGains) -> RationalTF:
    """T(z) = alpha*g_dob*T_s/(z-(1-alpha*g_dob*T_s)); S + T = 1."""
    _require_positive(alpha=alpha)
    a = alpha * gains.g_dob * gains.T_s
    return RationalTF(Poly([a]), Poly([1.0, -(1.0 - a)]), gains.T_s)


def inner_open_loop(alpha: float, gains: ObserverGains) -> RationalTF:
    """L(z) = alpha*g_dob*T_s/(z-1), the inner loop opened at the estimate."""
    _require_positive(alpha=alpha)
    a = alpha * gains.g_dob * gains.T_s
    return RationalTF(Poly([a]), Poly([1.0, -1.0]), gains.T_s)


def inner_accel_tracking(alpha: float, gains: ObserverGains) -> RationalTF:
    """Desired-to-actual acceleration transfer, a first-order lead/lag with
    unit DC gain: alpha*((1+g_dob*T_s)z - 1)/(z-(1-alpha*g_dob*T_s))."""
    _require_positive(alpha=alpha)
    g = gains.g_dob * gains.T_s
    return RationalTF(
        Poly([alpha * (1.0 + g), -alpha]),
        Poly([1.0, -(1.0 - alpha * g)]),
        gains.T_s,
    )


# ---------------------------------------------------------------------------
# reaction-torque-observer closed forms

def rtob_filter(gains: ObserverGains) -> RationalTF:
    """Backward-Euler low-pass Q(z) = g_rtob*T_s*z/((1+g_rtob*T_s)z - 1).

    Unit DC gain, single pole at 1/(1+g_rtob*T_s), always stable.
    """
    g = gains.g_rtob * gains.T_s
    return RationalTF(Poly([g, 0.0]), Poly([1.0 + g, -1.0]), gains.T_s)


@dataclass(frozen=True)
class EstimationErrorPair:
    """Two-input description of the torque-estimate: tau_hat =
    from_contact*tau_c + from_mismatch*(tau_di - tau_d)."""

    from_contact: RationalTF
    from_mismatch: RationalTF


def rtob_estimation_error_tf(gains: ObserverGains) -> EstimationErrorPair:
    """Estimation transfer pair (Q, -Q) for the matched-parameter observer."""
    q = rtob_filter(gains)
    return EstimationErrorPair(q, tf_series(RationalTF.constant(-1.0, gains.T_s), q))


# ---------------------------------------------------------------------------
# force-loop open loop

def phi_polys(env: EnvModel, ratios: DerivedRatios, gains: ObserverGains):
    """Numerator and denominator cubics of the plant/environment factor.

    With E, C, S from env_discrete_factors and a = alpha*g_dob*T_s:

        phi_n = z^3 - (2EC + delta*E*S) z^2 + (E^2 + 2 delta*E*S) z - delta*E*S
        phi_d = z^3 - (2EC - a*E*S) z^2 + (E^2 - a*E*S) z

    In the free-space limit these factor exactly as (z-1)^2 (z-delta) and
    z (z-1) (z-(1-a)).
    """
    E, C, S = env_discrete_factors(env, gains.T_s)
    d_es = ratios.delta * E * S
    a_es = ratios.alpha * gains.g_dob * gains.T_s * E * S
    phi_n = Poly([1.0, -(2.0 * E * C + d_es), E * E + 2.0 * d_es, -d_es])
    phi_d = Poly([1.0, -(2.0 * E * C - a_es), E * E - a_es, 0.0])
    return phi_n, phi_d


def force_open_loop(cfg: ForceLoopConfig) -> RationalTF:
    """Open-loop transfer function of the digital force controller.

    Assembled as gain * (T_s z/(z-1)) * lead/lag * phi_n/phi_d where the
    scalar gain is C_tau*J_mi*g_rtob*beta.  (The matched-case form of the
    gain is C_tau*J_m*g_rtob*beta; the identified-inertia version is the one
    the block diagram actually produces and equals J_mn*K_tau_i/K_tau_n,
    which is what is used here.)  The loop always carries an exact pole at
    z = 1: the integral action that removes steady-state force error.
    """
    ratios = cfg.ratios
    gains = cfg.gains
    if cfg.ratio_override is not None:
        # equal-torque-coefficient realization implied by a ratio override
        k0 = cfg.C_tau * gains.g_rtob * ratios.alpha * cfg.servo.J_m
    else:
        k0 = cfg.C_tau * gains.g_rtob * cfg.servo.J_mn * cfg.servo.K_tau_i / cfg.servo.K_tau_n
    phi_n, phi_d = phi_polys(cfg.env, ratios, gains)
    integ = RationalTF(Poly([gains.T_s, 0.0]), Poly([1.0, -1.0]), gains.T_s)
    leadlag = RationalTF(
        Poly([1.0 + gains.g_dob * gains.T_s, -1.0]),
        Poly([1.0 + gains.g_rtob * gains.T_s, -1.0]),
        gains.T_s,
    )
    phi = RationalTF(phi_n, phi_d, gains.T_s)
    loop = tf_series(tf_series(integ, leadlag), phi)
    return RationalTF(k0 * loop.num, loop.den, gains.T_s)


def unit_gain_force_loop(cfg: ForceLoopConfig) -> RationalTF:
    """force_open_loop at C_tau = 1, for root loci and critical-gain sweeps."""
    return force_open_loop(cfg.with_gain(1.0))
