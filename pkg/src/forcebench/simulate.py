"""Time-domain closed-loop simulation of the digital force controller.

A continuous rigid-body plant with an optional spring-damper environment is
discretized exactly (matrix exponential) between controller samples and
driven by the digital controller: Backward-Euler disturbance observer in the
inner loop, Backward-Euler reaction-torque observer in the outer loop, and a
proportional force gain.  Both observers have direct feedthrough from the
commanded current, so each controller step solves the resulting linear
algebraic loop in closed form.  For matched parameters, bilateral contact and
zero noise the simulated loop reproduces the closed-form transfer functions
exactly (up to roundoff), which is what the linear-response oracle checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dlti import RationalTF, cancel, step_response, tf_feedback
from .errors import InvalidInputError
from .models import EnvModel, ForceLoopConfig, force_open_loop
from .oracle import zoh_ab

BLOWUP_BOUND = 1e9


@dataclass(frozen=True)
class SignalSpec:
    """Sampled scalar signal: constant, step at t0, or an explicit sequence."""

    kind: str = "constant"
    value: float = 0.0
    t0: float = 0.0
    samples: tuple = ()

    def __post_init__(self):
        if self.kind not in ("constant", "step", "samples"):
            raise InvalidInputError(f"unknown signal kind {self.kind!r}")
        if self.kind == "samples" and len(self.samples) == 0:
            raise InvalidInputError("sampled signal needs at least one sample")

    @classmethod
    def constant(cls, value):
        return cls("constant", value)

    @classmethod
    def step(cls, value, t0=0.0):
        return cls("step", value, t0)

    def as_array(self, n, T_s):
        t = np.arange(n) * T_s
        if self.kind == "constant":
            return np.full(n, self.value)
        if self.kind == "step":
            return np.where(t >= self.t0 - 1e-12 * T_s, self.value, 0.0)
        seq = np.asarray(self.samples, dtype=float)
        out = np.zeros(n)
        m = min(n, len(seq))
        out[:m] = seq[:m]
        if n > m:
            out[m:] = seq[-1]
        return out

    @property
    def final_value(self):
        if self.kind == "samples":
            return float(self.samples[-1])
        return self.value


@dataclass(frozen=True)
class NoiseSpec:
    """Zero-mean Gaussian velocity-measurement noise; sigma = 0 disables it."""

    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise InvalidInputError(f"noise sigma must be >= 0, got {self.sigma}")


def _box_muller(rng: np.random.Generator, n: int) -> np.ndarray:
    """n standard-normal draws via Box-Muller over PCG64 uniforms."""
    m = (n + 1) // 2
    u1 = 1.0 - rng.random(m)  # in (0, 1]
    u2 = rng.random(m)
    r = np.sqrt(-2.0 * np.log(u1))
    out = np.empty(2 * m)
    out[0::2] = r * np.cos(2.0 * math.pi * u2)
    out[1::2] = r * np.sin(2.0 * math.pi * u2)
    return out[:n]


@dataclass(frozen=True)
class SimScenario:
    """Closed-loop simulation input."""

    cfg: ForceLoopConfig
    duration: float
    tau_ref: SignalSpec = field(default_factory=lambda: SignalSpec.constant(0.0))
    tau_d: SignalSpec = field(default_factory=lambda: SignalSpec.constant(0.0))
    tau_di: SignalSpec = field(default_factory=lambda: SignalSpec.constant(0.0))
    contact_mode: str = "bilateral"
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    substeps: int = 1
    q0: float = 0.0
    dq0: float = 0.0
    open_loop: bool = False

    def __post_init__(self):
        if not (self.duration > 0 and math.isfinite(self.duration)):
            raise InvalidInputError(f"duration must be positive, got {self.duration}")
        if self.substeps < 1:
            raise InvalidInputError(f"substeps must be >= 1, got {self.substeps}")
        if self.contact_mode not in ("bilateral", "unilateral"):
            raise InvalidInputError(f"unknown contact mode {self.contact_mode!r}")


@dataclass(frozen=True)
class SimTrace:
    """Per-controller-sample record of one simulation run."""

    sample_time: float
    t: np.ndarray
    q: np.ndarray
    dq: np.ndarray
    ddq: np.ndarray
    current: np.ndarray
    tau_c: np.ndarray
    tau_c_hat: np.ndarray
    tau_dis_hat: np.ndarray
    ddq_des: np.ndarray
    tau_ref: np.ndarray
    diverged: bool
    diverged_at: int | None


@dataclass(frozen=True)
class ResponseMetrics:
    """Step metrics of the contact-torque response."""

    steady_state_error: float
    overshoot_pct: float
    settling_time: float
    settled: bool
    rms_estimation_error: float
    diverged: bool


def zoh_plant(J_m: float, env: EnvModel, engaged: bool, dt: float):
    """Exact discrete update (A_d, B_d) of the rigid body over dt.

    State (q, dq), input the net shaft torque K_tau*I - tau_d.  Engaged
    contact adds the environment spring and damper to the continuous A.
    """
    if not (dt > 0):
        raise InvalidInputError(f"dt must be positive, got {dt}")
    if engaged:
        A = np.array([[0.0, 1.0], [-env.K_env / J_m, -env.D_env / J_m]])
    else:
        A = np.array([[0.0, 1.0], [0.0, 0.0]])
    B = np.array([[0.0], [1.0 / J_m]])
    return zoh_ab(A, B, dt)


def run_simulation(scn: SimScenario) -> SimTrace:
    """Run the digital force-control loop; deterministic given the seed.

    Controller step k: sample the velocity (plus noise), solve the coupled
    observer/controller equations for the current command, record, then
    advance the plant by `substeps` exact updates with the current held.
    In unilateral mode the environment disengages whenever q < 0, checked at
    substep granularity.
    """
    cfg = scn.cfg
    s = cfg.servo
    g = cfg.gains
    Ts = g.T_s
    n = int(math.floor(scn.duration / Ts)) + 1

    tau_ref = scn.tau_ref.as_array(n, Ts)
    tau_d = scn.tau_d.as_array(n, Ts)
    tau_di = scn.tau_di.as_array(n, Ts)
    if scn.noise.sigma > 0:
        rng = np.random.Generator(np.random.PCG64(scn.noise.seed))
        eta = scn.noise.sigma * _box_muller(rng, n)
    else:
        eta = np.zeros(n)

    dt = Ts / scn.substeps
    ad_on, bd_on = zoh_plant(s.J_m, cfg.env, True, dt)
    ad_off, bd_off = zoh_plant(s.J_m, cfg.env, False, dt)

    # Backward-Euler filter constants: y_k = a*u_k + b*y_{k-1}
    a_d = g.g_dob * Ts / (1.0 + g.g_dob * Ts)
    b_d = 1.0 / (1.0 + g.g_dob * Ts)
    a_r = g.g_rtob * Ts / (1.0 + g.g_rtob * Ts)
    b_r = 1.0 / (1.0 + g.g_rtob * Ts)
    c_nom = s.J_mn / s.K_tau_n
    vel_gain_dob = g.g_dob * c_nom
    vel_gain_rtob = g.g_rtob * s.J_mi

    cols = {name: np.zeros(n) for name in
            ("q", "dq", "ddq", "current", "tau_c", "tau_c_hat", "tau_dis_hat", "ddq_des")}
    x = np.array([scn.q0, scn.dq0])
    y_dob = 0.0
    w_rtob = 0.0
    diverged_at = None

    for k in range(n):
        q_k, dq_k = x
        engaged = scn.contact_mode == "bilateral" or q_k >= 0.0
        tau_c_k = cfg.env.K_env * q_k + cfg.env.D_env * dq_k if engaged else 0.0
        dq_meas = dq_k + eta[k]

        # solve the observer/controller algebraic loop for the current:
        #   i_dis = a_d*(I + vel_gain_dob*dq_meas) + b_d*y_dob - vel_gain_dob*dq_meas
        #   tau_hat = a_r*(K_tau_i*I + vel_gain_rtob*dq_meas - tau_di) + b_r*w - vel_gain_rtob*dq_meas
        #   I = c_nom*C_tau*(tau_ref - tau_hat) + i_dis        (0 in open loop)
        p_term = (a_d - 1.0) * vel_gain_dob * dq_meas + b_d * y_dob
        r_term = (a_r - 1.0) * vel_gain_rtob * dq_meas - a_r * tau_di[k] + b_r * w_rtob
        if scn.open_loop:
            current = 0.0
        else:
            gain = c_nom * cfg.C_tau
            current = (gain * (tau_ref[k] - r_term) + p_term) / (
                1.0 - a_d + gain * a_r * s.K_tau_i)
        i_dis = a_d * current + p_term
        tau_hat = a_r * s.K_tau_i * current + r_term
        ddq_des = cfg.C_tau * (tau_ref[k] - tau_hat)
        ddq = (s.K_tau * current - tau_d[k] - tau_c_k) / s.J_m

        cols["q"][k] = q_k
        cols["dq"][k] = dq_k
        cols["ddq"][k] = ddq
        cols["current"][k] = current
        cols["tau_c"][k] = tau_c_k
        cols["tau_c_hat"][k] = tau_hat
        cols["tau_dis_hat"][k] = s.K_tau_n * i_dis
        cols["ddq_des"][k] = ddq_des

        state_scale = max(abs(q_k), abs(dq_k), abs(current), abs(tau_hat), abs(i_dis))
        if not math.isfinite(state_scale) or state_scale > BLOWUP_BOUND:
            diverged_at = k
            n = k + 1
            break

        y_dob = a_d * (current + vel_gain_dob * dq_meas) + b_d * y_dob
        w_rtob = a_r * (s.K_tau_i * current + vel_gain_rtob * dq_meas - tau_di[k]) + b_r * w_rtob

        u_torque = s.K_tau * current - tau_d[k]
        for _ in range(scn.substeps):
            engaged_sub = scn.contact_mode == "bilateral" or x[0] >= 0.0
            if engaged_sub:
                x = ad_on @ x + bd_on[:, 0] * u_torque
            else:
                x = ad_off @ x + bd_off[:, 0] * u_torque

    t = np.arange(n) * Ts
    return SimTrace(
        sample_time=Ts,
        t=t,
        q=cols["q"][:n], dq=cols["dq"][:n], ddq=cols["ddq"][:n],
        current=cols["current"][:n], tau_c=cols["tau_c"][:n],
        tau_c_hat=cols["tau_c_hat"][:n], tau_dis_hat=cols["tau_dis_hat"][:n],
        ddq_des=cols["ddq_des"][:n], tau_ref=tau_ref[:n],
        diverged=diverged_at is not None, diverged_at=diverged_at,
    )


def linear_response_oracle(scn: SimScenario) -> np.ndarray:
    """Closed-form response of the estimated contact torque to the reference.

    Builds tau_ref -> tau_hat as the unity feedback of the open-loop transfer
    function and drives its exact difference equation with the scenario's
    reference samples.  Valid for the ideal linear setting only.
    """
    if scn.contact_mode != "bilateral":
        raise InvalidInputError("the linear oracle assumes bilateral contact")
    if scn.noise.sigma != 0:
        raise InvalidInputError("the linear oracle assumes zero measurement noise")
    n = int(math.floor(scn.duration / scn.cfg.gains.T_s)) + 1
    closed = cancel(tf_feedback(force_open_loop(scn.cfg)))
    ref = scn.tau_ref.as_array(n, scn.cfg.gains.T_s)
    if scn.tau_ref.kind == "samples":
        raise InvalidInputError("the linear oracle supports constant and step references")
    # constant or step reference: scaled/shifted unit step
    start = int(np.argmax(ref != 0.0)) if np.any(ref != 0.0) else n
    amplitude = scn.tau_ref.final_value
    y = np.zeros(n)
    if start < n and amplitude != 0.0:
        y[start:] = amplitude * step_response(closed, n - start)
    return y


def compute_metrics(trace: SimTrace, final_ref: float) -> ResponseMetrics:
    """Standard step metrics of tau_c against the final reference value.

    Steady-state error comes from the mean of the final 10% of samples;
    settling is to the +-2% band (of |final_ref|); a diverged trace gets its
    overshoot from the pre-divergence prefix and is marked unsettled.
    """
    if len(trace.t) == 0:
        raise InvalidInputError("empty trace")
    tau = trace.tau_c
    est_err = trace.tau_c_hat - trace.tau_c
    rms = float(np.sqrt(np.mean(est_err ** 2)))
    tail = tau[-max(1, len(tau) // 10):]
    ss_error = abs(float(np.mean(tail)) - final_ref)
    if final_ref != 0.0:
        overshoot = max(0.0, (float(np.max(tau * np.sign(final_ref))) - abs(final_ref))
                        / abs(final_ref) * 100.0)
    else:
        overshoot = 0.0
    if trace.diverged:
        return ResponseMetrics(ss_error, overshoot, math.nan, False, rms, True)
    band = 0.02 * abs(final_ref)
    outside = np.abs(tau - final_ref) > band
    if not np.any(outside):
        settling, settled = 0.0, True
    else:
        last_out = int(np.max(np.nonzero(outside)[0]))
        if last_out == len(tau) - 1:
            settling, settled = math.nan, False
        else:
            settling, settled = float(trace.t[last_out + 1]), True
    return ResponseMetrics(ss_error, overshoot, settling, settled, rms, False)
