"""Structured-text run configuration: flat TOML sections with documented
desk-scale defaults, strict unknown-key rejection, and a writer so parsed
configs round-trip to an equivalent normalized form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .errors import ConfigError
from .models import (
    XI_OMEGA0,
    XI_OMEGA_N,
    DerivedRatios,
    EnvModel,
    ForceLoopConfig,
    ObserverGains,
    ServoParams,
)
from .simulate import NoiseSpec, SignalSpec, SimScenario

# section -> key -> (default, type); None defaults resolve in normalization
_SCHEMA = {
    "plant": {"J_m": (0.1, float), "K_tau": (0.5, float)},
    "nominal": {"J_mn": (None, float), "K_tau_n": (None, float)},
    "identified": {"J_mi": (None, float), "K_tau_i": (None, float)},
    "observer": {"g_dob": (500.0, float), "g_rtob": (500.0, float), "T_s": (1e-3, float)},
    "force": {"C_tau": (0.6, float)},
    "environment": {
        "K_env": (4000.0, float),
        "D_env": (12.0, float),
        "m_bind": (None, float),
        "exponent_convention": (XI_OMEGA0, str),
    },
    "simulation": {
        "duration": (5.0, float),
        "tau_ref_mode": ("step", str),
        "tau_ref_value": (1.0, float),
        "tau_ref_time": (0.0, float),
        "tau_ref_samples": ((), tuple),
        "tau_d": (0.0, float),
        "tau_di": (0.0, float),
        "contact": ("bilateral", str),
        "noise_sigma": (0.0, float),
        "seed": (0, int),
        "substeps": (1, int),
        "q0": (0.0, float),
        "dq0": (0.0, float),
    },
    "ratio_override": {"alpha": (None, float), "beta": (None, float), "delta": (None, float)},
    "sweep": {
        "alpha": ((1.0,), tuple),
        "delta": ((1.0,), tuple),
        "g_dob": ((500.0,), tuple),
        "g_rtob": ((500.0,), tuple),
        "T_s": ((1e-3,), tuple),
        "bode_points": (2 ** 16, int),
        "gain_lo": (1e-4, float),
        "gain_hi": (1e4, float),
    },
}


@dataclass(frozen=True)
class RunConfig:
    """Normalized configuration: every schema value resolved to a concrete one."""

    J_m: float
    K_tau: float
    J_mn: float
    K_tau_n: float
    J_mi: float
    K_tau_i: float
    g_dob: float
    g_rtob: float
    T_s: float
    C_tau: float
    K_env: float
    D_env: float
    m_bind: float
    exponent_convention: str
    duration: float
    tau_ref_mode: str
    tau_ref_value: float
    tau_ref_time: float
    tau_ref_samples: tuple
    tau_d: float
    tau_di: float
    contact: str
    noise_sigma: float
    seed: int
    substeps: int
    q0: float
    dq0: float
    ratio_alpha: float | None
    ratio_beta: float | None
    ratio_delta: float | None
    sweep_alpha: tuple
    sweep_delta: tuple
    sweep_g_dob: tuple
    sweep_g_rtob: tuple
    sweep_T_s: tuple
    sweep_bode_points: int
    sweep_gain_lo: float
    sweep_gain_hi: float

    @property
    def has_ratio_override(self):
        return self.ratio_delta is not None

    def ratios(self) -> DerivedRatios | None:
        if not self.has_ratio_override:
            return None
        return DerivedRatios(self.ratio_alpha, self.ratio_beta, self.ratio_delta)

    def servo(self) -> ServoParams:
        return ServoParams(self.J_m, self.K_tau, self.J_mn, self.K_tau_n,
                           self.J_mi, self.K_tau_i)

    def gains(self) -> ObserverGains:
        return ObserverGains(self.g_dob, self.g_rtob, self.T_s)

    def env(self) -> EnvModel:
        return EnvModel(self.K_env, self.D_env, self.m_bind, self.exponent_convention)

    def force_loop(self) -> ForceLoopConfig:
        return ForceLoopConfig(self.C_tau, self.servo(), self.gains(), self.env(),
                               ratio_override=self.ratios())

    def scenario(self, seed: int | None = None) -> SimScenario:
        if self.tau_ref_mode == "samples":
            ref = SignalSpec("samples", samples=self.tau_ref_samples)
        elif self.tau_ref_mode == "step":
            ref = SignalSpec.step(self.tau_ref_value, self.tau_ref_time)
        else:
            ref = SignalSpec.constant(self.tau_ref_value)
        return SimScenario(
            cfg=self.force_loop(),
            duration=self.duration,
            tau_ref=ref,
            tau_d=SignalSpec.constant(self.tau_d),
            tau_di=SignalSpec.constant(self.tau_di),
            contact_mode=self.contact,
            noise=NoiseSpec(self.noise_sigma, self.seed if seed is None else seed),
            substeps=self.substeps,
            q0=self.q0,
            dq0=self.dq0,
        )


def _find_line(text: str, section: str, key: str | None) -> int:
    """Best-effort line number of a section header or of a key inside it."""
    in_section = False
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("["):
            in_section = stripped == f"[{section}]"
            if in_section and key is None:
                return i
        elif in_section and key is not None:
            before_comment = stripped.split("#", 1)[0]
            if before_comment.split("=", 1)[0].strip() == key:
                return i
    return 0


def _coerce(section, key, value, want, text):
    line = _find_line(text, section, key)
    where = f"line {line}: [{section}] {key}"
    if want is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if want is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return int(value)
    if want is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    if want is tuple:
        if not isinstance(value, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            raise ConfigError(f"{where}: expected an array of numbers, got {value!r}")
        return tuple(float(v) for v in value)
    raise AssertionError(want)


def parse_config(text: str) -> RunConfig:
    """Parse and normalize a configuration document.

    Unknown sections or keys are hard errors carrying the offending line
    number; missing values take the documented desk-scale defaults.
    """
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config syntax error: {exc}") from None

    values = {}
    for section, content in raw.items():
        if section not in _SCHEMA:
            raise ConfigError(
                f"line {_find_line(text, section, None)}: unknown section [{section}]")
        if not isinstance(content, dict):
            raise ConfigError(f"[{section}] must be a section, got {content!r}")
        for key, value in content.items():
            if key not in _SCHEMA[section]:
                raise ConfigError(
                    f"line {_find_line(text, section, key)}: unknown key "
                    f"{key!r} in section [{section}]")
            values[(section, key)] = _coerce(section, key, value,
                                             _SCHEMA[section][key][1], text)

    def get(section, key):
        return values.get((section, key), _SCHEMA[section][key][0])

    J_m = get("plant", "J_m")
    K_tau = get("plant", "K_tau")
    kw = dict(
        J_m=J_m, K_tau=K_tau,
        J_mn=get("nominal", "J_mn") if get("nominal", "J_mn") is not None else J_m,
        K_tau_n=get("nominal", "K_tau_n") if get("nominal", "K_tau_n") is not None else K_tau,
        J_mi=get("identified", "J_mi") if get("identified", "J_mi") is not None else J_m,
        K_tau_i=get("identified", "K_tau_i") if get("identified", "K_tau_i") is not None else K_tau,
        g_dob=get("observer", "g_dob"), g_rtob=get("observer", "g_rtob"),
        T_s=get("observer", "T_s"), C_tau=get("force", "C_tau"),
        K_env=get("environment", "K_env"), D_env=get("environment", "D_env"),
        m_bind=get("environment", "m_bind") if get("environment", "m_bind") is not None else J_m,
        exponent_convention=get("environment", "exponent_convention"),
        duration=get("simulation", "duration"),
        tau_ref_mode=get("simulation", "tau_ref_mode"),
        tau_ref_value=get("simulation", "tau_ref_value"),
        tau_ref_time=get("simulation", "tau_ref_time"),
        tau_ref_samples=get("simulation", "tau_ref_samples"),
        tau_d=get("simulation", "tau_d"), tau_di=get("simulation", "tau_di"),
        contact=get("simulation", "contact"),
        noise_sigma=get("simulation", "noise_sigma"),
        seed=get("simulation", "seed"), substeps=get("simulation", "substeps"),
        q0=get("simulation", "q0"), dq0=get("simulation", "dq0"),
        ratio_alpha=values.get(("ratio_override", "alpha")),
        ratio_beta=values.get(("ratio_override", "beta")),
        ratio_delta=values.get(("ratio_override", "delta")),
        sweep_alpha=get("sweep", "alpha"), sweep_delta=get("sweep", "delta"),
        sweep_g_dob=get("sweep", "g_dob"), sweep_g_rtob=get("sweep", "g_rtob"),
        sweep_T_s=get("sweep", "T_s"),
        sweep_bode_points=get("sweep", "bode_points"),
        sweep_gain_lo=get("sweep", "gain_lo"), sweep_gain_hi=get("sweep", "gain_hi"),
    )
    kw = _resolve_ratio_override(kw, text)
    _validate(kw, text)
    return RunConfig(**kw)


def _resolve_ratio_override(kw, text):
    """Fill the missing third ratio and materialize the implied servo block.

    An override (alpha, beta, delta with delta = alpha/beta) is realized as
    K_tau_n = K_tau_i = K_tau, J_mn = alpha*J_m, J_mi = delta*J_m so that
    analysis and simulation see the same plant.
    """
    a, b, d = kw["ratio_alpha"], kw["ratio_beta"], kw["ratio_delta"]
    if a is None and b is None and d is None:
        return kw
    given = sum(v is not None for v in (a, b, d))
    if given < 2:
        raise ConfigError(
            f"line {_find_line(text, 'ratio_override', None)}: "
            "[ratio_override] needs at least two of alpha, beta, delta")
    if a is None:
        a = b * d
    elif b is None:
        b = a / d
    elif d is None:
        d = a / b
    if abs(d - a / b) > 1e-12 * abs(d):
        raise ConfigError(
            f"line {_find_line(text, 'ratio_override', None)}: "
            f"inconsistent override: delta={d} but alpha/beta={a / b}")
    kw.update(ratio_alpha=a, ratio_beta=b, ratio_delta=d,
              J_mn=a * kw["J_m"], J_mi=d * kw["J_m"],
              K_tau_n=kw["K_tau"], K_tau_i=kw["K_tau"])
    return kw


def _validate(kw, text):
    def bad(section, key, msg):
        return ConfigError(f"line {_find_line(text, section, key)}: [{section}] {key} {msg}")

    for section, key, name in [
        ("plant", "J_m", "J_m"), ("plant", "K_tau", "K_tau"),
        ("nominal", "J_mn", "J_mn"), ("nominal", "K_tau_n", "K_tau_n"),
        ("identified", "J_mi", "J_mi"), ("identified", "K_tau_i", "K_tau_i"),
        ("observer", "g_dob", "g_dob"), ("observer", "g_rtob", "g_rtob"),
        ("observer", "T_s", "T_s"), ("environment", "m_bind", "m_bind"),
        ("simulation", "duration", "duration"),
    ]:
        if not (kw[name] > 0 and math.isfinite(kw[name])):
            raise bad(section, key, f"must be positive, got {kw[name]}")
    if kw["C_tau"] < 0:
        raise bad("force", "C_tau", "must be >= 0")
    if kw["K_env"] < 0 or kw["D_env"] < 0:
        raise bad("environment", "K_env", "and D_env must be >= 0")
    if kw["exponent_convention"] not in (XI_OMEGA0, XI_OMEGA_N):
        raise bad("environment", "exponent_convention",
                  f"must be '{XI_OMEGA0}' or '{XI_OMEGA_N}'")
    if kw["tau_ref_mode"] not in ("constant", "step", "samples"):
        raise bad("simulation", "tau_ref_mode", "must be constant, step or samples")
    if kw["tau_ref_mode"] == "samples" and len(kw["tau_ref_samples"]) == 0:
        raise bad("simulation", "tau_ref_samples", "must be non-empty in samples mode")
    if kw["contact"] not in ("bilateral", "unilateral"):
        raise bad("simulation", "contact", "must be bilateral or unilateral")
    if kw["noise_sigma"] < 0:
        raise bad("simulation", "noise_sigma", "must be >= 0")
    if kw["substeps"] < 1:
        raise bad("simulation", "substeps", "must be >= 1")


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _toml_value(v):
    if isinstance(v, str):
        return f'"{v}"'
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)  # shortest exact round-trip, valid TOML
    if isinstance(v, tuple):
        return "[" + ", ".join(_toml_value(float(x)) for x in v) + "]"
    raise AssertionError(type(v))


def emit_config(cfg: RunConfig) -> str:
    """Serialize a normalized config; parse_config(emit_config(c)) == c."""
    c = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    lines = []

    def section(name, pairs):
        lines.append(f"[{name}]")
        for key, value in pairs:
            if value is not None:
                lines.append(f"{key} = {_toml_value(value)}")
        lines.append("")

    section("plant", [("J_m", c["J_m"]), ("K_tau", c["K_tau"])])
    section("nominal", [("J_mn", c["J_mn"]), ("K_tau_n", c["K_tau_n"])])
    section("identified", [("J_mi", c["J_mi"]), ("K_tau_i", c["K_tau_i"])])
    section("observer", [("g_dob", c["g_dob"]), ("g_rtob", c["g_rtob"]), ("T_s", c["T_s"])])
    section("force", [("C_tau", c["C_tau"])])
    section("environment", [("K_env", c["K_env"]), ("D_env", c["D_env"]),
                            ("m_bind", c["m_bind"]),
                            ("exponent_convention", c["exponent_convention"])])
    sim_keys = ["duration", "tau_ref_mode", "tau_ref_value", "tau_ref_time",
                "tau_ref_samples", "tau_d", "tau_di", "contact", "noise_sigma",
                "seed", "substeps", "q0", "dq0"]
    section("simulation", [(k, c[k]) for k in sim_keys
                           if not (k == "tau_ref_samples" and len(c[k]) == 0)])
    if cfg.has_ratio_override:
        section("ratio_override", [("alpha", c["ratio_alpha"]),
                                   ("beta", c["ratio_beta"]),
                                   ("delta", c["ratio_delta"])])
    section("sweep", [("alpha", c["sweep_alpha"]), ("delta", c["sweep_delta"]),
                      ("g_dob", c["sweep_g_dob"]), ("g_rtob", c["sweep_g_rtob"]),
                      ("T_s", c["sweep_T_s"]), ("bode_points", c["sweep_bode_points"]),
                      ("gain_lo", c["sweep_gain_lo"]), ("gain_hi", c["sweep_gain_hi"])])
    return "\n".join(lines)
