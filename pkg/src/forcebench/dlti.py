"""Real-coefficient polynomial and discrete rational transfer-function algebra.

Polynomials are stored with coefficients in descending powers of z.  Rational
transfer functions carry a sample time and are kept in canonical form (monic
denominator); pole/zero cancellation never happens implicitly and is exposed
as the explicit :func:`cancel` operation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ImproperSystemError,
    IncompatibleSystemsError,
    InvalidInputError,
    PoleEvaluationError,
)

#: default half-width of the marginal-stability band around |z| = 1
MARGINAL_BAND_DEFAULT = 1e-9
#: default tolerance for explicit pole/zero cancellation
CANCEL_TOL_DEFAULT = 1e-9
#: residual tolerance documented for the root finder
ROOT_RESIDUAL_TOL = 1e-8
#: |den(z)| below this triggers a pole-evaluation error
POLE_GUARD = 1e-280

STABLE = "asymptotically-stable"
MARGINAL = "marginally-stable"
UNSTABLE = "unstable"


@dataclass(frozen=True)
class Poly:
    """Real polynomial in z, coefficients in descending powers.

    The zero polynomial is represented as the single coefficient (0.0,).
    Leading zeros are trimmed on construction so the leading coefficient of
    any nonzero polynomial is nonzero.
    """

    coeffs: tuple

    def __init__(self, coeffs):
        arr = [float(c) for c in coeffs]
        if not arr:
            raise InvalidInputError("polynomial needs at least one coefficient")
        if not all(np.isfinite(arr)):
            raise InvalidInputError(f"non-finite polynomial coefficients: {arr}")
        while len(arr) > 1 and arr[0] == 0.0:
            arr.pop(0)
        object.__setattr__(self, "coeffs", tuple(arr))

    @classmethod
    def from_roots(cls, roots, leading=1.0):
        """Expand a root multiset into coefficients (conjugate pairs re-realized)."""
        c = np.atleast_1d(np.poly(np.asarray(roots, dtype=complex))) if len(roots) else np.array([1.0])
        imag = np.max(np.abs(c.imag)) if np.iscomplexobj(c) else 0.0
        if imag > 1e-8 * max(1.0, np.max(np.abs(c.real))):
            raise InvalidInputError("roots do not form a real-coefficient polynomial")
        return cls(leading * c.real)

    @property
    def degree(self):
        return len(self.coeffs) - 1

    @property
    def is_zero(self):
        return self.coeffs == (0.0,)

    def as_array(self):
        return np.array(self.coeffs)

    def __call__(self, z):
        """Horner evaluation; accepts scalars or arrays."""
        return np.polyval(self.as_array(), z)

    def __mul__(self, other):
        if isinstance(other, Poly):
            return Poly(np.polymul(self.as_array(), other.as_array()))
        return Poly(float(other) * self.as_array())

    __rmul__ = __mul__

    def __add__(self, other):
        if not isinstance(other, Poly):
            other = Poly([float(other)])
        return Poly(np.polyadd(self.as_array(), other.as_array()))

    def __sub__(self, other):
        if not isinstance(other, Poly):
            other = Poly([float(other)])
        return Poly(np.polysub(self.as_array(), other.as_array()))

    def __neg__(self):
        return Poly(-self.as_array())

    def derivative(self):
        if self.degree == 0:
            return Poly([0.0])
        return Poly(np.polyder(self.as_array()))


def _polish_roots(coeffs, roots, max_iter=8):
    """Refine companion-matrix eigenvalues by multiplicity-robust Newton.

    Iterates z <- z - p*p' / (p'^2 - p*p'') in extended precision, which
    converges quadratically for simple and multiple roots alike.  Steps are
    only accepted while they reduce |p(z)|.
    """
    c = np.asarray(coeffs, dtype=np.clongdouble)
    d1 = np.polyder(np.asarray(coeffs)).astype(np.clongdouble)
    d2 = np.polyder(np.polyder(np.asarray(coeffs))).astype(np.clongdouble)
    polished = np.empty(len(roots), dtype=complex)
    for i, r in enumerate(roots):
        z = np.clongdouble(r.real) + 1j * np.clongdouble(r.imag)
        for _ in range(max_iter):
            p = np.polyval(c, z)
            if p == 0:
                break
            dp = np.polyval(d1, z)
            ddp = np.polyval(d2, z)
            denom = dp * dp - p * ddp
            if denom == 0 or not np.isfinite(complex(denom)):
                break
            z_next = z - p * dp / denom
            if abs(np.polyval(c, z_next)) < abs(p):
                z = z_next
            else:
                break
        polished[i] = complex(z)
    return polished


def poly_roots(p: Poly):
    """All complex roots of ``p`` (with multiplicity), degree 0 gives [].

    Roots come from the eigenvalues of the balanced companion matrix and are
    polished so that repeated roots of exactly-representable polynomials are
    recovered well below the documented 1e-8 residual tolerance.
    """
    if p.is_zero:
        raise InvalidInputError("the zero polynomial has no well-defined roots")
    if p.degree == 0:
        return np.array([], dtype=complex)
    raw = np.roots(p.as_array())
    return _polish_roots(p.coeffs, raw)


@dataclass(frozen=True)
class RationalTF:
    """Rational transfer function num/den in z with a sample time in seconds.

    Canonical form: the denominator is made monic by scaling both numerator
    and denominator.  No pole/zero cancellation is performed.
    """

    num: Poly
    den: Poly
    sample_time: float

    def __init__(self, num, den, sample_time):
        num = num if isinstance(num, Poly) else Poly(num)
        den = den if isinstance(den, Poly) else Poly(den)
        if den.is_zero:
            raise InvalidInputError("denominator is the zero polynomial")
        if not (sample_time > 0 and np.isfinite(sample_time)):
            raise InvalidInputError(f"sample_time must be positive, got {sample_time}")
        lead = den.coeffs[0]
        object.__setattr__(self, "num", Poly(num.as_array() / lead))
        object.__setattr__(self, "den", Poly(den.as_array() / lead))
        object.__setattr__(self, "sample_time", float(sample_time))

    @classmethod
    def constant(cls, value, sample_time):
        return cls(Poly([value]), Poly([1.0]), sample_time)

    @property
    def is_proper(self):
        return self.num.degree <= self.den.degree or self.num.is_zero

    def poles(self):
        if self.den.degree == 0:
            return np.array([], dtype=complex)
        return poly_roots(self.den)

    def zeros(self):
        if self.num.is_zero or self.num.degree == 0:
            return np.array([], dtype=complex)
        return poly_roots(self.num)

    def __repr__(self):
        return f"RationalTF({list(self.num.coeffs)}, {list(self.den.coeffs)}, Ts={self.sample_time})"


def _check_compatible(a: RationalTF, b: RationalTF):
    if a.sample_time != b.sample_time:
        raise IncompatibleSystemsError(
            f"sample times differ: {a.sample_time} vs {b.sample_time}"
        )


def tf_series(a: RationalTF, b: RationalTF) -> RationalTF:
    """Cascade a*b, exact polynomial arithmetic, no cancellation."""
    _check_compatible(a, b)
    return RationalTF(a.num * b.num, a.den * b.den, a.sample_time)


def tf_add(a: RationalTF, b: RationalTF) -> RationalTF:
    """Parallel sum a + b over the common denominator."""
    _check_compatible(a, b)
    return RationalTF(a.num * b.den + b.num * a.den, a.den * b.den, a.sample_time)


def tf_feedback(L: RationalTF) -> RationalTF:
    """Closed loop L/(1+L) of the unity negative-feedback interconnection."""
    return RationalTF(L.num, L.den + L.num, L.sample_time)


def tf_scale(k: float, tf: RationalTF) -> RationalTF:
    """Scalar gain k*tf."""
    return RationalTF(k * tf.num, tf.den, tf.sample_time)


def evaluate(tf: RationalTF, z) -> complex:
    """num(z)/den(z) at a single complex point via Horner evaluation."""
    dz = complex(tf.den(z))
    if abs(dz) < POLE_GUARD:
        raise PoleEvaluationError(z, abs(dz))
    return complex(tf.num(z)) / dz


def evaluate_many(tf: RationalTF, z: np.ndarray) -> np.ndarray:
    """Vectorized evaluation; points numerically at a pole map to inf."""
    nz = tf.num(z)
    dz = tf.den(z)
    out = np.full(np.shape(z), np.inf + 0j, dtype=complex)
    ok = np.abs(dz) >= POLE_GUARD
    out[ok] = nz[ok] / dz[ok]
    return out


def cancel(tf: RationalTF, tol: float = CANCEL_TOL_DEFAULT) -> RationalTF:
    """Remove pole/zero pairs closer than ``tol``; the explicit reduction op.

    Pairing is greedy nearest-neighbor over the root sets; the leading gain
    is preserved exactly.
    """
    if tf.num.is_zero or tf.num.degree == 0 or tf.den.degree == 0:
        return tf
    zeros = list(poly_roots(tf.num))
    poles = list(poly_roots(tf.den))
    kept_zeros = []
    for z in zeros:
        if poles:
            j = int(np.argmin([abs(z - p) for p in poles]))
            if abs(z - poles[j]) < tol:
                poles.pop(j)
                continue
        kept_zeros.append(z)
    gain = tf.num.coeffs[0]
    num = _real_poly_from_roots(kept_zeros, gain)
    den = _real_poly_from_roots(poles, 1.0)
    return RationalTF(num, den, tf.sample_time)


def _real_poly_from_roots(roots, leading):
    c = np.atleast_1d(np.poly(np.asarray(roots, dtype=complex))) if roots else np.array([1.0])
    return Poly(leading * c.real)


@dataclass(frozen=True)
class StabilityReport:
    """Pole set, spectral radius and the unit-circle classification."""

    poles: tuple
    spectral_radius: float
    classification: str
    tolerance_band: float


def classify_stability(tf: RationalTF, eps: float = MARGINAL_BAND_DEFAULT) -> StabilityReport:
    """Classify against the unit circle with a marginal band of half-width eps."""
    poles = tf.poles()
    rho = float(np.max(np.abs(poles))) if len(poles) else 0.0
    if rho < 1.0 - eps:
        cls = STABLE
    elif rho > 1.0 + eps:
        cls = UNSTABLE
    else:
        cls = MARGINAL
    return StabilityReport(tuple(poles), rho, cls, eps)


def step_response(tf: RationalTF, n_steps: int) -> np.ndarray:
    """Unit-step response of the exact difference equation, length n_steps."""
    if not tf.is_proper:
        raise ImproperSystemError(
            f"numerator degree {tf.num.degree} exceeds denominator degree {tf.den.degree}"
        )
    if n_steps < 0:
        raise InvalidInputError("n_steps must be non-negative")
    a = tf.den.as_array()  # monic by construction
    n = len(a) - 1
    b = np.zeros(n + 1)
    b[n + 1 - len(tf.num.coeffs):] = tf.num.coeffs
    y = np.zeros(n_steps)
    # cumulative numerator sums: with u = 1 for all k, sum_i b_i u_{k-i} = sum(b[:k+1])
    b_csum = np.cumsum(b)
    for k in range(n_steps):
        acc = b_csum[min(k, n)]
        for i in range(1, min(k, n) + 1):
            acc -= a[i] * y[k - i]
        y[k] = acc
    return y
