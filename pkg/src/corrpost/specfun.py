"""Special functions in float64: log-gamma, beta, Pochhammer, hypergeometric series.

The hypergeometric routines sum the defining power series

    pFq(a; b; z) = sum_m [prod (a_i)_m / prod (b_j)_m] z^m / m!

with the term recurrence and a "k consecutive negligible terms" stopping rule
(see :class:`SeriesControl`).  Partial sums are carried in log-modulus/sign form
so that series with astronomically large terms (large sample sizes) stay finite.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.special import zetac

from . import _kernels
from .errors import DomainError, NonConvergence

__all__ = [
    "SeriesControl",
    "HypParams",
    "DEFAULT_CONTROL",
    "log_gamma",
    "log_beta",
    "beta",
    "pochhammer",
    "log_pochhammer",
    "hyp_series",
    "log_hyp_series",
    "log_hyp_series_many",
    "log_hyp_series_rows",
    "hyp1f1",
    "hyp2f1",
    "log_hyp2f1",
    "hyp3f2",
]


@dataclass(frozen=True)
class SeriesControl:
    """Stopping rule for series summation.

    Summation stops once ``consecutive_small`` terms in a row satisfy
    ``|term| <= rel_tol * |partial sum|``.  Requiring several in a row keeps
    alternating series from stopping on an accidental near-zero term.
    """

    rel_tol: float = 1e-14
    max_terms: int = 500_000
    consecutive_small: int = 3

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise DomainError("rel_tol must be positive")
        if self.max_terms < 1:
            raise DomainError("max_terms must be at least 1")
        if self.consecutive_small < 1:
            raise DomainError("consecutive_small must be at least 1")


DEFAULT_CONTROL = SeriesControl()


def _is_pole(b):
    return b <= 0 and float(b).is_integer()


@dataclass(frozen=True)
class HypParams:
    numerator_params: tuple = field(default_factory=tuple)
    denominator_params: tuple = field(default_factory=tuple)
    argument: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "numerator_params",
                           tuple(float(a) for a in self.numerator_params))
        object.__setattr__(self, "denominator_params",
                           tuple(float(b) for b in self.denominator_params))
        object.__setattr__(self, "argument", float(self.argument))
        for b in self.denominator_params:
            if _is_pole(b):
                raise DomainError(f"denominator parameter {b} is a pole of the series")

    @property
    def terminates(self):
        return any(_is_pole(a) for a in self.numerator_params)


# ---------------------------------------------------------------------------
# gamma family
# ---------------------------------------------------------------------------

_EULER_GAMMA = 0.57721566490153286061
# zeta(k) - 1 for k = 2..40; the log-gamma series below converges like 4^-k
_ZETA_M1 = np.array([zetac(k) for k in range(2, 41)])


def _lgamma1p(eps):
    """ln Gamma(1 + eps) for |eps| <= 0.5, accurate relative to the result."""
    acc = 0.0
    for k in range(_ZETA_M1.size + 1, 1, -1):
        acc = acc * eps + (-1) ** k * _ZETA_M1[k - 2] / k
    return -math.log1p(eps) + eps * (1.0 - _EULER_GAMMA) + acc * eps * eps


def log_gamma(x):
    """Natural log of Gamma(x) for x > 0.

    Near the zeros of ln Gamma (x = 1, 2) a Taylor expansion is used so the
    error stays relative; elsewhere the C library routine is accurate enough.
    """
    x = float(x)
    if not x > 0 or math.isinf(x):
        raise DomainError(f"log_gamma needs a finite positive argument, got {x}")
    if 0.5 <= x < 1.5:
        return _lgamma1p(x - 1.0)
    if 1.5 <= x < 2.5:
        return math.log1p(x - 2.0) + _lgamma1p(x - 2.0)
    return math.lgamma(x)


def log_beta(u, v):
    if not (u > 0 and v > 0):
        raise DomainError(f"beta needs positive arguments, got ({u}, {v})")
    # sorted so that beta(u, v) and beta(v, u) follow the same path
    u, v = sorted((float(u), float(v)))
    return log_gamma(u) + log_gamma(v) - log_gamma(u + v)


def beta(u, v):
    """Beta function B(u, v) = Gamma(u) Gamma(v) / Gamma(u + v)."""
    return math.exp(log_beta(u, v))


def log_pochhammer(x, m):
    """Return ``(log|(x)_m|, sign)``; sign is 0 when the product vanishes."""
    m = int(m)
    if m < 0:
        raise DomainError("pochhammer order must be non-negative")
    logabs = 0.0
    sign = 1.0
    for i in range(m):
        f = x + i
        if f == 0:
            return -math.inf, 0.0
        if f < 0:
            sign = -sign
        logabs += math.log(abs(f))
    return logabs, sign


_LOG_MAX = math.log(np.finfo(float).max)


def pochhammer(x, m):
    """Rising factorial (x)_m = x (x+1) ... (x+m-1)."""
    m = int(m)
    if m < 0:
        raise DomainError("pochhammer order must be non-negative")
    x = float(x)
    prod = 1.0
    for i in range(m):
        prod *= x + i
        if math.isinf(prod):
            logabs, sign = log_pochhammer(x, m)
            if logabs > _LOG_MAX:
                return sign * math.inf
            return sign * math.exp(logabs)
    return prod


# ---------------------------------------------------------------------------
# hypergeometric series
# ---------------------------------------------------------------------------

def _check_convergence(p):
    a, b, z = p.numerator_params, p.denominator_params, p.argument
    if p.terminates or z == 0:
        return
    if len(a) > len(b) + 1:
        raise DomainError(f"{len(a)}F{len(b)} diverges for z != 0")
    if len(a) == len(b) + 1:
        if abs(z) > 1:
            raise DomainError(f"series diverges for |z| = {abs(z)} > 1")
        if abs(z) == 1:
            excess = sum(b) - sum(a)
            if (z == 1 and excess <= 0) or (z == -1 and excess <= -1):
                raise DomainError(f"series diverges at z = {z} (parameter excess {excess})")


def log_hyp_series_many(numerator, denominator, z, ctrl=DEFAULT_CONTROL, kernels=None):
    """Vectorised series over an array of arguments.

    Returns ``(log_modulus, sign, terms_used)`` arrays; raises
    :class:`NonConvergence` if any argument exhausted ``ctrl.max_terms``.
    """
    k = kernels or _kernels.active
    a = np.sort(np.asarray(numerator, dtype=float))
    b = np.sort(np.asarray(denominator, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    log_mod, sign, terms, ok = k.series(a, b, z.ravel(), ctrl.rel_tol,
                                        ctrl.max_terms, ctrl.consecutive_small)
    if not ok.all():
        bad = int(np.flatnonzero(~ok)[0])
        raise NonConvergence(
            f"{a.size}F{b.size}{tuple(a)};{tuple(b)} at z={z.ravel()[bad]!r} "
            f"did not converge in {int(terms[bad])} terms",
            terms_used=int(terms[bad]),
            partial=float(sign[bad] * np.exp(log_mod[bad])),
        )
    shape = z.shape
    return log_mod.reshape(shape), sign.reshape(shape), terms.reshape(shape)


def log_hyp_series_rows(numerator, denominator, z, ctrl=DEFAULT_CONTROL):
    """Series whose parameters vary along with the argument.

    ``numerator`` and ``denominator`` are sequences of arrays (or scalars)
    broadcast against ``z``; returns ``(log_modulus, sign, terms_used)``.
    Plain numpy: used for short batches such as coefficient tables.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    shape = z.shape
    z = z.ravel()
    a = [np.broadcast_to(np.asarray(x, dtype=float), shape).ravel() for x in numerator]
    b = [np.broadcast_to(np.asarray(x, dtype=float), shape).ravel() for x in denominator]
    for bj in b:
        if np.any((bj <= 0) & (bj == np.round(bj))):
            raise DomainError("denominator parameter is a pole of the series")
    size = z.size
    term = np.ones(size)
    total = np.ones(size)
    small = np.zeros(size, dtype=np.int64)
    terms = np.ones(size, dtype=np.int64)
    active = np.arange(size)
    m = 0
    while active.size and m + 1 < ctrl.max_terms:
        ratio = z[active] / (m + 1.0)
        for aj in a:
            ratio = ratio * (aj[active] + m)
        for bj in b:
            ratio = ratio / (bj[active] + m)
        t = term[active] * ratio
        s = total[active] + t
        m += 1
        k = np.where(np.abs(t) <= ctrl.rel_tol * np.abs(s), small[active] + 1, 0)
        term[active] = t
        total[active] = s
        small[active] = k
        terms[active] = m + 1
        active = active[k < ctrl.consecutive_small]
    if active.size:
        bad = int(active[0])
        raise NonConvergence(
            f"series at z={z[bad]!r} did not converge in {int(terms[bad])} terms",
            terms_used=int(terms[bad]), partial=float(total[bad]))
    with np.errstate(divide="ignore"):
        log_mod = np.log(np.abs(total))
    return log_mod.reshape(shape), np.sign(total).reshape(shape), terms.reshape(shape)


def log_hyp_series(p: HypParams, ctrl=DEFAULT_CONTROL):
    """Scalar series; returns ``(log_modulus, sign, terms_used)``."""
    _check_convergence(p)
    log_mod, sign, terms = log_hyp_series_many(
        p.numerator_params, p.denominator_params, [p.argument], ctrl)
    return float(log_mod[0]), float(sign[0]), int(terms[0])


def hyp_series(p: HypParams, ctrl=DEFAULT_CONTROL):
    """Value of the generalized hypergeometric series described by ``p``."""
    log_mod, sign, _ = log_hyp_series(p, ctrl)
    return sign * math.exp(log_mod)


def hyp1f1(a, b, z, ctrl=DEFAULT_CONTROL):
    return hyp_series(HypParams((a,), (b,), z), ctrl)


def hyp3f2(a1, a2, a3, b1, b2, z, ctrl=DEFAULT_CONTROL):
    return hyp_series(HypParams((a1, a2, a3), (b1, b2), z), ctrl)


def log_hyp2f1(a, b, c, z, ctrl=DEFAULT_CONTROL):
    """``(log|2F1|, sign)``, applying Pfaff's transformation for z < 0.

    For z in [-1, 0) the argument is mapped to z/(z-1) in [0, 1/2], where the
    series has positive-ratio geometric convergence instead of alternating
    slowly.  The parameter that makes the series terminate is kept in front.
    """
    z = float(z)
    if z >= 0:
        log_mod, sign, _ = log_hyp_series(HypParams((a, b), (c,), z), ctrl)
        return log_mod, sign
    if _is_pole(b) and not _is_pole(a):
        a, b = b, a
    HypParams((a, b), (c,), z)  # pole check on the original parameters
    if z < -1:
        raise DomainError(f"2F1 argument {z} < -1 is outside the supported range")
    w = z / (z - 1.0)
    log_mod, sign, _ = log_hyp_series(HypParams((a, c - b), (c,), w), ctrl)
    return log_mod - a * math.log1p(-z), sign


def hyp2f1(a, b, c, z, ctrl=DEFAULT_CONTROL):
    log_mod, sign = log_hyp2f1(a, b, c, z, ctrl)
    return sign * math.exp(log_mod)
