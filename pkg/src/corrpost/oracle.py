"""Numerical-integration oracles for the analytic results.

Nothing here uses a closed-form normaliser or moment: every check integrates
the defining integrand directly, so agreement with :mod:`corrpost.posterior`
is evidence rather than a tautology.

* :func:`integrate_theorem` integrates the bivariate-normal likelihood of the
  sufficient statistics times the scale priors over (mu1, mu2, sigma1, sigma2).
* :func:`lemma_quadrature` integrates u^(c-1) exp(-a u^2 - b u) on (0, inf).
* :func:`integrate_posterior_functional` integrates h times the prior kernel
  over rho with scipy's QUADPACK wrapper (a different rule from the package's
  own quadrature).
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import integrate as sp_integrate

from . import _kernels, quadrature
from .errors import DomainError, ToleranceNotMet
from .model import Hyperparameters, SufficientStats
from .posterior import PosteriorModel, _log_cosh, _log_h_core
from .quadrature import QuadResult
from .specfun import DEFAULT_CONTROL, hyp1f1, log_gamma

__all__ = [
    "FullParams",
    "QuadResult",
    "full_likelihood",
    "full_log_likelihood",
    "integrate_theorem",
    "integrate_theorem_many",
    "lemma_integral",
    "lemma_quadrature",
    "integrate_posterior_functional",
    "posterior_functionals",
    "posterior_moments_quad",
    "Check",
    "run_checks",
]

THEOREM_MAX_N = 20


@dataclass(frozen=True)
class FullParams:
    mu1: float
    mu2: float
    sigma1: float
    sigma2: float
    rho: float

    def __post_init__(self):
        if not (self.sigma1 > 0 and self.sigma2 > 0):
            raise DomainError("scale parameters must be positive")
        if not abs(self.rho) < 1:
            raise DomainError("need |rho| < 1")


def _means(y):
    return (y.xbar1 or 0.0), (y.xbar2 or 0.0)


def full_log_likelihood(y: SufficientStats, theta: FullParams):
    """Log bivariate-normal likelihood of ``n`` pairs through their summary ``y``."""
    if not y.has_scales:
        raise DomainError("the full likelihood needs s1 and s2")
    xbar1, xbar2 = _means(y)
    return float(_kernels.log_likelihood_terms(
        y.n, xbar1, xbar2, y.s1, y.s2, y.r,
        theta.mu1, theta.mu2, theta.sigma1, theta.sigma2, theta.rho))


def full_likelihood(y: SufficientStats, theta: FullParams):
    return math.exp(full_log_likelihood(y, theta))


# ---------------------------------------------------------------------------
# four-dimensional check of the reduced-likelihood factorisation
# ---------------------------------------------------------------------------

# log-scale range for sigma = s e^u; the integrand is below e^-40 of its peak
# outside it for n <= 20
_U_LO, _U_HI = -4.0, 14.0
_U_BREAKS = (-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 4.0, 8.0)
# standardised means v = tan(t) cover |v| <= 7, a Gaussian tail of ~1e-11
_V_EDGE = math.atan(7.0)


def _v_rule(panels):
    edges = np.linspace(-_V_EDGE, _V_EDGE, panels + 1)
    t, wk, _ = quadrature.panel_nodes(edges[:-1], edges[1:])
    t, wk = t.ravel(), wk.ravel()
    return np.tan(t), wk / np.cos(t) ** 2


def integrate_theorem_many(y: SufficientStats, gamma, delta, rhos, *, rtol=1e-6,
                           kernels=None):
    """:func:`integrate_theorem` for several rho values on one shared partition.

    Means are substituted as mu1 = xbar1 + sigma1 v1 / sqrt(n) and
    mu2 = xbar2 + sigma2 (rho v1 + sqrt(1 - rho^2) v2) / sqrt(n) with
    v = tan(t), which makes the mean part of the integrand a standard
    Gaussian in (v1, v2) whatever the scales; scales as sigma = s e^u.
    The (v1, v2) rule is a fixed composite Gauss-Kronrod product whose panel
    count is doubled until two successive counts agree; u1 and u2 are
    integrated by nested adaptive Gauss-Kronrod.
    """
    if not y.has_scales:
        raise DomainError("the theorem oracle needs s1 and s2")
    n = y.n
    if not (n > gamma + 1 and n > delta + 1):
        raise DomainError(f"need n > gamma + 1 and n > delta + 1 (n={n})")
    if n > THEOREM_MAX_N:
        raise DomainError(f"the 4-D oracle is limited to n <= {THEOREM_MAX_N}")
    rhos = np.atleast_1d(np.asarray(rhos, dtype=float))
    if np.any(np.abs(rhos) >= 1):
        raise DomainError("need |rho| < 1")
    k = kernels or _kernels.active
    xbar1, xbar2 = _means(y)
    args = (n, xbar1, xbar2, y.s1, y.s2, y.r, gamma, delta)
    # integrand at the centre of the substitution, as a per-rho scale
    c = np.sqrt(1.0 - rhos * rhos)
    log_ref = ((gamma + 1.0) * math.log(y.s1) + (delta + 1.0) * math.log(y.s2)
               + np.log(c / n)
               + _kernels.log_likelihood_terms(n, xbar1, xbar2, y.s1, y.s2, y.r,
                                               xbar1, xbar2, y.s1, y.s2, rhos))

    # The mean rule's error does not depend on the scales, so it is settled
    # once at the centre: take the first panel count whose value agrees with
    # the next finer count, using that difference as its error.
    centre = np.zeros(1)
    counts = (1, 2, 3, 4, 6, 8, 12, 16, 24, 32)
    values = [k.theorem_grid(*args, rhos, centre, centre, *_v_rule(p), log_ref)[:, 0, 0]
              for p in counts[:2]]
    for i, panels in enumerate(counts[:-1]):
        rule_err = float(np.max(np.abs(values[i] - values[i + 1]) / np.abs(values[i + 1])))
        if rule_err <= rtol / 10:
            break
        values.append(k.theorem_grid(*args, rhos, centre, centre,
                                     *_v_rule(counts[i + 2]), log_ref)[:, 0, 0]
                      if i + 2 < len(counts) else values[-1])
    else:
        raise ToleranceNotMet("inner mean rule did not settle", value=values[-1],
                              est_error=rule_err)
    v, vw = _v_rule(panels)

    nr = rhos.size
    inner_err = {}
    evaluations = [0]
    sub_tol = rtol / 5

    def over_u1(u1):
        def over_u2(u2):
            grid = k.theorem_grid(*args, rhos, u1, u2, v, vw, log_ref)
            return grid.reshape(nr * u1.size, u2.size)

        _, _, vals, errs, ev = quadrature.adaptive_panels(
            over_u2, _U_LO, _U_HI, rtol=sub_tol, atol=sub_tol * 1e-3,
            breakpoints=_U_BREAKS)
        evaluations[0] += ev * u1.size * v.size ** 2 * nr
        err = errs.sum(axis=-1).reshape(nr, u1.size)
        inner_err.update(zip(u1.tolist(), err.T))
        return vals.sum(axis=-1).reshape(nr, u1.size)

    lo, hi, vals, errs, _ = quadrature.adaptive_panels(
        over_u1, _U_LO, _U_HI, rtol=sub_tol, breakpoints=_U_BREAKS)
    scaled = vals.sum(axis=-1)
    # inner error estimates integrated over the final outer partition
    x, wk, _ = quadrature.panel_nodes(lo, hi)
    inner = sum(w * inner_err[u] for u, w in zip(x.ravel().tolist(), wk.ravel()))
    est = errs.sum(axis=-1) + inner + rule_err * np.abs(scaled)
    factor = np.exp(log_ref)
    results = []
    for i in range(nr):
        value = float(scaled[i] * factor[i])
        err = float(est[i] * factor[i])
        if err > rtol * abs(value):
            raise ToleranceNotMet(f"4-D quadrature at rho={rhos[i]} missed rtol={rtol}",
                                  value=value, est_error=err)
        results.append(QuadResult(value, err, evaluations[0]))
    return results


def integrate_theorem(y: SufficientStats, gamma, delta, rho, *, rtol=1e-6, kernels=None):
    """Likelihood times scale priors, integrated over means and scales, at fixed rho."""
    return integrate_theorem_many(y, gamma, delta, [rho], rtol=rtol, kernels=kernels)[0]


# ---------------------------------------------------------------------------
# one-dimensional integral with a confluent closed form
# ---------------------------------------------------------------------------

def _check_lemma(a, c):
    if not (a > 0 and c > 0):
        raise DomainError(f"need a > 0 and c > 0, got a={a}, c={c}")


def lemma_integral(a, b, c):
    """Closed form of int_0^inf u^(c-1) exp(-a u^2 - b u) du via two 1F1 values."""
    _check_lemma(a, c)
    x = b * b / (4.0 * a)
    first = math.exp(log_gamma(c / 2.0)) * hyp1f1(c / 2.0, 0.5, x)
    second = -(b / math.sqrt(a)) * math.exp(log_gamma((c + 1) / 2.0)) * hyp1f1((c + 1) / 2.0, 1.5, x)
    return 0.5 * a ** (-c / 2.0) * (first + second)


def lemma_quadrature(a, b, c, *, rtol=1e-12):
    """The same integral by QUADPACK after u = e^t."""
    _check_lemma(a, c)

    def f(t):
        u = math.exp(t)
        return math.exp(c * t - a * u * u - b * u)

    lo = min(-5.0, -60.0 / c)
    hi = 0.5 * math.log((80.0 + abs(b) * 10.0) / a) + 1.0
    # the integrand peaks near the root of c = 2 a u^2 + b u
    u_peak = (-b + math.sqrt(b * b + 8.0 * a * c)) / (4.0 * a)
    value, err, info = sp_integrate.quad(f, lo, hi, points=[math.log(u_peak)],
                                         epsabs=0.0, epsrel=rtol, limit=200, full_output=1)[:3]
    if err > max(rtol * 100, 1e-10) * abs(value):
        raise ToleranceNotMet("lemma quadrature missed its tolerance", value=value, est_error=err)
    return QuadResult(value, err, int(info["neval"]))


# ---------------------------------------------------------------------------
# one-dimensional functionals of the posterior of rho
# ---------------------------------------------------------------------------

def _prior_norm_quad(eta, rtol):
    def f(z):
        rho = math.tanh(z)
        log1m = -2.0 * float(_log_cosh(z))
        return math.exp(eta.alpha * log1m + 0.5 * eta.beta * math.log1p(rho * rho))

    span = max(20.0, 40.0 / eta.alpha)
    value, err = sp_integrate.quad(f, -span, span, points=[0.0], epsabs=0.0,
                                   epsrel=rtol, limit=400)
    return value, err


def _posterior_setup(model):
    n, r, eta, e = model.n, model.r, model.eta, model.e
    centre = math.atanh(r)
    span = max(20.0, 40.0 / model.mu) + abs(centre)
    sd = 1.0 / math.sqrt(n)
    points = sorted({0.0, *(centre + j * sd for j in (-8, -3, -1, 0, 1, 3, 8))})
    points = [p for p in points if -span < p < span]

    def log_kernel(z):
        z = np.atleast_1d(z)
        rho = np.tanh(z)
        log1m = -2.0 * _log_cosh(z)
        core, _ = _log_h_core(n, r, rho, eta.gamma, eta.delta, model.ctrl)
        out = core + (e + eta.alpha) * log1m
        if eta.beta:
            out = out + 0.5 * eta.beta * np.log1p(rho * rho)
        return out

    shift = float(log_kernel(centre)[0])
    return log_kernel, shift, span, points


def _quad_vec(f, lo, hi, points, rtol):
    pts = [p for p in points if lo < p < hi] or None
    value, err, info = sp_integrate.quad_vec(f, lo, hi, epsabs=0.0, epsrel=rtol, norm="max",
                                             points=pts, limit=2000, full_output=True)
    # "rounding error" stops still carry a usable error estimate
    if not info.success and "rounding" not in info.message:
        raise ToleranceNotMet(f"quadrature stopped: {info.message}", value=value, est_error=err)
    return np.asarray(value, dtype=float), float(err), int(info.neval)


def posterior_functionals(model: PosteriorModel, powers, *, of="rho", upper=None, rtol=1e-9):
    """Unnormalised integrals of ``g^k`` times the posterior kernel, jointly.

    ``g`` is rho (``of="rho"``) or atanh(rho) (``of="z"``); ``upper`` truncates
    the integral at rho = upper.  The error bound is shared by all
    components (max norm), so it is requested well below ``rtol``.
    Returns ``(values, errors, shift, evaluations)`` with values scaled by
    ``exp(-shift)``.
    """
    log_kernel, shift, span, points = _posterior_setup(model)
    powers = np.asarray(powers, dtype=float)
    hi = span if upper is None else math.atanh(upper)

    def f(z):
        base = math.exp(float(log_kernel(z)[0]) - shift)
        g = math.tanh(z) if of == "rho" else z
        return base * g ** powers

    value, err, evals = _quad_vec(f, -span, hi, points, rtol / 1000)
    return value, np.full(value.shape, err), shift, evals


def integrate_posterior_functional(model: PosteriorModel, kind, arg=None, *, rtol=1e-9):
    """Integrate a functional of the posterior of rho directly.

    ``kind`` selects the functional:

    ``"norm"``     integral of h against the normalised prior (against the bare
                   kernel (1-rho^2)^-1 (1+rho^2)^(beta/2) in the alpha -> 0 limit)
    ``"moment"``   E[rho^arg]
    ``"zmoment"``  E[atanh(rho)^arg]
    ``"cdf"``      P(rho <= arg)

    Works in z = atanh(rho) so endpoint singularities of the density become
    exponential tails.
    """
    if kind == "norm":
        (total,), (err,), shift, evals = posterior_functionals(model, [0], rtol=rtol)
        log_value, rel = math.log(total) + shift, err / total
        if not model.eta.alpha_limit:
            c_val, c_err = _prior_norm_quad(model.eta, rtol / 10)
            log_value -= math.log(c_val)
            rel += c_err / c_val
        value = math.exp(log_value)
        result = QuadResult(value, rel * value, evals)
    elif kind in ("moment", "zmoment"):
        power = int(arg)
        of = "rho" if kind == "moment" else "z"
        (total, num), (t_err, n_err), _, evals = posterior_functionals(
            model, [0, power], of=of, rtol=rtol)
        value = num / total
        result = QuadResult(value, n_err / total + abs(value) * t_err / total, evals)
    elif kind == "cdf":
        x = float(arg)
        if x <= -1 or x >= 1:
            return QuadResult(0.0 if x <= -1 else 1.0, 0.0, 0)
        (total,), (t_err,), shift, ev1 = posterior_functionals(model, [0], rtol=rtol)
        (part,), (p_err,), shift2, ev2 = posterior_functionals(model, [0], upper=x, rtol=rtol)
        value = part / total
        result = QuadResult(value, p_err / total + value * t_err / total, ev1 + ev2)
        if result.est_error > rtol:
            raise ToleranceNotMet("cdf quadrature missed its tolerance",
                                  value=value, est_error=result.est_error)
        return result
    else:
        raise DomainError(f"unknown functional {kind!r}")
    # odd moments that vanish by symmetry have no relative scale
    if result.est_error > rtol * abs(result.value) and result.est_error > 1e-14:
        raise ToleranceNotMet(f"functional {kind!r} missed rtol={rtol}",
                              value=result.value, est_error=result.est_error)
    return result


def posterior_moments_quad(model: PosteriorModel, kmax=4, *, rtol=1e-9):
    """E[rho^k] for k = 1..kmax from one joint quadrature pass."""
    values, errs, _, _ = posterior_functionals(model, range(kmax + 1), rtol=rtol)
    moments = values[1:] / values[0]
    errors = errs[1:] / values[0] + np.abs(moments) * errs[0] / values[0]
    return moments, errors


# ---------------------------------------------------------------------------
# verification suites (used by the command line)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Check:
    suite: str
    case: str
    achieved: float
    tolerance: float

    @property
    def passed(self):
        return bool(self.achieved <= self.tolerance)


def _rel(a, b):
    return abs(a - b) / abs(b) if b != 0 else abs(a - b)


def lemma_checks():
    out = []
    for a in (0.5, 1.0, 2.0):
        for b in (-1.0, 0.0, 1.0):
            for c in (1.0, 2.0, 3.5):
                q = lemma_quadrature(a, b, c)
                out.append(Check("lemma", f"a={a} b={b} c={c}",
                                 _rel(lemma_integral(a, b, c), q.value), 1e-8))
    return out


def theorem_checks(n=5, r=0.6, s1=1.0, s2=1.0, pairs=((0.0, 0.0), (-1.0, 1.0)),
                   rhos=(-0.8, -0.4, 0.0, 0.4, 0.8), rtol=1e-6):
    from .posterior import log_marginal_likelihood_rho0, log_reduced_likelihood

    y = SufficientStats(n=n, r=r, xbar1=0.0, xbar2=0.0, s1=s1, s2=s2)
    out = []
    for gamma, delta in pairs:
        quads = integrate_theorem_many(y, gamma, delta, rhos, rtol=rtol)
        p0 = math.exp(log_marginal_likelihood_rho0(y, gamma, delta))
        for rho, res in zip(rhos, quads):
            h = math.exp(log_reduced_likelihood(n, r, rho, gamma, delta))
            out.append(Check("theorem", f"n={n} r={r} gamma={gamma} delta={delta} rho={rho}",
                             _rel(res.value / h, p0), 1e-4))
    return out


def moment_checks(ns=(5, 10, 50), rs=(-0.9, 0.0, 0.6),
                  alphas=(None, 0.5, 1.0, 2.0), pairs=((0.0, 0.0), (-1.0, 1.0)), kmax=4):
    from .posterior import moment_general, moments_beta0

    out = []
    for n in ns:
        for r in rs:
            for alpha in alphas:
                for gamma, delta in pairs:
                    eta = (Hyperparameters.limit(0.0, gamma, delta) if alpha is None
                           else Hyperparameters(alpha, 0.0, gamma, delta))
                    model = PosteriorModel(SufficientStats.summary(n, r), eta)
                    label = (f"n={n} r={r} alpha={'limit' if alpha is None else alpha} "
                             f"gamma={gamma} delta={delta}")
                    q = integrate_posterior_functional(model, "norm")
                    out.append(Check("moments", label + " norm",
                                     _rel(model.norm_constant, q.value), 1e-8))
                    quad_moments, _ = posterior_moments_quad(model, kmax)
                    for k in range(1, kmax + 1):
                        closed = moments_beta0(model, k).value
                        ref = quad_moments[k - 1]
                        # odd moments vanish at r = 0 and are compared absolutely
                        err = abs(closed - ref) if abs(ref) < 1e-12 else _rel(closed, ref)
                        out.append(Check("moments", label + f" k={k}", err, 1e-8))
                        series = moment_general(model, k).value
                        err = abs(series - closed) if closed == 0 else _rel(series, closed)
                        out.append(Check("moments", label + f" k={k} series", err, 1e-10))
    return out


SUITES = {"lemma": lemma_checks, "theorem": theorem_checks, "moments": moment_checks}


def run_checks(scope="all", **theorem_args):
    if scope == "all":
        return lemma_checks() + moment_checks() + theorem_checks(**theorem_args)
    if scope == "theorem":
        return theorem_checks(**theorem_args)
    if scope not in SUITES:
        raise DomainError(f"unknown verification scope {scope!r}")
    return SUITES[scope]()
