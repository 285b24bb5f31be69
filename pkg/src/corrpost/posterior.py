"""Marginal posterior of rho: reduced likelihood, normalisers, moments, cdf.

Notation used throughout::

    e  = (n - gamma - delta - 1) / 2     power of (1 - rho^2) in the likelihood
    p  = (n - gamma - 1) / 2,  q = (n - delta - 1) / 2
    mu = alpha + e                       power of (1 - rho^2) in the posterior, plus one

The reduced likelihood is h = A + B with

    A = (1 - rho^2)^e 2F1(p, q; 1/2; r^2 rho^2)
    B = 2 r rho (1 - rho^2)^e W 2F1(p + 1/2, q + 1/2; 3/2; r^2 rho^2)

For r rho < 0 the two parts cancel (catastrophically for large n), so there
h is evaluated from the quadratic transformation

    A + B = (1 - rho^2)^e 2F1(2p, 2q; p + q + 1/2; (1 + r rho) / 2) / C1,
    C1 = sqrt(pi) Gamma(p + q + 1/2) / (Gamma(p + 1/2) Gamma(q + 1/2)),

a series of positive terms.

The prior normaliser B(1/2, alpha) never appears on its own: with beta = 0 the
posterior is h (1 - rho^2)^(alpha - 1) / Z where

    Z = B(1/2, mu) 2F1(p, q; mu + 1/2; r^2),

which stays finite in the alpha -> 0 limit.
"""

from dataclasses import dataclass
import math
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from . import quadrature
from .errors import DomainError, NonConvergence
from .model import Hyperparameters, SufficientStats, log_prior_norm_constant
from .specfun import (DEFAULT_CONTROL, HypParams, log_beta, log_gamma,
                      log_hyp_series, log_hyp_series_many, log_hyp_series_rows)

_LOG2 = math.log(2.0)
_LOGPI = math.log(math.pi)


def _check_theorem(n, gamma, delta):
    if not n > gamma + 1:
        raise DomainError(f"need n > gamma + 1 (n={n}, gamma={gamma})")
    if not n > delta + 1:
        raise DomainError(f"need n > delta + 1 (n={n}, delta={delta})")


def _check_r(r):
    if not -1.0 < r < 1.0:
        raise DomainError(f"need |r| < 1, got {r}")


def _rho_array(rho):
    rho = np.asarray(rho, dtype=float)
    if np.any(~(np.abs(rho) < 1.0)):
        raise DomainError("need |rho| < 1")
    return rho


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def log_w_ratio(n, gamma, delta):
    _check_theorem(n, gamma, delta)
    p, q = (n - gamma - 1) / 2.0, (n - delta - 1) / 2.0
    return log_gamma(p + 0.5) + log_gamma(q + 0.5) - log_gamma(p) - log_gamma(q)


def w_ratio(n, gamma, delta):
    """Gamma((n-g)/2) Gamma((n-d)/2) / (Gamma((n-g-1)/2) Gamma((n-d-1)/2))."""
    return math.exp(log_w_ratio(n, gamma, delta))


# ---------------------------------------------------------------------------
# reduced likelihood
# ---------------------------------------------------------------------------

def _even_odd_logs(n, r, rho, gamma, delta, ctrl):
    """log of A / (1-rho^2)^e and of |B| / (1-rho^2)^e, plus terms used."""
    p, q = (n - gamma - 1) / 2.0, (n - delta - 1) / 2.0
    x = r * rho
    z = x * x
    la, _, ta = log_hyp_series_many([p, q], [0.5], z, ctrl)
    lb, _, tb = log_hyp_series_many([p + 0.5, q + 0.5], [1.5], z, ctrl)
    with np.errstate(divide="ignore"):
        lb = lb + np.log(2.0 * np.abs(x)) + log_w_ratio(n, gamma, delta)
    return la, lb, np.maximum(ta, tb)


def _log_h_core(n, r, rho, gamma, delta, ctrl):
    """log of h / (1-rho^2)^e for an array of rho; returns (values, max terms)."""
    rho = np.atleast_1d(rho)
    out = np.empty(rho.shape)
    terms = 0
    x = r * rho
    pos = x >= 0
    if pos.any():
        la, lb, t = _even_odd_logs(n, r, rho[pos], gamma, delta, ctrl)
        out[pos] = np.logaddexp(la, lb)
        terms = max(terms, int(t.max()))
    neg = ~pos
    if neg.any():
        p, q = (n - gamma - 1) / 2.0, (n - delta - 1) / 2.0
        log_c1 = (0.5 * _LOGPI + log_gamma(p + q + 0.5)
                  - log_gamma(p + 0.5) - log_gamma(q + 0.5))
        lg, _, t = log_hyp_series_many([2 * p, 2 * q], [p + q + 0.5],
                                       0.5 * (1.0 + x[neg]), ctrl)
        out[neg] = lg - log_c1
        terms = max(terms, int(t.max()))
    return out, terms


def log_reduced_likelihood(n, r, rho, gamma=0.0, delta=0.0, ctrl=DEFAULT_CONTROL):
    """log h(n, r | rho); vectorised over rho."""
    _check_theorem(n, gamma, delta)
    _check_r(r)
    rho = _rho_array(rho)
    core, _ = _log_h_core(n, r, rho.ravel(), gamma, delta, ctrl)
    e = (n - gamma - delta - 1) / 2.0
    out = core.reshape(rho.shape) + e * np.log1p(-rho * rho)
    return _scalar_or_array(out)


def reduced_likelihood(n, r, rho, gamma=0.0, delta=0.0, ctrl=DEFAULT_CONTROL):
    """h(n, r | rho) = A + B, the rho-dependent factor of the integrated likelihood."""
    return _scalar_or_array(np.exp(log_reduced_likelihood(n, r, rho, gamma, delta, ctrl)))


def log_reduced_likelihood_parts(n, r, rho, gamma=0.0, delta=0.0, ctrl=DEFAULT_CONTROL):
    """``(log A, log |B|, sign B)``; A and B alone can overflow where h does not."""
    _check_theorem(n, gamma, delta)
    _check_r(r)
    rho = _rho_array(rho)
    la, lb, _ = _even_odd_logs(n, r, np.atleast_1d(rho).ravel(), gamma, delta, ctrl)
    power = (n - gamma - delta - 1) / 2.0 * np.log1p(-rho * rho)
    return (_scalar_or_array(la.reshape(rho.shape) + power),
            _scalar_or_array(lb.reshape(rho.shape) + power),
            _scalar_or_array(np.sign(r * rho)))


def reduced_likelihood_even(n, r, rho, gamma=0.0, delta=0.0, ctrl=DEFAULT_CONTROL):
    _check_theorem(n, gamma, delta)
    _check_r(r)
    rho = _rho_array(rho)
    la, _, _ = _even_odd_logs(n, r, np.atleast_1d(rho).ravel(), gamma, delta, ctrl)
    e = (n - gamma - delta - 1) / 2.0
    out = np.exp(la.reshape(rho.shape) + e * np.log1p(-rho * rho))
    return _scalar_or_array(out)


def reduced_likelihood_odd(n, r, rho, gamma=0.0, delta=0.0, ctrl=DEFAULT_CONTROL):
    _check_theorem(n, gamma, delta)
    _check_r(r)
    rho = _rho_array(rho)
    _, lb, _ = _even_odd_logs(n, r, np.atleast_1d(rho).ravel(), gamma, delta, ctrl)
    e = (n - gamma - delta - 1) / 2.0
    out = np.sign(r * rho) * np.exp(lb.reshape(rho.shape) + e * np.log1p(-rho * rho))
    return _scalar_or_array(out)


def jeffreys_approximation(n, r, rho):
    """h_a = (1 - rho^2)^((n-1)/2) (1 - rho r)^((3-2n)/2)."""
    return _scalar_or_array(np.exp(log_jeffreys_approximation(n, r, rho)))


def log_jeffreys_approximation(n, r, rho):
    if n < 2:
        raise DomainError("need n >= 2")
    _check_r(r)
    rho = _rho_array(rho)
    out = 0.5 * (n - 1) * np.log1p(-rho * rho) + 0.5 * (3 - 2 * n) * np.log1p(-rho * r)
    return _scalar_or_array(out)


def log_marginal_likelihood_rho0(stats: SufficientStats, gamma=0.0, delta=0.0):
    if not stats.has_scales:
        raise DomainError("the marginal likelihood needs s1 and s2")
    n = stats.n
    _check_theorem(n, gamma, delta)
    return (0.5 * (-gamma - delta - 4) * _LOG2 + (1 - n) * _LOGPI - math.log(n)
            + 0.5 * (1 + gamma - n) * math.log(n * stats.s1 ** 2)
            + 0.5 * (1 + delta - n) * math.log(n * stats.s2 ** 2)
            + log_gamma((n - gamma - 1) / 2.0) + log_gamma((n - delta - 1) / 2.0))


def marginal_likelihood_rho0(stats: SufficientStats, gamma=0.0, delta=0.0):
    """Marginal likelihood with rho fixed at 0; free of r and the sample means."""
    return math.exp(log_marginal_likelihood_rho0(stats, gamma, delta))


# ---------------------------------------------------------------------------
# posterior model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentResult:
    order: int
    value: float
    terms_used: int
    converged: bool


def _log_cosh(t):
    a = np.abs(t)
    return a + np.log1p(np.exp(-2.0 * a)) - _LOG2


class PosteriorModel:
    """Posterior of rho for fixed data summary and hyperparameters.

    Immutable; lazily computed quantities are cached on first use.
    """

    def __init__(self, stats: SufficientStats, eta: Hyperparameters, ctrl=DEFAULT_CONTROL):
        eta.check(stats.n)
        _check_r(stats.r)
        self.stats = stats
        self.eta = eta
        self.ctrl = ctrl
        n, g, d = stats.n, eta.gamma, eta.delta
        self.e = (n - g - d - 1) / 2.0
        self.p = (n - g - 1) / 2.0
        self.q = (n - d - 1) / 2.0
        self.mu = eta.alpha + self.e
        self.log_w = log_w_ratio(n, g, d)
        self._g_cache = {}
        self._series_cache = {}

    @property
    def n(self):
        return self.stats.n

    @property
    def r(self):
        return self.stats.r

    @property
    def w_ratio(self):
        return math.exp(self.log_w)

    def __repr__(self):
        return f"PosteriorModel(n={self.n}, r={self.r!r}, eta={self.eta!r})"

    # -- normaliser -----------------------------------------------------

    @cached_property
    def _log_z0(self):
        """log of the beta = 0 normaliser B(1/2, mu) 2F1(p, q; mu + 1/2; r^2)."""
        log_f, _, terms = log_hyp_series(
            HypParams((self.p, self.q), (self.mu + 0.5,), self.r * self.r), self.ctrl)
        self._z0_terms = terms
        return log_beta(0.5, self.mu) + log_f

    @cached_property
    def log_evidence_kernel(self):
        """log of the integral of h (1-rho^2)^(alpha-1) (1+rho^2)^(beta/2) over (-1, 1)."""
        if self.eta.beta == 0:
            return self._log_z0
        return self.raw_series(0)[0]

    @cached_property
    def log_norm_constant(self):
        """log of the posterior normaliser.

        For alpha > 0 this is the integral of h against the normalised prior.
        In the alpha -> 0 limit the prior normaliser is dropped, leaving the
        finite limit object.
        """
        if self.eta.alpha_limit:
            return self.log_evidence_kernel
        return self.log_evidence_kernel - log_prior_norm_constant(self.eta, self.ctrl)

    @property
    def norm_constant(self):
        return math.exp(self.log_norm_constant)

    # -- density --------------------------------------------------------

    def _log_kernel(self, rho, log1m):
        core, _ = _log_h_core(self.n, self.r, rho, self.eta.gamma, self.eta.delta, self.ctrl)
        out = core + (self.e + self.eta.alpha - 1.0) * log1m
        if self.eta.beta:
            out = out + 0.5 * self.eta.beta * np.log1p(rho * rho)
        return out - self.log_evidence_kernel

    def log_density(self, rho):
        rho = _rho_array(rho)
        flat = np.atleast_1d(rho).ravel()
        out = self._log_kernel(flat, np.log1p(-flat * flat)).reshape(rho.shape)
        return _scalar_or_array(out)

    def density(self, rho):
        return _scalar_or_array(np.exp(self.log_density(rho)))

    def log_density_z(self, z):
        """Log density of tanh^-1(rho), stable for any real z."""
        z = np.asarray(z, dtype=float)
        flat = np.atleast_1d(z).ravel()
        log1m = -2.0 * _log_cosh(flat)
        out = self._log_kernel(np.tanh(flat), log1m) + log1m
        return _scalar_or_array(out.reshape(z.shape))

    # -- general-beta series ------------------------------------------------

    def _log_g(self, js):
        """log of int_0^1 t^((j-1)/2) (1-t)^(mu-1) (1+t)^(beta/2) dt for even j."""
        missing = [j for j in js if j not in self._g_cache]
        if missing:
            u = (np.asarray(missing, dtype=float) + 1.0) / 2.0
            lb = np.array([log_beta(ui, self.mu) for ui in u])
            if self.eta.beta:
                # 2F1(-beta/2, u; u + mu; -1) after Pfaff's transformation
                lf, _, _ = log_hyp_series_rows(
                    [-self.eta.beta / 2.0, self.mu], [u + self.mu], np.full(u.size, 0.5),
                    self.ctrl)
                lb = lb + lf + 0.5 * self.eta.beta * _LOG2
            self._g_cache.update(zip(missing, lb.tolist()))
        return np.array([self._g_cache[j] for j in js])

    def raw_series(self, k):
        """Unnormalised k-th moment as ``(log|S_k|, sign, terms_used)``.

        S_k is the integral of rho^k h (1-rho^2)^(alpha-1) (1+rho^2)^(beta/2).
        """
        k = int(k)
        if k < 0:
            raise DomainError("moment order must be non-negative")
        if k in self._series_cache:
            return self._series_cache[k]
        r = self.r
        odd = k % 2 == 1
        if r == 0.0:
            result = (-math.inf, 0.0, 1) if odd else (float(self._log_g([k])[0]), 1.0, 1)
            self._series_cache[k] = result
            return result
        if odd:
            a1, a2, b1 = self.p + 0.5, self.q + 0.5, 1.5
            lead = _LOG2 + self.log_w + math.log(abs(r))
            j0 = k + 1
        else:
            a1, a2, b1 = self.p, self.q, 0.5
            lead = 0.0
            j0 = k
        log_r2 = 2.0 * math.log(abs(r))
        ctrl = self.ctrl
        total = -math.inf
        small = 0
        log_coef = 0.0
        m = 0
        block = 64
        while m < ctrl.max_terms:
            ms = np.arange(m, m + block, dtype=float)
            ratio = np.log((a1 + ms) * (a2 + ms) / ((b1 + ms) * (ms + 1.0)))
            log_coefs = log_coef + np.concatenate([[0.0], np.cumsum(ratio[:-1])])
            log_coef = log_coef + ratio.sum()
            terms = lead + log_coefs + self._log_g(list(range(j0 + 2 * m, j0 + 2 * (m + block), 2))) \
                + ms * log_r2
            partial = np.logaddexp.accumulate(np.concatenate([[total], terms]))[1:]
            tiny = terms - partial <= math.log(ctrl.rel_tol)
            for i in range(block):
                small = small + 1 if tiny[i] else 0
                if small >= ctrl.consecutive_small:
                    result = (float(partial[i]), math.copysign(1.0, r) if odd else 1.0, m + i + 1)
                    self._series_cache[k] = result
                    return result
            total = float(partial[-1])
            m += block
        raise NonConvergence(f"moment series k={k} did not converge in {m} terms",
                             terms_used=m, partial=total)

    # -- cdf / quantile -------------------------------------------------

    @cached_property
    def _cdf_table(self):
        """Adaptive panels in z = tanh^-1(rho) with cumulative posterior mass."""
        n, r = self.n, self.r
        half_width = max(20.0, 25.0 / max(self.mu, 1e-3))
        centre = math.atanh(r)
        sd = 1.0 / math.sqrt(n)
        breaks = [0.0] + [centre + k * sd for k in (-16, -8, -4, -2, -1, 0, 1, 2, 4, 8, 16)]
        lo, hi, vals, errs, _ = quadrature.adaptive_panels(
            lambda z: np.exp(self.log_density_z(z)), -half_width, half_width,
            rtol=1e-12, atol=1e-13, breakpoints=breaks, max_panels=20000)
        cum = np.concatenate([[0.0], np.cumsum(vals)])
        return lo, hi, cum, float(errs.sum())

    @property
    def cdf_total(self):
        """Numerical integral of the density; 1 up to quadrature error."""
        return float(self._cdf_table[2][-1])

    def _partial(self, i, z):
        lo = self._cdf_table[0][i]
        if z <= lo:
            return 0.0
        x, wk, _ = quadrature.panel_nodes([lo], [z])
        return float(np.sum(np.exp(self.log_density_z(x[0])) * wk[0]))

    def cdf_z(self, z):
        lo, hi, cum, _ = self._cdf_table
        if z <= lo[0]:
            return 0.0
        if z >= hi[-1]:
            return 1.0
        i = int(np.searchsorted(lo, z, side="right")) - 1
        mass = min(cum[i] + self._partial(i, z), cum[i + 1])
        return min(1.0, max(0.0, mass / cum[-1]))

    def quantile_z(self, prob):
        if not 0.0 < prob < 1.0:
            raise DomainError(f"probability must lie in (0, 1), got {prob}")
        lo, hi, cum, _ = self._cdf_table
        target = prob * cum[-1]
        i = int(np.searchsorted(cum, target, side="right")) - 1
        i = min(max(i, 0), lo.size - 1)
        f = lambda z: cum[i] + self._partial(i, z) - target
        a, b = lo[i], hi[i]
        if f(b) <= 0:
            return float(b)
        return brentq(f, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


def _model_beta0(model):
    if model.eta.beta != 0:
        raise DomainError("this closed form needs beta = 0")


def norm_constant_beta0(stats: SufficientStats, eta: Hyperparameters, ctrl=DEFAULT_CONTROL):
    """Posterior normaliser for beta = 0 (the finite limit object when alpha -> 0)."""
    if eta.beta != 0:
        raise DomainError("this closed form needs beta = 0")
    return PosteriorModel(stats, eta, ctrl).norm_constant


def density_beta0(model: PosteriorModel, rho):
    _model_beta0(model)
    return model.density(rho)


def density(model: PosteriorModel, rho):
    return model.density(rho)


def moments_beta0(model: PosteriorModel, k):
    """E[rho^k] from the beta = 0 closed forms (3F2 at r^2)."""
    _model_beta0(model)
    k = int(k)
    if k < 0:
        raise DomainError("moment order must be non-negative")
    if k == 0:
        return MomentResult(0, 1.0, 1, True)
    r, mu, p, q = model.r, model.mu, model.p, model.q
    if k % 2 == 0:
        u = (k + 1) / 2.0
        log_f, _, terms = log_hyp_series(HypParams((u, p, q), (0.5, mu + u), r * r), model.ctrl)
        value = math.exp(log_beta(u, mu) + log_f - model._log_z0)
    else:
        if r == 0.0:
            return MomentResult(k, 0.0, 1, True)
        u = (k + 2) / 2.0
        log_f, _, terms = log_hyp_series(
            HypParams((u, p + 0.5, q + 0.5), (1.5, mu + u), r * r), model.ctrl)
        value = math.copysign(
            math.exp(_LOG2 + math.log(abs(r)) + model.log_w + log_beta(u, mu) + log_f
                     - model._log_z0), r)
    return MomentResult(k, value, max(terms, model._z0_terms), True)


def moment_general(model: PosteriorModel, k):
    """E[rho^k] as the ratio of the k-th and zeroth moment series (any beta >= 0)."""
    k = int(k)
    if k == 0:
        return MomentResult(0, 1.0, model.raw_series(0)[2], True)
    log_s, sign, terms = model.raw_series(k)
    log_s0, _, terms0 = model.raw_series(0)
    value = 0.0 if sign == 0 else sign * math.exp(log_s - log_s0)
    return MomentResult(k, value, max(terms, terms0), True)


def moment(model: PosteriorModel, k):
    """Closed form when beta = 0, general series otherwise."""
    return moments_beta0(model, k) if model.eta.beta == 0 else moment_general(model, k)


def cdf(model: PosteriorModel, rho):
    if rho <= -1.0:
        return 0.0
    if rho >= 1.0:
        return 1.0
    return model.cdf_z(math.atanh(rho))


def quantile(model: PosteriorModel, prob):
    return math.tanh(model.quantile_z(prob))


def credible_interval(model: PosteriorModel, mass=0.95):
    """Equal-tail interval holding ``mass`` posterior probability."""
    if not 0.0 < mass < 1.0:
        raise DomainError(f"interval mass must lie in (0, 1), got {mass}")
    tail = (1.0 - mass) / 2.0
    return quantile(model, tail), quantile(model, 1.0 - tail)
