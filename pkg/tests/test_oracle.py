import math

import mpmath
import numpy as np
import pytest
from scipy import stats as sp_stats

from corrpost import oracle
from corrpost.errors import DomainError
from corrpost.model import Hyperparameters, SufficientStats, ingest
from corrpost.posterior import (PosteriorModel, log_marginal_likelihood_rho0,
                                log_reduced_likelihood, moments_beta0)

from conftest import rel_err

Y5 = SufficientStats(n=5, r=0.6, xbar1=0.0, xbar2=0.0, s1=1.0, s2=1.0)
DATA = [(1.2, 0.8), (0.4, 0.9), (-0.7, -1.1), (2.0, 1.1), (-0.3, 0.2)]


# ---------------------------------------------------------------------------
# full likelihood
# ---------------------------------------------------------------------------

def test_full_likelihood_at_the_sample_values():
    for n, s1, s2 in [(5, 1.0, 1.0), (12, 0.3, 2.5)]:
        y = SufficientStats(n=n, r=0.0, xbar1=1.0, xbar2=-1.0, s1=s1, s2=s2)
        got = oracle.full_log_likelihood(y, oracle.FullParams(1.0, -1.0, s1, s2, 0.0))
        want = -n * math.log(2 * math.pi * s1 * s2) - n
        assert abs(got - want) < 1e-13 * abs(want)


def test_full_likelihood_decreases_away_from_the_means():
    theta = lambda m: oracle.FullParams(m, 0.0, 1.0, 1.0, 0.3)
    values = [oracle.full_likelihood(Y5, theta(m)) for m in (0.0, 0.5, 1.0, 2.0)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_full_likelihood_matches_the_raw_data():
    y = ingest(DATA)
    for theta in [oracle.FullParams(0.3, 0.2, 1.1, 0.9, 0.5),
                  oracle.FullParams(-1.0, 0.5, 0.5, 2.0, -0.7)]:
        cov = [[theta.sigma1 ** 2, theta.rho * theta.sigma1 * theta.sigma2],
               [theta.rho * theta.sigma1 * theta.sigma2, theta.sigma2 ** 2]]
        want = sp_stats.multivariate_normal([theta.mu1, theta.mu2], cov).logpdf(DATA).sum()
        assert abs(oracle.full_log_likelihood(y, theta) - want) < 1e-12 * abs(want)


def test_full_likelihood_domain():
    with pytest.raises(DomainError):
        oracle.FullParams(0, 0, 1.0, 0.0, 0.1)
    with pytest.raises(DomainError):
        oracle.FullParams(0, 0, 1.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        oracle.full_likelihood(SufficientStats.summary(5, 0.1), oracle.FullParams(0, 0, 1, 1, 0))


# ---------------------------------------------------------------------------
# lemma
# ---------------------------------------------------------------------------

def test_lemma_examples():
    assert rel_err(oracle.lemma_integral(1.0, 0.0, 1.0), math.sqrt(math.pi) / 2) < 1e-15
    assert rel_err(oracle.lemma_integral(1.0, 0.0, 2.0), 0.5) < 1e-15
    assert rel_err(oracle.lemma_quadrature(1.0, 0.0, 1.0).value, math.sqrt(math.pi) / 2) < 1e-12


def test_lemma_continuous_in_b():
    for c in (1.0, 2.0, 3.5):
        at0 = oracle.lemma_integral(2.0, 0.0, c)
        for b in (-1e-9, 1e-9):
            assert rel_err(oracle.lemma_integral(2.0, b, c), at0) < 1e-8


@pytest.mark.parametrize("abc", [(0.5, -1.0, 1.0), (2.0, 1.0, 3.5), (1.0, -4.0, 2.5),
                                 (3.0, 6.0, 0.7)])
def test_lemma_against_mpmath(abc):
    a, b, c = abc
    mpmath.mp.dps = 30
    want = mpmath.quad(lambda u: u ** (c - 1) * mpmath.exp(-a * u * u - b * u), [0, 1, mpmath.inf])
    assert rel_err(oracle.lemma_integral(a, b, c), float(want)) < 1e-12
    assert rel_err(oracle.lemma_quadrature(a, b, c).value, float(want)) < 1e-10


def test_lemma_grid_suite():
    checks = oracle.lemma_checks()
    assert len(checks) == 27
    assert all(c.passed for c in checks)


def test_lemma_domain():
    with pytest.raises(DomainError):
        oracle.lemma_integral(0.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        oracle.lemma_quadrature(1.0, 1.0, -1.0)


# ---------------------------------------------------------------------------
# four-dimensional factorisation
# ---------------------------------------------------------------------------

def _ratio(y, gamma, delta, rho, rtol):
    res = oracle.integrate_theorem(y, gamma, delta, rho, rtol=rtol)
    return res.value / math.exp(log_reduced_likelihood(y.n, y.r, rho, gamma, delta))


def test_theorem_factorises_quick():
    p0 = math.exp(log_marginal_likelihood_rho0(Y5))
    for rho in (-0.4, 0.4):
        assert rel_err(_ratio(Y5, 0.0, 0.0, rho, 1e-4), p0) < 1e-4


def test_theorem_reflection():
    mirror = SufficientStats(n=5, r=-0.6, xbar1=0.0, xbar2=0.0, s1=1.0, s2=1.0)
    a = oracle.integrate_theorem(Y5, -1.0, 1.0, 0.4, rtol=1e-5).value
    b = oracle.integrate_theorem(mirror, -1.0, 1.0, -0.4, rtol=1e-5).value
    assert rel_err(a, b) < 1e-5


def test_theorem_free_of_means_and_scales_through_p0():
    y = SufficientStats(n=6, r=-0.3, xbar1=2.0, xbar2=-1.0, s1=0.5, s2=2.0)
    p0 = math.exp(log_marginal_likelihood_rho0(y, 1.0, 0.0))
    assert rel_err(_ratio(y, 1.0, 0.0, 0.5, 1e-4), p0) < 1e-4


@pytest.mark.slow
def test_theorem_self_consistent_across_tolerances():
    coarse = oracle.integrate_theorem_many(Y5, -1.0, 1.0, [-0.8, 0.0, 0.8], rtol=1e-5)
    fine = oracle.integrate_theorem_many(Y5, -1.0, 1.0, [-0.8, 0.0, 0.8], rtol=1e-8)
    for c, f in zip(coarse, fine):
        assert abs(c.value - f.value) <= c.est_error + f.est_error
        assert f.est_error <= 1e-8 * f.value


def test_theorem_domain():
    with pytest.raises(DomainError):
        oracle.integrate_theorem(SufficientStats.summary(5, 0.1), 0, 0, 0.2)
    with pytest.raises(DomainError):
        oracle.integrate_theorem(Y5, 4.0, 0.0, 0.2)
    big = SufficientStats(n=40, r=0.1, s1=1.0, s2=1.0)
    with pytest.raises(DomainError):
        oracle.integrate_theorem(big, 0, 0, 0.2)


# ---------------------------------------------------------------------------
# one-dimensional functionals
# ---------------------------------------------------------------------------

def test_functionals_against_mpmath():
    m = PosteriorModel(SufficientStats.summary(10, 0.6), Hyperparameters(1.0))
    assert rel_err(oracle.integrate_posterior_functional(m, "norm").value,
                   1.7130970267364667373) < 1e-9
    assert rel_err(oracle.integrate_posterior_functional(m, "moment", 2).value,
                   0.27130409962902426267) < 1e-9
    assert abs(oracle.integrate_posterior_functional(m, "cdf", 0.0).value
               - 0.047611212076456743802) < 1e-9
    assert oracle.integrate_posterior_functional(m, "cdf", 1.0).value == 1.0
    moments, errors = oracle.posterior_moments_quad(m, 4)
    assert np.all(errors < 1e-9 * np.abs(moments))
    assert rel_err(moments[0], moments_beta0(m, 1).value) < 1e-9


def test_zmoment_symmetry():
    m = PosteriorModel(SufficientStats.summary(20, 0.0), Hyperparameters.limit())
    # a vanishing first moment has no relative scale, so use the raw integrals
    (total, first), _, _, _ = oracle.posterior_functionals(m, [0, 1], of="z")
    assert abs(first / total) < 1e-12
    v = oracle.integrate_posterior_functional(m, "zmoment", 2).value
    assert 0.8 / 20 < v < 1.5 / 20


def test_functional_domain():
    m = PosteriorModel(SufficientStats.summary(10, 0.6), Hyperparameters(1.0))
    with pytest.raises(DomainError):
        oracle.integrate_posterior_functional(m, "mode")
    with pytest.raises(DomainError):
        oracle.run_checks("everything")


def test_check_record():
    assert oracle.Check("x", "case", 1e-9, 1e-8).passed
    assert not oracle.Check("x", "case", 2e-8, 1e-8).passed
