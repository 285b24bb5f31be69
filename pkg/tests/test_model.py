import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from corrpost.errors import DegenerateData, DomainError
from corrpost.model import (PRESETS, Hyperparameters, SufficientStats, generalized_wishart,
                            ingest, prior_density, prior_norm_constant, read_csv,
                            resolve_preset)

from conftest import rel_err


def two_pass(pairs):
    x = np.asarray(pairs, dtype=float)
    n = len(x)
    m1 = sum(p[0] for p in pairs) / n
    m2 = sum(p[1] for p in pairs) / n
    ss1 = sum((p[0] - m1) ** 2 for p in pairs) / n
    ss2 = sum((p[1] - m2) ** 2 for p in pairs) / n
    cross = sum((p[0] - m1) * (p[1] - m2) for p in pairs) / n
    return n, m1, m2, math.sqrt(ss1), math.sqrt(ss2), cross / math.sqrt(ss1 * ss2)


def test_ingest_collinear_pair_is_clamped():
    with pytest.warns(RuntimeWarning, match="clamped"):
        y = ingest([(0, 0), (1, 1)])
    assert y.n == 2 and y.r == 1 - 1e-9
    with pytest.warns(RuntimeWarning):
        assert ingest([(0, 1), (1, 0)]).r == -(1 - 1e-9)


def test_ingest_orthogonal_design():
    assert ingest([(0, 0), (1, 0), (0, 1), (1, 1)]).r == 0.0


def test_ingest_matches_two_pass_reference():
    pairs = [(1, 2), (2, 1), (3, 5), (4, 3), (5, 6)]
    y = ingest(pairs)
    n, m1, m2, s1, s2, r = two_pass(pairs)
    assert y.n == n
    assert abs(y.xbar1 - m1) < 1e-15 and abs(y.xbar2 - m2) < 1e-15
    assert rel_err(y.s1, s1) < 1e-15 and rel_err(y.s2, s2) < 1e-15
    assert rel_err(y.r, r) < 1e-14
    assert rel_err(y.r, 0.7624928516630233) < 1e-14


@pytest.mark.parametrize("pairs", [[(1, 2)], [(1, 2), (1, 3), (1, 4)], [(1, 2), (float("nan"), 1)]])
def test_ingest_degenerate(pairs):
    with pytest.raises(DegenerateData):
        ingest(pairs)


pair_lists = st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)), min_size=3, max_size=30)


def _usable(pairs):
    x = np.asarray(pairs)
    return x[:, 0].std() > 1e-3 and x[:, 1].std() > 1e-3


@given(pair_lists)
def test_ingest_swap_invariance(pairs):
    if not _usable(pairs):
        return
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        y = ingest(pairs)
        z = ingest([(b, a) for a, b in pairs])
    assert abs(y.r - z.r) <= 1e-12
    assert (y.xbar1, y.s1) == pytest.approx((z.xbar2, z.s2), rel=1e-12, abs=1e-12)


@given(pair_lists, st.floats(0.01, 100), st.floats(-100, 100))
def test_ingest_affine_invariance(pairs, a, b):
    if not _usable(pairs):
        return
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        y = ingest(pairs)
        z = ingest([(a * p + b, q) for p, q in pairs])
    assert abs(y.r - z.r) <= 1e-12


def test_sufficient_stats_validation():
    with pytest.raises(DomainError):
        SufficientStats(n=1, r=0.0)
    with pytest.raises(DomainError):
        SufficientStats(n=5, r=1.0)
    with pytest.raises(DomainError):
        SufficientStats(n=5, r=0.1, s1=0.0, s2=1.0)
    with pytest.warns(RuntimeWarning):
        assert SufficientStats.summary(5, -1.0).r == -(1 - 1e-9)
    with pytest.raises(DomainError):
        SufficientStats.summary(5, 1.5)


def test_read_csv(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("x,y\n1,2\n2,1\n\n3,5\n")
    assert read_csv(path) == [(1, 2), (2, 1), (3, 5)]
    path.write_text("1,2\n2,1\n")
    assert read_csv(path) == [(1, 2), (2, 1)]
    path.write_text("x,y\n1,2\nfoo,1\n")
    with pytest.raises(DomainError, match="row 3"):
        read_csv(path)
    path.write_text("1,2,3\n")
    with pytest.raises(DomainError, match="row 1"):
        read_csv(path)


def test_hyperparameter_validation():
    with pytest.raises(DomainError):
        Hyperparameters(0.0)
    with pytest.raises(DomainError):
        Hyperparameters(-1.0)
    with pytest.raises(DomainError):
        Hyperparameters(1.0, beta=-0.5)
    with pytest.raises(DomainError):
        Hyperparameters(0.5, alpha_limit=True)
    eta = Hyperparameters(1.0, 0.0, 3.0, 0.0)
    assert not eta.theorem_valid(4) and eta.theorem_valid(5)
    with pytest.raises(DomainError, match="gamma"):
        eta.check(4)


def test_posterior_valid_bound():
    eta = Hyperparameters.limit(0.0, 1.5, 1.5)
    assert eta.theorem_valid(3)
    assert not eta.posterior_valid(3)
    assert eta.posterior_valid(5)


def test_presets():
    assert PRESETS["jeffreys"] == Hyperparameters(1.0, 0.0, 0.0, 0.0)
    lindley = resolve_preset("lindley").resolved
    assert lindley.alpha_limit and (lindley.beta, lindley.gamma, lindley.delta) == (0, 0, 0)
    haar = resolve_preset("right-haar").resolved
    assert haar.alpha_limit and (haar.gamma, haar.delta) == (-1, 1)
    ref = resolve_preset("one-at-a-time").resolved
    assert ref.alpha_limit and ref.beta == 1
    assert resolve_preset("wishart:3,4").resolved == Hyperparameters(1.0, 0.0, 1.0, 3.0)
    assert resolve_preset("custom:0,0,-1,1").resolved == haar
    assert resolve_preset("custom:2,1,0,0").resolved == Hyperparameters(2.0, 1.0)
    with pytest.raises(DomainError):
        resolve_preset("flat")
    with pytest.raises(DomainError):
        resolve_preset("custom:1,2")


def test_wishart_b2_is_the_limit_and_never_fails_to_construct():
    eta = generalized_wishart(2, 2)
    assert eta.alpha_limit and eta.gamma == 0 and eta.delta == 1
    assert not eta.posterior_valid(2) and eta.posterior_valid(3)


def test_prior_density_values():
    assert prior_density(0.0, Hyperparameters(1.0)) == 0.5
    rho = np.linspace(-0.99, 0.99, 41)
    dens = prior_density(rho, Hyperparameters(1.0))
    assert np.array_equal(dens, dens[::-1])
    # frozen from 40-digit quadrature of the kernel
    assert rel_err(prior_density(0.5, Hyperparameters(2.0, 1.0)), 0.57619910796765199536) < 1e-13
    with pytest.raises(DomainError):
        prior_density(0.0, Hyperparameters.limit())
    with pytest.raises(DomainError):
        prior_density(1.0, Hyperparameters(1.0))


def test_prior_norm_constant():
    assert rel_err(prior_norm_constant(Hyperparameters(1.0)), 2.0) < 1e-15
    assert rel_err(prior_norm_constant(Hyperparameters(0.5)), math.pi) < 1e-15
    assert rel_err(prior_norm_constant(Hyperparameters(1.0, 2.0)), 8 / 3) < 1e-15
    with pytest.raises(DomainError):
        prior_norm_constant(Hyperparameters.limit())


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("beta", [0.0, 1.0, 2.0])
def test_prior_integrates_to_one(alpha, beta):
    eta = Hyperparameters(alpha, beta)
    # the (1 - rho^2)^(alpha - 1) endpoint behaviour goes into an algebraic weight
    def smooth(x):
        # the rule may sample the endpoints themselves
        x = min(max(x, -0.999999), 0.999999)
        return prior_density(x, eta) / (1 - x * x) ** (alpha - 1)

    value, _ = integrate.quad(smooth, -1, 1, weight="alg", wvar=(alpha - 1, alpha - 1),
                              epsabs=0, epsrel=1e-12)
    assert abs(value - 1) <= 1e-8


@given(st.floats(-0.999, 0.999), st.floats(0.1, 5), st.floats(0, 5))
def test_prior_density_even(rho, alpha, beta):
    eta = Hyperparameters(alpha, beta)
    assert prior_density(rho, eta) == prior_density(-rho, eta)
