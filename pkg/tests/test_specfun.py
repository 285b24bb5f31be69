import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from corrpost.errors import DomainError, NonConvergence
from corrpost.specfun import (HypParams, SeriesControl, beta, hyp1f1, hyp2f1, hyp3f2,
                              hyp_series, log_beta, log_gamma, log_hyp2f1, log_pochhammer,
                              pochhammer)

from conftest import rel_err


def test_log_gamma_known_values():
    assert log_gamma(1.0) == 0.0
    assert log_gamma(2.0) == 0.0
    assert rel_err(log_gamma(0.5), 0.57236494292470008707) < 1e-15
    assert rel_err(log_gamma(21.0), math.log(math.factorial(20))) < 1e-15


def test_log_gamma_accuracy_against_mpmath():
    mpmath.mp.dps = 40
    xs = np.concatenate([np.geomspace(1e-6, 1e6, 400), np.linspace(0.5, 2.5, 401)])
    worst = 0.0
    for x in xs:
        want = mpmath.loggamma(mpmath.mpf(float(x)))
        if want == 0:
            continue
        worst = max(worst, float(abs((log_gamma(x) - want) / want)))
    assert worst <= 1e-13


@pytest.mark.parametrize("x", [0.0, -1.0, -0.5, math.inf, math.nan])
def test_log_gamma_rejects_non_positive(x):
    with pytest.raises(DomainError):
        log_gamma(x)


@given(st.floats(0.25, 50.0))
def test_log_gamma_duplication(x):
    lhs = log_gamma(2 * x)
    rhs = log_gamma(x) + log_gamma(x + 0.5) + (2 * x - 1) * math.log(2) - 0.5 * math.log(math.pi)
    assert abs(lhs - rhs) <= 1e-12


def test_beta_values():
    assert beta(1, 1) == 1.0
    assert rel_err(beta(0.5, 0.5), math.pi) < 1e-15
    assert rel_err(beta(2, 3), 1 / 12) < 1e-15
    with pytest.raises(DomainError):
        beta(0, 1)


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_beta_symmetry_exact(u, v):
    assert beta(u, v) == beta(v, u)
    assert log_beta(u, v) == log_beta(v, u)


def test_pochhammer_values():
    assert pochhammer(3, 0) == 1.0
    assert pochhammer(2, 3) == 24.0
    assert pochhammer(-1.5, 2) == 0.75
    assert pochhammer(-2, 5) == 0.0


@pytest.mark.parametrize("x", [-2.5, -1.0, 0.5, 3.0, 10.0])
def test_pochhammer_recurrence(x):
    for m in range(51):
        nxt, cur = pochhammer(x, m + 1), pochhammer(x, m)
        if cur == 0 or x + m == 0:
            assert nxt == 0
        else:
            assert rel_err(nxt, cur * (x + m)) <= 1e-12


def test_pochhammer_overflow_goes_through_logs():
    logabs, sign = log_pochhammer(0.5, 400)
    assert sign == 1.0
    assert rel_err(logabs, float(mpmath.log(mpmath.rf(0.5, 400)))) < 1e-13
    assert pochhammer(0.5, 400) == math.inf
    assert rel_err(pochhammer(0.5, 150), float(mpmath.rf(0.5, 150))) < 1e-13
    assert pochhammer(-0.5, 301) == -math.inf


def test_series_control_validation():
    for kwargs in ({"rel_tol": 0}, {"max_terms": 0}, {"consecutive_small": 0}):
        with pytest.raises(DomainError):
            SeriesControl(**kwargs)


def test_hyp_params_reject_poles():
    with pytest.raises(DomainError):
        HypParams((1.0,), (-2.0,), 0.5)
    with pytest.raises(DomainError):
        HypParams((1.0, 1.0), (0.0,), 0.5)
    assert HypParams((-2.0, 1.0), (3.0,), 0.5).terminates


def test_hyp_series_identities():
    assert hyp2f1(1.3, 2.1, 0.7, 0.0) == 1.0
    assert rel_err(hyp2f1(1, 1, 2, 0.5), 2 * math.log(2)) < 1e-14
    assert rel_err(hyp1f1(1, 2, 1), math.e - 1) < 1e-14
    assert hyp2f1(0.0, 2.5, 1.5, 0.7) == 1.0
    assert rel_err(hyp_series(HypParams((1.0,), (), 0.5)), 2.0) < 1e-14


def test_hyp3f2_against_mpmath():
    mpmath.mp.dps = 30
    want = mpmath.hyp3f2(1.5, 4.5, 4.5, 0.5, 7.0, 0.36)
    assert rel_err(hyp3f2(1.5, 4.5, 4.5, 0.5, 7.0, 0.36), float(want)) < 1e-13


def test_hyp2f1_symmetry_bitwise():
    for z in (0.1, 0.5, 0.9):
        assert hyp2f1(0.5, 4.5, 3.0, z) == hyp2f1(4.5, 0.5, 3.0, z)


@pytest.mark.parametrize("a", [0.5, 2.0, 4.5])
@pytest.mark.parametrize("b", [0.5, 2.0, 4.5])
@pytest.mark.parametrize("c", [0.5, 1.5, 3.0])
def test_euler_transformation(a, b, c):
    if c - a - b == 0:
        return
    for z in np.linspace(0.0, 0.9, 10):
        lhs = hyp2f1(a, b, c, z)
        rhs = (1 - z) ** (c - a - b) * hyp2f1(c - a, c - b, c, z)
        assert rel_err(lhs, rhs) <= 1e-10


def test_hyp2f1_negative_argument_uses_transformation():
    # the prior normaliser's argument; direct alternating summation is very slow here
    mpmath.mp.dps = 30
    for a, b, c in [(-0.5, 0.5, 1.0), (-1.0, 0.5, 1.5), (-0.5, 0.5, 2.5), (-3.7, 1.5, 0.75)]:
        want = float(mpmath.hyp2f1(a, b, c, -1))
        assert rel_err(hyp2f1(a, b, c, -1.0), want) < 1e-13
    with pytest.raises(DomainError):
        log_hyp2f1(0.5, 0.5, 1.0, -1.5)


def test_series_divergence_and_non_convergence():
    with pytest.raises(DomainError):
        hyp2f1(1, 1, 2, 1.2)
    with pytest.raises(DomainError):
        hyp2f1(1, 1, 1.5, 1.0)
    with pytest.raises(NonConvergence) as info:
        hyp2f1(1, 1, 2, 0.999, SeriesControl(max_terms=50))
    assert info.value.terms_used == 50


def test_large_parameter_series_stays_finite():
    # n = 10000 style parameters: the value overflows float64 but its log does not
    mpmath.mp.dps = 30
    log_f, sign = log_hyp2f1(4999.5, 4999.5, 5000.0, 0.36)
    want = float(mpmath.log(mpmath.hyp2f1(4999.5, 4999.5, 5000.0, 0.36)))
    assert sign == 1.0
    assert rel_err(log_f, want) < 1e-12
