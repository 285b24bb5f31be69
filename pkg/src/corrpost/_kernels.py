"""Hot loops, in two interchangeable flavours.

Every kernel exists as a scalar-loop function compiled with numba and as a
vectorised numpy function.  Both take and return plain arrays so callers never
see which one ran.  ``select(backend)`` hands out one flavour; the module-level
names point at the flavour picked by :mod:`corrpost._accel`.
"""

import math
from types import SimpleNamespace

import numpy as np

from ._accel import HAVE_NUMBA, USE_NUMBA, njit

# Partial sums are renormalised once they exceed this, so series whose terms
# run far beyond the float range (large n) still return a finite log-modulus.
_BIG = 1e250
_LOG_BIG = math.log(_BIG)


# ---------------------------------------------------------------------------
# generalized hypergeometric series
# ---------------------------------------------------------------------------

def _series_loop(a, b, z, rel_tol, max_terms, consecutive):
    size = z.shape[0]
    log_mod = np.empty(size)
    sign = np.empty(size)
    terms = np.empty(size, dtype=np.int64)
    converged = np.zeros(size, dtype=np.bool_)
    for i in range(size):
        zi = z[i]
        term = 1.0
        total = 1.0
        scale = 0.0
        small = 0
        m = 0
        ok = False
        while m + 1 < max_terms:
            ratio = zi / (m + 1.0)
            for j in range(a.shape[0]):
                ratio *= a[j] + m
            for j in range(b.shape[0]):
                ratio /= b[j] + m
            term *= ratio
            total += term
            m += 1
            if abs(term) <= rel_tol * abs(total):
                small += 1
                if small >= consecutive:
                    ok = True
                    break
            else:
                small = 0
            if abs(total) > _BIG or abs(term) > _BIG:
                term /= _BIG
                total /= _BIG
                scale += _LOG_BIG
        terms[i] = m + 1
        converged[i] = ok
        if total == 0.0:
            log_mod[i] = -np.inf
            sign[i] = 0.0
        else:
            log_mod[i] = math.log(abs(total)) + scale
            sign[i] = 1.0 if total > 0.0 else -1.0
    return log_mod, sign, terms, converged


def _series_vector(a, b, z, rel_tol, max_terms, consecutive):
    z = np.asarray(z, dtype=float)
    size = z.shape[0]
    term = np.ones(size)
    total = np.ones(size)
    scale = np.zeros(size)
    small = np.zeros(size, dtype=np.int64)
    terms = np.ones(size, dtype=np.int64)
    converged = np.zeros(size, dtype=bool)
    active = np.arange(size)
    m = 0
    while active.size and m + 1 < max_terms:
        ratio = z[active] / (m + 1.0)
        for aj in a:
            ratio = ratio * (aj + m)
        for bj in b:
            ratio = ratio / (bj + m)
        t = term[active] * ratio
        s = total[active] + t
        m += 1
        tiny = np.abs(t) <= rel_tol * np.abs(s)
        k = np.where(tiny, small[active] + 1, 0)
        big = (np.abs(s) > _BIG) | (np.abs(t) > _BIG)
        t = np.where(big, t / _BIG, t)
        s = np.where(big, s / _BIG, s)
        scale[active] += np.where(big, _LOG_BIG, 0.0)
        term[active] = t
        total[active] = s
        small[active] = k
        terms[active] = m + 1
        done = k >= consecutive
        converged[active[done]] = True
        active = active[~done]
    with np.errstate(divide="ignore"):
        log_mod = np.log(np.abs(total)) + scale
    return log_mod, np.sign(total), terms, converged


# ---------------------------------------------------------------------------
# independence-chain Metropolis walk
# ---------------------------------------------------------------------------

def _imh_loop(log_w, log_u, log_w0):
    size = log_w.shape[0]
    held = np.empty(size, dtype=np.int64)
    accepted = np.zeros(size, dtype=np.bool_)
    current = -1
    current_w = log_w0
    for i in range(size):
        if log_u[i] < log_w[i] - current_w:
            current = i
            current_w = log_w[i]
            accepted[i] = True
        held[i] = current
    return held, accepted


def _imh_python(log_w, log_u, log_w0):
    # Inherently sequential; plain floats keep the interpreter loop cheap.
    w = np.asarray(log_w, dtype=float).tolist()
    u = np.asarray(log_u, dtype=float).tolist()
    held = np.empty(len(w), dtype=np.int64)
    accepted = np.zeros(len(w), dtype=bool)
    current = -1
    current_w = float(log_w0)
    for i, (wi, ui) in enumerate(zip(w, u)):
        if ui < wi - current_w:
            current = i
            current_w = wi
            accepted[i] = True
        held[i] = current
    return held, accepted


# ---------------------------------------------------------------------------
# bivariate-normal likelihood of the sufficient statistics
# ---------------------------------------------------------------------------

def log_likelihood_terms(n, xbar1, xbar2, s1, s2, r, mu1, mu2, sig1, sig2, rho):
    """Log of the sufficient-statistics likelihood; broadcasts over arrays."""
    q = 1.0 - rho * rho
    d1 = (xbar1 - mu1) / sig1
    d2 = (xbar2 - mu2) / sig2
    a1 = s1 / sig1
    a2 = s2 / sig2
    quad = d1 * d1 - 2.0 * rho * d1 * d2 + d2 * d2
    quad = quad + a1 * a1 - 2.0 * rho * r * a1 * a2 + a2 * a2
    return -n * np.log(2.0 * np.pi * sig1 * sig2 * np.sqrt(q)) - n * quad / (2.0 * q)


def _theorem_grid_loop(n, xbar1, xbar2, s1, s2, r, gamma, delta, rhos,
                       u1, u2, v, vw, log_ref):
    nr = rhos.shape[0]
    out = np.zeros((nr, u1.shape[0], u2.shape[0]))
    sqn = math.sqrt(n)
    for k in range(nr):
        rho = rhos[k]
        c = math.sqrt(1.0 - rho * rho)
        for i in range(u1.shape[0]):
            sig1 = s1 * math.exp(u1[i])
            for j in range(u2.shape[0]):
                sig2 = s2 * math.exp(u2[j])
                # prior sigma^(g-1), d sigma = sigma du, mean Jacobian sigma1*sigma2*c/n
                base = (gamma + 1.0) * math.log(sig1) + (delta + 1.0) * math.log(sig2)
                base += math.log(c / n) - log_ref[k]
                acc = 0.0
                for p in range(v.shape[0]):
                    mu1 = xbar1 + sig1 / sqn * v[p]
                    for q in range(v.shape[0]):
                        mu2 = xbar2 + sig2 / sqn * (rho * v[p] + c * v[q])
                        ll = _loglik_scalar(n, xbar1, xbar2, s1, s2, r, mu1, mu2, sig1, sig2, rho)
                        acc += vw[p] * vw[q] * math.exp(ll + base)
                out[k, i, j] = acc
    return out


def _theorem_grid_vector(n, xbar1, xbar2, s1, s2, r, gamma, delta, rhos,
                         u1, u2, v, vw, log_ref):
    rhos = np.asarray(rhos, dtype=float)
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    out = np.empty((rhos.size, u1.size, u2.size))
    sqn = math.sqrt(n)
    vp = v[None, None, :, None]
    vq = v[None, None, None, :]
    weights = vw[:, None] * vw[None, :]
    sig2 = s2 * np.exp(u2)[None, :, None, None]
    # bound the temporary (rows, m2, T, T) block to a few million doubles
    rows = max(1, int(2_000_000 // max(1, u2.size * v.size * v.size)))
    for k, rho in enumerate(rhos):
        c = math.sqrt(1.0 - rho * rho)
        for start in range(0, u1.size, rows):
            sig1 = s1 * np.exp(u1[start:start + rows])[:, None, None, None]
            mu1 = xbar1 + sig1 / sqn * vp
            mu2 = xbar2 + sig2 / sqn * (rho * vp + c * vq)
            ll = log_likelihood_terms(n, xbar1, xbar2, s1, s2, r, mu1, mu2, sig1, sig2, rho)
            base = (gamma + 1.0) * np.log(sig1) + (delta + 1.0) * np.log(sig2)
            base = base + math.log(c / n) - log_ref[k]
            out[k, start:start + rows] = np.einsum("ijpq,pq->ij", np.exp(ll + base), weights)
    return out


# ---------------------------------------------------------------------------
# flavour tables
# ---------------------------------------------------------------------------

numpy_kernels = SimpleNamespace(
    name="numpy",
    series=_series_vector,
    imh=_imh_python,
    theorem_grid=_theorem_grid_vector,
)

if HAVE_NUMBA:
    _loglik_scalar = njit(log_likelihood_terms)
    _grid_nb = njit(_theorem_grid_loop)

    def _theorem_grid_numba(n, xbar1, xbar2, s1, s2, r, gamma, delta, rhos,
                            u1, u2, v, vw, log_ref):
        return _grid_nb(float(n), float(xbar1), float(xbar2), float(s1), float(s2),
                        float(r), float(gamma), float(delta),
                        np.ascontiguousarray(rhos, dtype=float),
                        np.ascontiguousarray(u1, dtype=float),
                        np.ascontiguousarray(u2, dtype=float),
                        np.ascontiguousarray(v, dtype=float),
                        np.ascontiguousarray(vw, dtype=float),
                        np.ascontiguousarray(log_ref, dtype=float))

    _series_nb = njit(_series_loop)
    _imh_nb = njit(_imh_loop)

    def _series_numba(a, b, z, rel_tol, max_terms, consecutive):
        return _series_nb(np.ascontiguousarray(a, dtype=float),
                          np.ascontiguousarray(b, dtype=float),
                          np.ascontiguousarray(z, dtype=float),
                          float(rel_tol), int(max_terms), int(consecutive))

    def _imh_numba(log_w, log_u, log_w0):
        return _imh_nb(np.ascontiguousarray(log_w, dtype=float),
                       np.ascontiguousarray(log_u, dtype=float), float(log_w0))

    numba_kernels = SimpleNamespace(
        name="numba",
        series=_series_numba,
        imh=_imh_numba,
        theorem_grid=_theorem_grid_numba,
    )
else:  # pragma: no cover
    numba_kernels = None


def select(backend):
    if backend == "numba":
        if numba_kernels is None:
            raise RuntimeError("numba is not installed")
        return numba_kernels
    if backend == "numpy":
        return numpy_kernels
    raise ValueError(f"unknown backend {backend!r}")


active = numba_kernels if USE_NUMBA else numpy_kernels
