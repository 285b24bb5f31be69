"""Data summaries, the prior class on (rho, sigma1, sigma2) and its presets.

The prior family is

    pi(theta) ~ (1 - rho^2)^(alpha - 1) (1 + rho^2)^(beta / 2) sigma1^(gamma - 1) sigma2^(delta - 1)

with flat priors on the two means.  ``alpha -> 0+`` (Lindley's reference prior
and relatives) has no normalised prior on rho; it is represented by an explicit
flag so downstream code takes the cancelled-normaliser route instead of
evaluating Gamma(alpha) at zero.
"""

from dataclasses import dataclass
import csv
import math
import warnings
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateData, DomainError
from .specfun import DEFAULT_CONTROL, log_beta, log_hyp2f1

R_CLAMP = 1.0 - 1e-9


@dataclass(frozen=True)
class SufficientStats:
    """``(n, xbar1, xbar2, s1, s2, r)`` with s_i the root *average* sum of squares.

    Means and scales are optional: the posterior of rho needs only ``n`` and
    ``r``; the marginal likelihood and the likelihood oracle need the rest.
    """

    n: int
    r: float
    xbar1: Optional[float] = None
    xbar2: Optional[float] = None
    s1: Optional[float] = None
    s2: Optional[float] = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"need an integer sample size n >= 2, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if not -1.0 < self.r < 1.0:
            raise DomainError(f"need |r| < 1, got {self.r}")
        for name in ("s1", "s2"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise DomainError(f"{name} must be positive, got {v}")

    @classmethod
    def summary(cls, n, r):
        """Stats from (n, r) alone, clamping |r| to just below 1."""
        return cls(n=n, r=clamp_r(r))

    @property
    def has_scales(self):
        return self.s1 is not None and self.s2 is not None

    @property
    def has_means(self):
        return self.xbar1 is not None and self.xbar2 is not None

    def as_dict(self):
        return {"n": self.n, "xbar1": self.xbar1, "xbar2": self.xbar2,
                "s1": self.s1, "s2": self.s2, "r": self.r}


def clamp_r(r):
    r = float(r)
    if not -1.0 <= r <= 1.0 or math.isnan(r):
        raise DomainError(f"correlation must lie in [-1, 1], got {r}")
    if abs(r) > R_CLAMP:
        warnings.warn(f"|r| = {abs(r)!r} clamped to {R_CLAMP!r}", RuntimeWarning, stacklevel=3)
        return math.copysign(R_CLAMP, r)
    return r


def ingest(pairs):
    """Summarise paired observations into :class:`SufficientStats`.

    Uses the 1/n convention for the scales.  Perfectly collinear data give
    ``|r| = 1`` which is clamped (with a warning) so the posterior exists.
    """
    data = np.asarray(pairs, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise DegenerateData("expected a sequence of (x1, x2) pairs")
    n = data.shape[0]
    if n < 2:
        raise DegenerateData(f"need at least 2 pairs, got {n}")
    if not np.isfinite(data).all():
        raise DegenerateData("data contain non-finite values")
    means = data.mean(axis=0)
    dev = data - means
    ss = (dev ** 2).mean(axis=0)
    if np.any(ss == 0):
        col = int(np.flatnonzero(ss == 0)[0]) + 1
        raise DegenerateData(f"column {col} is constant")
    s = np.sqrt(ss)
    r = float((dev[:, 0] * dev[:, 1]).mean() / (s[0] * s[1]))
    r = clamp_r(max(-1.0, min(1.0, r)))
    return SufficientStats(n=n, r=r, xbar1=float(means[0]), xbar2=float(means[1]),
                           s1=float(s[0]), s2=float(s[1]))


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_csv(path):
    """Read two numeric columns; a non-numeric first row is taken as a header."""
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            cells = [cell.strip() for cell in row]
            if len(cells) != 2:
                raise DomainError(f"{path}: row {lineno} has {len(cells)} fields, expected 2")
            if not all(_is_number(c) for c in cells):
                if lineno == 1 and not rows:
                    continue
                raise DomainError(f"{path}: row {lineno} has a non-numeric field: {row!r}")
            rows.append((float(cells[0]), float(cells[1])))
    return rows


# ---------------------------------------------------------------------------
# hyperparameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Hyperparameters:
    """Exponents ``(alpha, beta, gamma, delta)`` of the prior class.

    ``alpha_limit=True`` marks the improper alpha -> 0+ member; ``alpha`` is
    then stored as 0.0 and only enters through expressions continuous there.
    """

    alpha: float
    beta: float = 0.0
    gamma: float = 0.0
    delta: float = 0.0
    alpha_limit: bool = False

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "delta"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if self.alpha_limit:
            if self.alpha != 0.0:
                raise DomainError("alpha must be 0 when the alpha -> 0 limit flag is set")
        elif not self.alpha > 0:
            raise DomainError(
                f"alpha must be positive (use the alpha -> 0 limit flag), got {self.alpha}")
        if self.beta < 0:
            raise DomainError(f"beta must be non-negative, got {self.beta}")

    @classmethod
    def limit(cls, beta=0.0, gamma=0.0, delta=0.0):
        return cls(0.0, beta, gamma, delta, alpha_limit=True)

    def theorem_valid(self, n):
        return n > self.gamma + 1 and n > self.delta + 1

    def posterior_valid(self, n):
        return self.theorem_valid(n) and n > self.gamma + self.delta - 2 * self.alpha + 1

    def check(self, n):
        """Raise :class:`DomainError` naming the first violated bound."""
        if not n > self.gamma + 1:
            raise DomainError(f"need n > gamma + 1 (n={n}, gamma={self.gamma})")
        if not n > self.delta + 1:
            raise DomainError(f"need n > delta + 1 (n={n}, delta={self.delta})")
        if not n > self.gamma + self.delta - 2 * self.alpha + 1:
            raise DomainError(
                f"need n > gamma + delta - 2 alpha + 1 (n={n}, bound="
                f"{self.gamma + self.delta - 2 * self.alpha + 1})")

    def as_dict(self):
        return {"alpha": None if self.alpha_limit else self.alpha,
                "alpha_limit": self.alpha_limit,
                "beta": self.beta, "gamma": self.gamma, "delta": self.delta}


@dataclass(frozen=True)
class PriorPreset:
    name: str
    resolved: Hyperparameters


def generalized_wishart(a, b):
    """The generalized-Wishart subclass: alpha = b/2 - 1, gamma = a - 2, delta = b - 1."""
    alpha = b / 2.0 - 1.0
    if alpha == 0.0:
        return Hyperparameters.limit(0.0, a - 2.0, b - 1.0)
    return Hyperparameters(alpha, 0.0, a - 2.0, b - 1.0)


PRESETS = {
    "jeffreys": Hyperparameters(1.0, 0.0, 0.0, 0.0),
    "lindley": Hyperparameters.limit(0.0, 0.0, 0.0),
    "right-haar": Hyperparameters.limit(0.0, -1.0, 1.0),
    "one-at-a-time": Hyperparameters.limit(1.0, 0.0, 0.0),
}


def _floats(text, count, label):
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != count:
        raise DomainError(f"{label} needs {count} comma-separated values, got {text!r}")
    try:
        return [float(p) if p.lower() not in ("limit", "0+") else 0.0 for p in parts], parts
    except ValueError as exc:
        raise DomainError(f"bad number in {label}: {text!r}") from exc


def resolve_preset(spec):
    """Parse a prior name as accepted by the command line.

    ``jeffreys``, ``lindley``, ``right-haar``, ``one-at-a-time``, ``wishart:a,b``
    or ``custom:alpha,beta,gamma,delta`` (alpha ``0`` or ``limit`` selects the
    alpha -> 0 limit).
    """
    key = spec.strip().lower()
    if key in PRESETS:
        return PriorPreset(key, PRESETS[key])
    if key.startswith("wishart:"):
        (a, b), _ = _floats(key[len("wishart:"):], 2, "wishart")
        return PriorPreset(key, generalized_wishart(a, b))
    if key.startswith("custom:"):
        (alpha, beta, gamma, delta), raw = _floats(key[len("custom:"):], 4, "custom")
        if alpha == 0.0:
            return PriorPreset(key, Hyperparameters.limit(beta, gamma, delta))
        return PriorPreset(key, Hyperparameters(alpha, beta, gamma, delta))
    raise DomainError(f"unknown prior {spec!r}")


# ---------------------------------------------------------------------------
# normalised prior on rho
# ---------------------------------------------------------------------------

def log_prior_norm_constant(eta, ctrl=DEFAULT_CONTROL):
    if eta.alpha_limit:
        raise DomainError("the alpha -> 0 prior on rho is improper and has no normaliser")
    log_f, _ = log_hyp2f1(-eta.beta / 2.0, 0.5, eta.alpha + 0.5, -1.0, ctrl)
    return log_beta(0.5, eta.alpha) + log_f


def prior_norm_constant(eta, ctrl=DEFAULT_CONTROL):
    """Integral over (-1, 1) of (1 - rho^2)^(alpha-1) (1 + rho^2)^(beta/2)."""
    return math.exp(log_prior_norm_constant(eta, ctrl))


def log_prior_kernel(rho, eta):
    rho = np.asarray(rho, dtype=float)
    rho2 = rho * rho
    out = (eta.alpha - 1.0) * np.log1p(-rho2)
    if eta.beta:
        out = out + 0.5 * eta.beta * np.log1p(rho2)
    return out


def prior_density(rho, eta, ctrl=DEFAULT_CONTROL):
    """Normalised prior density of rho; accepts scalars or arrays."""
    rho_arr = np.asarray(rho, dtype=float)
    if np.any(np.abs(rho_arr) >= 1):
        raise DomainError("prior density needs |rho| < 1")
    out = np.exp(log_prior_kernel(rho_arr, eta) - log_prior_norm_constant(eta, ctrl))
    return float(out) if out.ndim == 0 else out
