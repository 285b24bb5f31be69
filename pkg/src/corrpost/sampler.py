"""Independence-chain Metropolis sampler for rho.

Proposals are z* ~ Normal(atanh(r), (m / sqrt(n))^2) with m the proposal
multiplier (1 by default), mapped to rho* = tanh(z*).  The acceptance ratio
uses the proposal density on the rho scale, i.e. the normal density in z times
the Jacobian 1 / (1 - rho^2); equivalently, the importance weight of a state is

    log w(z) = log pi(tanh z | n, r) + log(1 - tanh(z)^2) - log phi(z),

which is what the kernel compares.  Random numbers come from numpy's PCG64
generator seeded with ``ChainConfig.seed``: all proposals are drawn first, then
all uniforms, so a seed fixes the chain bit for bit.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from . import _kernels
from .errors import DomainError

DEFAULT_DRAWS = 10_000
DEFAULT_BURN_IN = 1_000


@dataclass(frozen=True)
class ChainConfig:
    n_draws: int = DEFAULT_DRAWS
    burn_in: int = DEFAULT_BURN_IN
    seed: int = 0
    proposal_mean: float = 0.0
    proposal_sd: float = 1.0

    def __post_init__(self):
        if int(self.n_draws) != self.n_draws or self.n_draws < 1:
            raise DomainError("n_draws must be a positive integer")
        if int(self.burn_in) != self.burn_in or self.burn_in < 0:
            raise DomainError("burn_in must be a non-negative integer")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise DomainError("seed must be an unsigned 64-bit integer")
        if not self.proposal_sd > 0:
            raise DomainError("proposal_sd must be positive")

    @classmethod
    def for_model(cls, model, n_draws=DEFAULT_DRAWS, burn_in=DEFAULT_BURN_IN, seed=0,
                  multiplier=1.0):
        """Proposal centred at atanh(r) with sd multiplier / sqrt(n)."""
        return cls(n_draws=n_draws, burn_in=burn_in, seed=seed,
                   proposal_mean=math.atanh(model.r),
                   proposal_sd=multiplier / math.sqrt(model.n))


@dataclass(frozen=True)
class ChainResult:
    draws: np.ndarray = field(repr=False)
    acceptance_rate: float
    config: ChainConfig
    accepted: int

    @property
    def mean(self):
        return float(np.mean(self.draws))

    def batch_means_se(self, power=1, batches=50):
        return batch_means_se(self.draws ** power, batches)


def batch_means_se(x, batches=50):
    """Standard error of the mean of a correlated series by non-overlapping batches."""
    x = np.asarray(x, dtype=float)
    size = x.size // batches
    if size < 2:
        raise DomainError("series too short for batch means")
    means = x[: size * batches].reshape(batches, size).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(batches))


def run_chain(model, cfg: ChainConfig, kernels=None):
    """Run one chain; the starting state is rho = r (the proposal mode)."""
    k = kernels or _kernels.active
    total = cfg.burn_in + cfg.n_draws
    rng = np.random.Generator(np.random.PCG64(int(cfg.seed)))
    z = rng.normal(cfg.proposal_mean, cfg.proposal_sd, size=total)
    log_u = np.log(rng.random(total))

    def log_weight(x):
        log_q = -0.5 * ((x - cfg.proposal_mean) / cfg.proposal_sd) ** 2
        return np.asarray(model.log_density_z(x), dtype=float) - log_q

    log_w = log_weight(z)
    log_w0 = float(log_weight(np.array([cfg.proposal_mean]))[0])
    held, accepted = k.imh(log_w, log_u, log_w0)
    states = np.where(held >= 0, z[np.maximum(held, 0)], cfg.proposal_mean)
    draws = np.tanh(states[cfg.burn_in:])
    n_acc = int(np.count_nonzero(accepted[cfg.burn_in:]))
    return ChainResult(draws=draws, acceptance_rate=n_acc / cfg.n_draws, config=cfg,
                       accepted=n_acc)
