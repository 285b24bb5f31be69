"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py            # kernel-level timings
    python benchmarks/bench_kernels.py --e2e      # plus whole runs under the env flag

The end-to-end mode runs the same workload in two subprocesses, one with
CORRPOST_DISABLE_NUMBA=1, which is how users select the fallback.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from corrpost import _kernels
from corrpost.oracle import _v_rule

E2E_SNIPPET = """
import time
from corrpost import _accel, oracle
from corrpost.model import Hyperparameters, SufficientStats
from corrpost.posterior import PosteriorModel
from corrpost.sampler import ChainConfig, run_chain
y = SufficientStats(n=5, r=0.6, xbar1=0.0, xbar2=0.0, s1=1.0, s2=1.0)
t = time.perf_counter()
oracle.integrate_theorem_many(y, 0.0, 0.0, [-0.4, 0.4], rtol=1e-5)
m = PosteriorModel(SufficientStats.summary(10, 0.6), Hyperparameters(1.0))
for s in range(5):
    run_chain(m, ChainConfig.for_model(m, 200000, 1000, seed=s))
print(_accel.BACKEND, time.perf_counter() - t)
"""


def workloads():
    rng = np.random.default_rng(0)
    z = np.linspace(0.0, 0.95, 200)
    a, b = np.array([24.5, 24.5]), np.array([0.5])
    log_w = rng.normal(size=200_000)
    log_u = np.log(rng.random(200_000))
    v, vw = _v_rule(4)
    rhos = np.array([-0.4, 0.0, 0.4])
    u = np.linspace(-3, 3, 15)
    grid_args = (5, 0.0, 0.0, 1.0, 1.0, 0.6, 0.0, 0.0, rhos, u, u, v, vw, np.zeros(3))
    return {
        "series (200 args, 2F1-type)": lambda k: k.series(a, b, z, 1e-15, 100_000, 3),
        "imh (200k steps)": lambda k: k.imh(log_w, log_u, 0.0),
        "theorem grid (3 x 15 x 15 x 60^2)": lambda k: k.theorem_grid(*grid_args),
    }


def bench_kernels(repeat):
    backends = [("numpy", _kernels.select("numpy"))]
    if _kernels.numba_kernels is not None:
        backends.insert(0, ("numba", _kernels.select("numba")))
    print(f"{'kernel':38s}" + "".join(f"{name:>12s}" for name, _ in backends) + "     speedup")
    for label, work in workloads().items():
        times = []
        for _, k in backends:
            work(k)  # compile / warm up
            times.append(min(timeit.repeat(lambda: work(k), number=1, repeat=repeat)))
        cells = "".join(f"{t * 1e3:10.2f}ms" for t in times)
        speedup = f"{times[-1] / times[0]:8.1f}x" if len(times) == 2 else ""
        print(f"{label:38s}{cells}{speedup}")


def bench_e2e():
    for disable in ("0", "1"):
        env = dict(os.environ, CORRPOST_DISABLE_NUMBA=disable)
        out = subprocess.run([sys.executable, "-c", E2E_SNIPPET], env=env, check=True,
                             capture_output=True, text=True).stdout.split()
        print(f"end to end with CORRPOST_DISABLE_NUMBA={disable}: backend {out[0]}, "
              f"{float(out[1]):.2f}s")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--e2e", action="store_true")
    args = parser.parse_args()
    bench_kernels(args.repeat)
    if args.e2e:
        bench_e2e()


if __name__ == "__main__":
    main()
