"""Command-line interface: ``corrpost analyze | sample | verify``.

Exit codes: 0 success, 1 failed verification, 2 invalid input,
3 numerical non-convergence.
"""

import argparse
from dataclasses import dataclass
import json
import math
import secrets
import sys
import warnings
from typing import Optional

import numpy as np

from . import __version__, _accel, oracle, posterior
from .errors import DomainError, NonConvergence, ToleranceNotMet
from .model import SufficientStats, ingest, read_csv, resolve_preset
from .sampler import ChainConfig, run_chain

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3
GRID_MARGIN = 1e-9


@dataclass(frozen=True)
class AnalysisRequest:
    stats: SufficientStats
    prior: str
    grid_points: int = 2001
    interval_mass: float = 0.95
    seed: Optional[int] = None


# ---------------------------------------------------------------------------
# JSON with 17 significant digits
# ---------------------------------------------------------------------------

def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return format(x, ".17g") if math.isfinite(x) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent=2):
    """JSON text with every float written to 17 significant digits."""
    return _encode(obj, indent, 0)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def density_grid(model, points):
    if points < 3 or points % 2 == 0:
        raise DomainError(f"grid size must be an odd number >= 3, got {points}")
    rho = np.linspace(-1.0 + GRID_MARGIN, 1.0 - GRID_MARGIN, points)
    rho[points // 2] = 0.0
    return rho, np.asarray(model.density(rho))


def cmd_analyze(req: AnalysisRequest, with_grid=True):
    """Build the analysis report as a plain dict."""
    preset = resolve_preset(req.prior)
    eta = preset.resolved
    model = posterior.PosteriorModel(req.stats, eta)
    moments = [posterior.moment(model, k) for k in range(1, 5)]
    mean = moments[0].value
    variance = moments[1].value - mean * mean
    lower, upper = posterior.credible_interval(model, req.interval_mass)
    post = {
        "mean": mean,
        "variance": variance,
        "moments": [m.value for m in moments],
        "interval": {"lower": lower, "upper": upper, "mass": req.interval_mass},
        "norm_constant": model.norm_constant,
        "log_norm_constant": model.log_norm_constant,
    }
    if req.stats.has_scales:
        post["log_marginal_likelihood"] = posterior.log_marginal_likelihood_rho0(
            req.stats, eta.gamma, eta.delta)
    report = {
        "stats": req.stats.as_dict(),
        "prior": {"name": preset.name, **eta.as_dict()},
        "posterior": post,
        "diagnostics": {
            "series_terms": [m.terms_used for m in moments],
            "converged": all(m.converged for m in moments),
            "cdf_mass": model.cdf_total,
            "backend": _accel.BACKEND,
            "version": __version__,
        },
    }
    if with_grid:
        rho, dens = density_grid(model, req.grid_points)
        report["density_grid"] = {"rho": rho.tolist(), "density": dens.tolist()}
    return report, model


def _stats_from_args(args):
    has_summary = args.n is not None or args.r is not None
    if has_summary == (args.csv is not None):
        raise DomainError("give exactly one input: --csv PATH or --n N --r R")
    if args.csv is not None:
        if args.s1 is not None or args.s2 is not None:
            raise DomainError("--s1/--s2 only apply to --n/--r input")
        return ingest(read_csv(args.csv))
    if args.n is None or args.r is None:
        raise DomainError("summary input needs both --n and --r")
    if (args.s1 is None) != (args.s2 is None):
        raise DomainError("give both --s1 and --s2 or neither")
    stats = SufficientStats.summary(args.n, args.r)
    if args.s1 is not None:
        stats = SufficientStats(n=stats.n, r=stats.r, s1=args.s1, s2=args.s2)
    return stats


def _analyze(args, out):
    req = AnalysisRequest(stats=_stats_from_args(args), prior=args.prior,
                          grid_points=args.grid, interval_mass=args.mass)
    if not 0.0 < req.interval_mass < 1.0:
        raise DomainError(f"--mass must lie in (0, 1), got {req.interval_mass}")
    report, model = cmd_analyze(req, with_grid=args.out is None)
    if args.out is not None:
        rho, dens = density_grid(model, req.grid_points)
        with open(args.out, "w") as fh:
            fh.write("rho,density\n")
            for x, d in zip(rho, dens):
                fh.write(f"{x:.17g},{d:.17g}\n")
        report["density_grid_file"] = args.out
    out.write(dumps(report) + "\n")
    return EXIT_OK


def _sample(args, out):
    stats = _stats_from_args(args)
    preset = resolve_preset(args.prior)
    model = posterior.PosteriorModel(stats, preset.resolved)
    seed = args.seed if args.seed is not None else secrets.randbits(63)
    cfg = ChainConfig.for_model(model, n_draws=args.draws, burn_in=args.burn_in,
                                seed=seed, multiplier=args.multiplier)
    result = run_chain(model, cfg)
    summary = {
        "stats": stats.as_dict(),
        "prior": {"name": preset.name, **preset.resolved.as_dict()},
        "chain": {
            "seed": cfg.seed,
            "generator": "PCG64",
            "n_draws": cfg.n_draws,
            "burn_in": cfg.burn_in,
            "proposal_mean": cfg.proposal_mean,
            "proposal_sd": cfg.proposal_sd,
            "acceptance_rate": result.acceptance_rate,
            "mean": result.mean,
            "mean_se": result.batch_means_se(),
        },
    }
    lines = "".join(f"{x:.17g}\n" for x in result.draws)
    if args.summary_only:
        out.write(dumps(summary) + "\n")
    elif args.out is not None:
        with open(args.out, "w") as fh:
            fh.write(lines)
        out.write(dumps(summary) + "\n")
    else:
        out.write(lines)
        sys.stderr.write(dumps(summary) + "\n")
    return EXIT_OK


def cmd_verify(scope, n=5, r=0.6, rtol=1e-6):
    """Run oracle suites; returns the list of :class:`oracle.Check` records."""
    if scope in ("theorem", "all"):
        return oracle.run_checks(scope, n=n, r=r, rtol=rtol)
    return oracle.run_checks(scope)


def _verify(args, out):
    try:
        checks = cmd_verify(args.scope, n=args.n or 5, r=0.6 if args.r is None else args.r,
                            rtol=args.rtol)
    except ToleranceNotMet as exc:
        out.write(f"FAIL quadrature: {exc}\n")
        return EXIT_VERIFY
    by_suite = {}
    for c in checks:
        by_suite.setdefault(c.suite, []).append(c)
    failed = 0
    for suite, items in by_suite.items():
        bad = [c for c in items if not c.passed]
        failed += len(bad)
        worst = max(items, key=lambda c: c.achieved / c.tolerance)
        status = "PASS" if not bad else "FAIL"
        out.write(f"{status} {suite}: {len(items) - len(bad)}/{len(items)} checks, "
                  f"worst {worst.achieved:.3g} (tol {worst.tolerance:g}) at {worst.case}\n")
        for c in (items if args.verbose else bad):
            mark = "ok  " if c.passed else "FAIL"
            out.write(f"  {mark} {c.case}: {c.achieved:.3g} (tol {c.tolerance:g})\n")
    return EXIT_OK if failed == 0 else EXIT_VERIFY


def _positive_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return value


def build_parser():
    parser = argparse.ArgumentParser(
        prog="corrpost", description="Posterior inference for a correlation coefficient.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def data_args(p):
        p.add_argument("--csv", help="two-column CSV of paired observations")
        p.add_argument("--n", type=int, help="sample size (with --r)")
        p.add_argument("--r", type=float, help="sample correlation (with --n)")
        p.add_argument("--s1", type=float, help="root mean square deviation of column 1")
        p.add_argument("--s2", type=float, help="root mean square deviation of column 2")
        p.add_argument("--prior", default="jeffreys",
                       help="jeffreys | lindley | right-haar | one-at-a-time | "
                            "wishart:a,b | custom:alpha,beta,gamma,delta (default: jeffreys)")

    a = sub.add_parser("analyze", help="posterior summary as JSON")
    data_args(a)
    a.add_argument("--grid", type=int, default=2001, help="odd number of density grid points")
    a.add_argument("--mass", type=float, default=0.95, help="equal-tail interval mass")
    a.add_argument("--out", help="write the density grid as CSV here instead of into the JSON")
    a.set_defaults(handler=_analyze)

    s = sub.add_parser("sample", help="independence Metropolis draws of rho")
    data_args(s)
    s.add_argument("--draws", type=_positive_int, default=10_000)
    s.add_argument("--burn-in", type=_positive_int, default=1_000)
    s.add_argument("--seed", type=_positive_int, help="random seed (drawn and echoed if absent)")
    s.add_argument("--multiplier", type=float, default=1.0,
                   help="proposal sd as a multiple of 1/sqrt(n)")
    s.add_argument("--summary-only", action="store_true", help="print only the JSON summary")
    s.add_argument("--out", help="write draws here; the JSON summary goes to stdout")
    s.set_defaults(handler=_sample)

    v = sub.add_parser("verify", help="check closed forms against numerical integration")
    v.add_argument("scope", nargs="?", default="all",
                   choices=["lemma", "theorem", "moments", "all"])
    v.add_argument("--n", type=int, help="sample size for the theorem check (default 5)")
    v.add_argument("--r", type=float, help="sample correlation for the theorem check (default 0.6)")
    v.add_argument("--rtol", type=float, default=1e-6, help="4-D quadrature tolerance")
    v.add_argument("--verbose", action="store_true", help="list every check")
    v.set_defaults(handler=_verify)
    return parser


def main(argv=None, out=None):
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            warnings.showwarning = _show_warning
            return args.handler(args, out)
    except NonConvergence as exc:
        sys.stderr.write(f"corrpost: numerical non-convergence: {exc}\n")
        return EXIT_NUMERIC
    except (DomainError, ValueError) as exc:
        sys.stderr.write(f"corrpost: {exc}\n")
        return EXIT_INPUT
    except OSError as exc:
        sys.stderr.write(f"corrpost: {exc}\n")
        return EXIT_INPUT


def _show_warning(message, category, filename, lineno, file=None, line=None):
    sys.stderr.write(f"corrpost: warning: {message}\n")


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
