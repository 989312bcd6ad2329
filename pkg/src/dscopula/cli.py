"""Command line interface.

Exit codes: 0 success, 1 usage error, 2 runtime failure (including failed
validation checks).  All file outputs accept ``-`` for stdout.
"""

import argparse
import contextlib
import csv
import math
import sys

import numpy as np

from .estimators import (
    bayes_estimate,
    deheuvels_estimate,
    kernel_estimate,
    mle_estimate,
    pseudo_observations,
)
from .exceptions import CSVFormatError
from .experiments import (
    DEFAULT_RHO_GRID,
    STUDY_ESTIMATORS,
    ExperimentConfig,
    ball_probability,
    radius_density,
    run_mise_study,
)
from .priors import PRIOR_KINDS, PriorSpec
from .refmodels import FAMILIES, MarginPair, ReferenceCopula
from .sampler import ChainConfig, run_chain
from .validation import run_checks


def read_sample_csv(path):
    """Read a two-column numeric CSV; an optional header line is skipped.

    Raises CSVFormatError naming the offending line for anything else.
    """
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, record in enumerate(csv.reader(fh), start=1):
            cells = [cell.strip() for cell in record]
            if not cells or cells == [""]:
                continue
            if len(cells) != 2:
                raise CSVFormatError(lineno, f"expected 2 columns, got {len(cells)}")
            try:
                x, y = float(cells[0]), float(cells[1])
            except ValueError:
                if lineno == 1 and not rows:
                    continue
                raise CSVFormatError(
                    lineno, f"non-numeric value in {','.join(cells)!r}"
                ) from None
            if not (math.isfinite(x) and math.isfinite(y)):
                raise CSVFormatError(lineno, "non-finite value")
            rows.append((x, y))
    if not rows:
        raise CSVFormatError(1, "no data rows")
    return np.array(rows)


@contextlib.contextmanager
def _output(path):
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _margins_arg(text):
    """``unknown`` (rank transform) or a ``kind,kind`` pair of known margins."""
    if text == "unknown":
        return None
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(
            f"expected 'unknown' or two comma-separated margin kinds, got {text!r}"
        )
    try:
        return MarginPair(parts[0], parts[1])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _margin_pair_arg(text):
    pair = _margins_arg(text)
    if pair is None:
        raise argparse.ArgumentTypeError("expected two comma-separated margin kinds")
    return pair


def _rhos_arg(text):
    try:
        values = tuple(float(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad rho list {text!r}") from None
    if not values or any(not 0.0 <= r <= 1.0 for r in values):
        raise argparse.ArgumentTypeError("rho values must lie in [0, 1]")
    return values


def _estimators_arg(text):
    names = tuple(text.split(","))
    for name in names:
        if name not in STUDY_ESTIMATORS:
            raise argparse.ArgumentTypeError(
                f"unknown estimator {name!r}; choose from {', '.join(STUDY_ESTIMATORS)}"
            )
    return names


def _add_chain_flags(parser, T=10_000, burn_in=1_000, thin=10):
    parser.add_argument("--length", type=int, default=T, metavar="T",
                        help=f"total sweeps per chain (default {T})")
    parser.add_argument("--burn-in", type=int, default=burn_in,
                        help=f"discarded initial sweeps (default {burn_in})")
    parser.add_argument("--thin", type=int, default=thin,
                        help=f"state retention stride, 0 disables states (default {thin})")
    parser.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")


def _cmd_estimate(args):
    data = read_sample_csv(args.input)
    if args.estimator in ("bayes", "mle"):
        ps = pseudo_observations(data, margins=args.margins)
    if args.estimator == "bayes":
        prior = PriorSpec(args.prior, args.m)
        config = ChainConfig(
            m=args.m,
            prior=prior,
            T=args.length,
            burn_in=args.burn_in,
            seed=args.seed,
            basis=args.basis,
            thin=args.thin,
        )
        est = bayes_estimate(ps, prior, config)
    elif args.estimator == "mle":
        est = mle_estimate(ps, args.m)
    elif args.estimator == "deheuvels":
        est = deheuvels_estimate(data)
    else:
        est = kernel_estimate(data)
    with _output(args.output) as fh:
        est.grid(args.grid).write_csv(fh)
    return 0


def _write_states_csv(states, fileobj):
    m = states.shape[1]
    header = ",".join(f"p_{i + 1}_{j + 1}" for i in range(m) for j in range(m))
    fileobj.write(header + "\n")
    for state in states:
        fileobj.write(",".join(f"{x:.17g}" for x in state.ravel()) + "\n")


def _cmd_prior_sample(args):
    config = ChainConfig(
        m=args.m,
        prior=PriorSpec(args.prior, args.m),
        T=args.length,
        burn_in=args.burn_in,
        seed=args.seed,
        mode="prior_only",
        hastings_correction=args.hastings,
        thin=args.thin,
    )
    result = run_chain(None, config)
    with _output(args.output) as fh:
        result.write_trace_csv(fh)
    if args.states is not None:
        if result.states is None:
            raise ValueError("--states requires a positive --thin")
        with _output(args.states) as fh:
            _write_states_csv(result.states, fh)
    return 0


def _cmd_ball_prob(args):
    prior = PriorSpec(args.prior, args.m)
    config = ChainConfig(
        m=args.m,
        prior=prior,
        T=args.length,
        burn_in=args.burn_in,
        seed=args.seed,
        mode="prior_only",
        thin=0,
    )
    result = ball_probability(prior, args.m, args.chains, config)
    with _output(args.envelope) as fh:
        result.write_envelope_csv(fh)
    print(f"{result.estimate:.17g}")
    return 0


def _cmd_radius_density(args):
    prior = PriorSpec(args.prior, args.m)
    config = ChainConfig(
        m=args.m,
        prior=prior,
        T=args.length,
        burn_in=args.burn_in,
        seed=args.seed,
        mode="prior_only",
        thin=0,
    )
    result = radius_density(prior, args.m, config, grid_points=args.grid_points)
    with _output(args.samples) as fh:
        result.write_samples_csv(fh)
    with _output(args.density) as fh:
        result.write_density_csv(fh)
    print(f"{result.q95:.17g}")
    return 0


def _cmd_mise_study(args):
    rhos = args.rhos if args.rhos is not None else DEFAULT_RHO_GRID
    needs_chain = any(name.startswith("bayes") for name in args.estimators)
    chain = None
    if needs_chain:
        chain = ChainConfig(
            m=args.m,
            prior=PriorSpec("jeffreys", args.m),
            T=args.length,
            burn_in=args.burn_in,
            thin=args.thin,
        )
    config = ExperimentConfig(
        model=ReferenceCopula(args.family, rhos[0]),
        margins=args.margins,
        margin_mode=args.margin_mode,
        n=args.n,
        replications=args.replications,
        m=args.m,
        estimators=args.estimators,
        chain=chain,
        master_seed=args.seed,
        rhos=rhos,
    )
    report = run_mise_study(config, workers=args.workers)
    with _output(args.output) as fh:
        report.write_csv(fh)
    for failure in report.failures:
        print(
            f"failed: rho={failure.rho:g} replication={failure.replication} "
            f"{failure.estimator}: {failure.message}",
            file=sys.stderr,
        )
    return 0


def _cmd_validate(args):
    results = run_checks(full=args.full)
    return 0 if all(result.passed for result in results) else 2


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dscopula",
        description="Bayesian nonparametric bivariate copula estimation "
        "with doubly stochastic matrices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate a copula from a two-column sample CSV")
    p.add_argument("--input", required=True, help="sample CSV (columns x,y, optional header)")
    p.add_argument("--output", default="-", help="grid CSV destination (default stdout)")
    p.add_argument("--estimator", choices=("bayes", "mle", "deheuvels", "kernel"),
                   default="bayes")
    p.add_argument("--m", type=int, default=6, help="model order (default 6)")
    p.add_argument("--prior", choices=PRIOR_KINDS, default="jeffreys")
    p.add_argument("--margins", type=_margins_arg, default=None, metavar="SPEC",
                   help="'unknown' (rank transform, default) or e.g. 'student_t7,chi_square4'")
    p.add_argument("--basis", choices=("indicator", "bernstein"), default="indicator")
    p.add_argument("--grid", type=int, default=200, metavar="G",
                   help="output grid resolution, writes (G+1)^2 rows (default 200)")
    _add_chain_flags(p)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("prior-sample", help="run a prior-only chain and write its trace")
    p.add_argument("--m", type=int, default=6)
    p.add_argument("--prior", choices=PRIOR_KINDS, default="jeffreys")
    p.add_argument("--output", default="-", help="trace CSV destination (default stdout)")
    p.add_argument("--states", default=None, metavar="PATH",
                   help="also write retained states as flattened-entries CSV")
    p.add_argument("--hastings", action="store_true",
                   help="apply the interval-length proposal correction")
    _add_chain_flags(p)
    p.set_defaults(func=_cmd_prior_sample)

    p = sub.add_parser("ball-prob",
                       help="prior mass of the inscribed ball, with running-mean envelope")
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--prior", choices=PRIOR_KINDS, default="uniform")
    p.add_argument("--chains", type=int, default=100)
    p.add_argument("--envelope", default="ball_envelope.csv",
                   help="envelope CSV destination (default ball_envelope.csv)")
    _add_chain_flags(p, thin=0)
    p.set_defaults(func=_cmd_ball_prob)

    p = sub.add_parser("radius-density",
                       help="prior radius samples and a smoothed density on [0, q95]")
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--prior", choices=PRIOR_KINDS, default="jeffreys")
    p.add_argument("--samples", default="radius_samples.csv")
    p.add_argument("--density", default="radius_density.csv")
    p.add_argument("--grid-points", type=int, default=256)
    _add_chain_flags(p, thin=0)
    p.set_defaults(func=_cmd_radius_density)

    p = sub.add_parser("mise-study", help="Monte Carlo MISE comparison of the estimators")
    p.add_argument("--family", choices=FAMILIES, default="gaussian")
    p.add_argument("--rhos", type=_rhos_arg, default=None, metavar="LIST",
                   help="comma-separated rho grid (default "
                   + ",".join(f"{r:g}" for r in DEFAULT_RHO_GRID) + ")")
    p.add_argument("--n", type=int, default=30, help="sample size per replication")
    p.add_argument("--replications", type=int, default=100)
    p.add_argument("--m", type=int, default=6)
    p.add_argument("--margins", type=_margin_pair_arg, default=MarginPair(),
                   metavar="PAIR", help="margin kinds, e.g. 'student_t7,chi_square4'"
                   " (default 'uniform,uniform')")
    p.add_argument("--margin-mode", choices=("known", "unknown"), default="unknown")
    p.add_argument("--estimators", type=_estimators_arg,
                   default=("bayes_jeffreys", "bayes_uniform", "mle", "deheuvels", "kernel"),
                   metavar="LIST", help="comma-separated subset of: "
                   + ", ".join(STUDY_ESTIMATORS))
    p.add_argument("--output", default="-", help="MISE CSV destination (default stdout)")
    p.add_argument("--workers", type=int, default=None,
                   help="parallel replication workers (default: DSCOPULA_WORKERS or 1)")
    _add_chain_flags(p, thin=0)
    p.set_defaults(func=_cmd_mise_study)

    p = sub.add_parser("validate", help="run the acceptance checks")
    p.add_argument("--full", action="store_true",
                   help="include the long Monte Carlo checks")
    p.set_defaults(func=_cmd_validate)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
