"""Batch experiments: prior geometry, Jeffreys normalization, MISE study.

Three groups of routines:

* prior-validation runs: the probability that a prior draw lands in the
  largest ball inscribed in the polytope, and the prior density of the
  distance-from-center radius;
* normalization evidence for the Jeffreys prior: tanh-sinh integrals of the
  square-root Fisher determinant over low-dimensional sections of the
  polytope, where the integrand has inverse-square-root boundary
  singularities;
* the simulation study comparing estimators by mean integrated squared error
  against a known reference copula, deterministic given a master seed and
  safe to parallelize per replication.
"""

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import gaussian_kde

from .estimators import (
    bayes_estimate,
    deheuvels_estimate,
    kernel_estimate,
    mle_estimate,
    pseudo_observations,
)
from .numerics import QuadratureSpec, l2_sq_gap, tanh_sinh, tanh_sinh_nodes
from .polytope import inscribed_ball_radius
from .priors import PriorSpec
from .refmodels import MarginPair, ReferenceCopula
from .sampler import ChainConfig, run_chain

WORKERS_ENV_VAR = "DSCOPULA_WORKERS"

STUDY_ESTIMATORS = (
    "bayes_jeffreys",
    "bayes_uniform",
    "mle",
    "deheuvels",
    "kernel",
    # evaluates the reference copula against itself; a zero-MISE debug oracle
    "truth",
)

DEFAULT_RHO_GRID = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95)


def derive_seed(master, *key):
    """Collision-free 64-bit child seed for the given integer key path."""
    ss = np.random.SeedSequence(master, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


def batch_means_stderr(x, batches=20):
    """Monte Carlo standard error of the mean of a correlated sequence.

    Splits x into ``batches`` consecutive batches (discarding the remainder)
    and returns the standard deviation of the batch means over sqrt(batches).
    """
    x = np.asarray(x, dtype=float)
    size = x.size // batches
    if size < 1:
        raise ValueError(f"need at least {batches} points, got {x.size}")
    means = x[: batches * size].reshape(batches, size).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(batches))


# -- prior validation ---------------------------------------------------------


@dataclass(frozen=True)
class BallProbability:
    """Monte Carlo estimate of prior mass inside the inscribed ball."""

    estimate: float
    threshold: float
    per_chain: np.ndarray
    envelope: np.ndarray
    chains: int
    retained: int
    config: ChainConfig

    def write_envelope_csv(self, fileobj):
        """Rows ``iteration,min,mean,max`` of per-chain running means (1-based)."""
        fileobj.write("iteration,min,mean,max\n")
        for t in range(self.envelope.shape[0]):
            lo, mean, hi = self.envelope[t]
            fileobj.write(f"{t + 1},{lo:.17g},{mean:.17g},{hi:.17g}\n")


def ball_probability(prior, m, chains, config=None):
    """Prior probability that radius(P) <= 1/(m-1), by parallel prior chains.

    Runs ``chains`` independent prior-only chains (seeds derived from
    ``config.seed`` by chain index) and averages the post-burn-in indicator
    of the inscribed ball.  The envelope tracks the running mean of the
    indicator from sweep 1 of every chain, burn-in included, so convergence
    is visible; the estimate itself discards burn-in.
    """
    if config is None:
        config = ChainConfig(m=m, prior=prior, mode="prior_only", thin=0)
    if config.m != m or config.prior != prior:
        raise ValueError("config order/prior disagree with the arguments")
    if config.mode != "prior_only":
        raise ValueError("ball_probability requires a prior-only config")
    if chains < 1:
        raise ValueError("chains must be at least 1")
    threshold = inscribed_ball_radius(m)
    T = config.T
    env_min = np.full(T, np.inf)
    env_max = np.full(T, -np.inf)
    env_sum = np.zeros(T)
    per_chain = np.empty(chains)
    steps = np.arange(1, T + 1, dtype=float)
    for c in range(chains):
        chain_config = replace(config, seed=derive_seed(config.seed, c), thin=0)
        result = run_chain(None, chain_config)
        inside = result.radius_trace <= threshold
        running = np.cumsum(inside) / steps
        np.minimum(env_min, running, out=env_min)
        np.maximum(env_max, running, out=env_max)
        env_sum += running
        per_chain[c] = inside[config.burn_in :].mean()
    envelope = np.column_stack([env_min, env_sum / chains, env_max])
    return BallProbability(
        estimate=float(per_chain.mean()),
        threshold=threshold,
        per_chain=per_chain,
        envelope=envelope,
        chains=chains,
        retained=chains * (T - config.burn_in),
        config=config,
    )


@dataclass(frozen=True)
class RadiusDensity:
    """Prior sample of radius(P) and its smoothed density on [0, q95]."""

    radii: np.ndarray
    q95: float
    mean_radius: float
    grid: np.ndarray
    density: np.ndarray
    config: ChainConfig

    def write_samples_csv(self, fileobj):
        fileobj.write("radius\n")
        for r in self.radii:
            fileobj.write(f"{r:.17g}\n")

    def write_density_csv(self, fileobj):
        fileobj.write("radius,density\n")
        for r, d in zip(self.grid, self.density):
            fileobj.write(f"{r:.17g},{d:.17g}\n")


def radius_density(prior, m, config=None, grid_points=256):
    """Sample radius(P) under the prior and smooth its density.

    One prior-only chain; the post-burn-in radius trace is the sample.  The
    density is a Gaussian KDE evaluated on [0, q95] with the sample's 95th
    percentile q95, matching the reporting window of the prior-geometry
    figures.
    """
    if config is None:
        config = ChainConfig(m=m, prior=prior, mode="prior_only", thin=0)
    if config.m != m or config.prior != prior:
        raise ValueError("config order/prior disagree with the arguments")
    if config.mode != "prior_only":
        raise ValueError("radius_density requires a prior-only config")
    result = run_chain(None, config)
    radii = result.radius_trace[config.burn_in :]
    q95 = float(np.quantile(radii, 0.95))
    grid = np.linspace(0.0, q95, grid_points)
    density = gaussian_kde(radii)(grid)
    return RadiusDensity(
        radii=radii,
        q95=q95,
        mean_radius=float(radii.mean()),
        grid=grid,
        density=density,
        config=config,
    )


# -- Jeffreys normalization evidence ------------------------------------------


def fisher_sqrt_integral_1d(points=1000, cutoff=4.0):
    """Integral of sqrt(I(P)) over the order-2 polytope (a segment).

    For m = 2 the Fisher determinant at P = [[p, 1-p], [1-p, p]] reduces to
    I = 4 / (p (1-p)), so the integrand is 2 (p (1-p))^(-1/2), written in the
    cancellation-free (x, 1-x) node form.  Exact value 2*pi.
    """
    return tanh_sinh(lambda x, xc: 2.0 / np.sqrt(x * xc), points, cutoff)


def fisher_sqrt_slice_integrand(x, xc, y, yc):
    """sqrt(I(P)) on the order-3 off-diagonal section, in unit-square coordinates.

    The section fixes the diagonal of the free-coordinate chart to zero and
    sweeps the two off-diagonal coordinates over their feasible square
    [-1/sqrt(3), 1/sqrt(3)]^2, mapped here to (x, y) in (0, 1)^2.  On it the
    matrix entries are cancellation-free bilinear forms of (x, xc, y, yc):

        P = (1/3) [[x+y, x+yc, 2 xc], [xc+y, xc+yc, 2 x], [2 yc, 2 y, 1]]

    and sqrt(I) = m^((m-1)^2/2) sqrt(det(I - (P'P)_sub) / prod(P)) =
    9 sqrt(det / prod).  Entries vanish only on the section's edges and
    corners, where the integrand has integrable power singularities.
    """
    p11 = (x + y) / 3.0
    p12 = (x + yc) / 3.0
    p13 = 2.0 * xc / 3.0
    p21 = (xc + y) / 3.0
    p22 = (xc + yc) / 3.0
    p23 = 2.0 * x / 3.0
    p31 = 2.0 * yc / 3.0
    p32 = 2.0 * y / 3.0
    p33 = 1.0 / 3.0
    s11 = p11 * p11 + p21 * p21 + p31 * p31
    s12 = p11 * p12 + p21 * p22 + p31 * p32
    s22 = p12 * p12 + p22 * p22 + p32 * p32
    det = (1.0 - s11) * (1.0 - s22) - s12 * s12
    prod = p11 * p12 * p13 * p21 * p22 * p23 * p31 * p32 * p33
    with np.errstate(divide="ignore", invalid="ignore"):
        return 9.0 * np.sqrt(det / prod)


def fisher_sqrt_integral_2d(points=1000, cutoff=4.0):
    """Integral of sqrt(I(P)) over the order-3 off-diagonal section.

    Iterated tanh-sinh with ``points`` nodes per axis; rows are evaluated
    one at a time so the (points x points) tensor is never materialized.
    The 4/3 factor is the Jacobian of mapping the feasible square to the
    unit square.  Finite: the corner singularities are of order r^(-3/2)
    against the 2-D volume element.
    """
    x, w, xc = tanh_sinh_nodes(points, cutoff)
    total = 0.0
    for i in range(points):
        vals = fisher_sqrt_slice_integrand(x[i], xc[i], x, xc)
        vals = np.where(np.isfinite(vals), vals, 0.0)
        total += w[i] * float(vals @ w)
    return total * (4.0 / 3.0)


# -- MISE study ----------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    """Configuration of one MISE study.

    ``model.rho`` is the default correlation; ``rhos`` sweeps a grid of
    correlations instead when set.  ``margins`` is the data scale; in
    ``known`` margin mode the estimators of the doubly stochastic family see
    the data mapped through those margin CDFs, in ``unknown`` mode they see
    rank pseudo-observations.  ``chain`` is a template whose prior and seed
    are replaced per estimator and replication.  Per-replication seeds are
    spawned from ``master_seed`` keyed by (rho index, replication), so runs
    are deterministic and replications independent.
    """

    model: ReferenceCopula
    margins: MarginPair = MarginPair()
    margin_mode: str = "known"
    n: int = 30
    replications: int = 100
    m: int = 6
    estimators: tuple = ("bayes_jeffreys", "bayes_uniform", "mle", "deheuvels", "kernel")
    chain: ChainConfig | None = None
    quadrature: QuadratureSpec = QuadratureSpec()
    master_seed: int = 0
    rhos: tuple | None = None

    def __post_init__(self):
        if self.margin_mode not in ("known", "unknown"):
            raise ValueError(f"margin_mode must be known or unknown, got {self.margin_mode!r}")
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        unknown = set(self.estimators) - set(STUDY_ESTIMATORS)
        if unknown:
            raise ValueError(f"unknown estimators: {sorted(unknown)}")
        if not self.estimators:
            raise ValueError("estimators must be nonempty")
        if self.chain is not None and self.chain.m != self.m:
            raise ValueError(f"chain order {self.chain.m} != study order {self.m}")
        if self.rhos is not None:
            if len(self.rhos) == 0:
                raise ValueError("rhos must be nonempty when given")
            for r in self.rhos:
                if not -1.0 <= r <= 1.0:
                    raise ValueError(f"correlation {r} outside [-1, 1]")

    def rho_grid(self):
        return tuple(self.rhos) if self.rhos is not None else (self.model.rho,)

    def chain_template(self):
        if self.chain is not None:
            return self.chain
        return ChainConfig(m=self.m, prior=PriorSpec("jeffreys", self.m))


@dataclass(frozen=True)
class MiseRow:
    family: str
    rho: float
    n: int
    estimator: str
    mise: float
    stderr: float
    replications: int


@dataclass(frozen=True)
class MiseFailure:
    rho: float
    replication: int
    estimator: str
    message: str


@dataclass(frozen=True)
class MiseReport:
    """Per (rho, estimator) MISE with Monte Carlo standard errors."""

    rows: tuple
    failures: tuple
    config: ExperimentConfig

    def value(self, estimator, rho=None):
        """The (mise, stderr, replications) triple for an estimator."""
        for row in self.rows:
            if row.estimator == estimator and (rho is None or row.rho == rho):
                return row.mise, row.stderr, row.replications
        raise KeyError(f"no row for estimator {estimator!r}, rho {rho!r}")

    def write_csv(self, fileobj):
        fileobj.write("family,rho,n,estimator,mise,stderr,R\n")
        for row in self.rows:
            fileobj.write(
                f"{row.family},{row.rho:.17g},{row.n},{row.estimator},"
                f"{row.mise:.17g},{row.stderr:.17g},{row.replications}\n"
            )

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            self.write_csv(fh)


def _mise_replication(config, rho_index, rho, rep):
    """All estimators' integrated squared errors for one replication.

    Returns (rho_index, rep, {estimator: float | error string}); errors are
    recorded, never raised, so a long study cannot lose completed work.
    """
    seeds = np.random.SeedSequence(
        config.master_seed, spawn_key=(rho_index, rep)
    ).generate_state(3, np.uint64)
    rng = np.random.Generator(np.random.PCG64(int(seeds[0])))
    model = replace(config.model, rho=rho)
    uv = model.sample(config.n, rng)
    xy = config.margins.transform(uv)
    truth = model.cdf
    template = config.chain_template()
    ps = None
    if any(e in ("bayes_jeffreys", "bayes_uniform", "mle") for e in config.estimators):
        known = config.margins if config.margin_mode == "known" else None
        ps = pseudo_observations(xy, known)
    out = {}
    for name in config.estimators:
        try:
            if name == "truth":
                cdf = truth
            elif name == "bayes_jeffreys":
                prior = PriorSpec("jeffreys", config.m)
                cfg = replace(template, prior=prior, seed=int(seeds[1]))
                cdf = bayes_estimate(ps, prior, cfg).cdf
            elif name == "bayes_uniform":
                prior = PriorSpec("uniform", config.m)
                cfg = replace(template, prior=prior, seed=int(seeds[2]))
                cdf = bayes_estimate(ps, prior, cfg).cdf
            elif name == "mle":
                cdf = mle_estimate(ps, config.m).cdf
            elif name == "deheuvels":
                cdf = deheuvels_estimate(xy).cdf
            else:
                cdf = kernel_estimate(xy).cdf
            out[name] = float(l2_sq_gap(cdf, truth, config.quadrature))
        except Exception as exc:
            out[name] = f"{type(exc).__name__}: {exc}"
    return rho_index, rep, out


def run_mise_study(config, workers=None):
    """Run the full study; deterministic given config, whatever the worker count.

    Replications run independently (in processes when ``workers`` > 1, or
    the DSCOPULA_WORKERS environment variable sets a default); results are
    keyed by (rho index, replication) and reduced in key order, so the
    report and its CSV are byte-identical for any scheduling.
    """
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV_VAR, "1"))
    if workers < 1:
        raise ValueError("workers must be at least 1")
    rhos = config.rho_grid()
    tasks = [
        (ri, rho, rep)
        for ri, rho in enumerate(rhos)
        for rep in range(config.replications)
    ]
    results = {}
    if workers == 1:
        for ri, rho, rep in tasks:
            key_ri, key_rep, out = _mise_replication(config, ri, rho, rep)
            results[key_ri, key_rep] = out
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_mise_replication, config, ri, rho, rep)
                for ri, rho, rep in tasks
            ]
            for fut in futures:
                key_ri, key_rep, out = fut.result()
                results[key_ri, key_rep] = out
    rows = []
    failures = []
    for ri, rho in enumerate(rhos):
        per_estimator = {name: [] for name in config.estimators}
        for rep in range(config.replications):
            out = results[ri, rep]
            for name in config.estimators:
                got = out[name]
                if isinstance(got, str):
                    failures.append(MiseFailure(rho, rep, name, got))
                else:
                    per_estimator[name].append(got)
        for name in config.estimators:
            values = np.array(per_estimator[name])
            k = values.size
            mise = float(values.mean()) if k else math.nan
            stderr = float(values.std(ddof=1) / math.sqrt(k)) if k > 1 else (
                0.0 if k == 1 else math.nan
            )
            rows.append(
                MiseRow(
                    family=config.model.family,
                    rho=float(rho),
                    n=config.n,
                    estimator=name,
                    mise=mise,
                    stderr=stderr,
                    replications=k,
                )
            )
    return MiseReport(rows=tuple(rows), failures=tuple(failures), config=config)
