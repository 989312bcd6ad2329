"""Copula estimators: Bayes posterior mean, constrained MLE, empirical, kernel.

All four consume a bivariate sample.  The Bayes and MLE estimators work on
pseudo-observations (rank-transformed or known-margin-transformed data) and
return copulas of the doubly stochastic family; the empirical estimator is
the rank-based copula that interpolates the empirical joint CDF of the ranks
exactly; the kernel estimator smooths the empirical joint CDF with Gaussian
kernels and standardizes its margins by numerical inversion.
"""

import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np
from scipy.special import ndtr
from scipy.stats import rankdata

from .copula_basis import CopulaGrid, PartitionBasis, copula_cdf
from .exceptions import ConvergenceError, DegenerateSampleError, InvalidMarginError
from .polytope import DoublyStochasticMatrix, basis_vectors
from .priors import PriorSpec
from .sampler import ChainConfig, gamma_interval, run_chain

ESTIMATE_KINDS = ("bayes_jeffreys", "bayes_uniform", "mle", "deheuvels", "kernel")

MARGIN_MODES = ("known", "unknown")


def _as_sample(raw, min_n=1):
    xy = np.asarray(raw, dtype=float)
    if xy.ndim != 2 or xy.shape[1] != 2:
        raise ValueError(f"sample must have shape (n, 2), got {xy.shape}")
    if xy.shape[0] < min_n:
        raise ValueError(f"sample must contain at least {min_n} observations")
    if not np.isfinite(xy).all():
        raise ValueError("sample contains non-finite values")
    return xy


@dataclass(frozen=True)
class PseudoSample:
    """Pairs in the unit square, plus how they were obtained.

    ``unknown`` mode holds rank pseudo-observations: each coordinate is a
    permutation of {1/(n+1), ..., n/(n+1)}.  ``known`` mode holds the data
    mapped through the stated margin CDFs.
    """

    u: np.ndarray
    v: np.ndarray
    margin_mode: str = "unknown"

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if u.ndim != 1 or u.shape != v.shape:
            raise ValueError("u and v must be 1-D arrays of equal length")
        if u.size < 1:
            raise ValueError("pseudo-sample must be nonempty")
        if self.margin_mode not in MARGIN_MODES:
            raise ValueError(
                f"margin_mode must be one of {MARGIN_MODES}, got {self.margin_mode!r}"
            )
        for arr in (u, v):
            if not np.isfinite(arr).all() or arr.min() < 0.0 or arr.max() > 1.0:
                raise ValueError("pseudo-observations must lie in [0, 1]")
        u.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def n(self):
        return self.u.size


def _resolve_margins(margins):
    if hasattr(margins, "cdf"):
        return partial(margins.cdf, "x"), partial(margins.cdf, "y")
    fx, fy = margins
    if not (callable(fx) and callable(fy)):
        raise TypeError("margins must be a MarginPair or a pair of CDF callables")
    return fx, fy


def pseudo_observations(raw, margins=None):
    """Map a raw sample into the unit square.

    ``margins=None`` uses ranks: coordinate-wise ordinal ranks divided by
    n + 1 (ties broken by input order; continuous margins make ties a
    null event).  Otherwise ``margins`` is a ``refmodels.MarginPair`` or a
    pair of CDF callables (F_X, F_Y) applied coordinate-wise; values they
    return outside [0, 1] raise InvalidMarginError.
    """
    xy = _as_sample(raw)
    n = xy.shape[0]
    if margins is None or margins == "unknown":
        u = rankdata(xy[:, 0], method="ordinal") / (n + 1.0)
        v = rankdata(xy[:, 1], method="ordinal") / (n + 1.0)
        return PseudoSample(u=u, v=v, margin_mode="unknown")
    fx, fy = _resolve_margins(margins)
    u = np.asarray(fx(xy[:, 0]), dtype=float)
    v = np.asarray(fy(xy[:, 1]), dtype=float)
    for arr in (u, v):
        if arr.shape != (n,):
            raise InvalidMarginError("margin CDF changed the sample shape")
        if not np.isfinite(arr).all() or arr.min() < 0.0 or arr.max() > 1.0:
            raise InvalidMarginError("margin CDF returned values outside [0, 1]")
    return PseudoSample(u=u, v=v, margin_mode="known")


def bin_counts(ps, m):
    """m x m counts of pseudo-observations per cell of the uniform partition."""
    basis = PartitionBasis(m, "indicator")
    counts = np.zeros((m, m), dtype=np.int64)
    np.add.at(counts, (basis.bin_index(ps.u), basis.bin_index(ps.v)), 1)
    return counts


@dataclass(frozen=True)
class CopulaEstimate:
    """An estimated copula: an evaluable CDF plus how it was produced.

    ``cdf`` accepts broadcasting arrays (u, v) in [0, 1]^2.  ``P`` and
    ``basis`` are set for the estimators of the doubly stochastic family
    (bayes, mle, deheuvels), None for the kernel estimator.
    """

    kind: str
    cdf: object
    P: DoublyStochasticMatrix | None = None
    basis: PartitionBasis | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ESTIMATE_KINDS:
            raise ValueError(f"kind must be one of {ESTIMATE_KINDS}, got {self.kind!r}")

    def grid(self, resolution=200):
        """Evaluate on the uniform grid, exportable as CSV."""
        return CopulaGrid.from_function(self.cdf, resolution)


def bayes_estimate(ps, prior, config=None, kernel=None):
    """Posterior-mean copula under the given prior.

    The posterior mean of A_P is A at the posterior-mean matrix because A_P
    is linear in P.  ``config`` defaults to ``ChainConfig(m=prior.m,
    prior=prior)``; when given, its prior must equal ``prior`` and its mode
    must be ``posterior``.
    """
    if config is None:
        config = ChainConfig(m=prior.m, prior=prior)
    if config.prior != prior:
        raise ValueError("config.prior disagrees with the prior argument")
    if config.mode != "posterior":
        raise ValueError("bayes_estimate requires a posterior-mode config")
    result = run_chain(ps, config, kernel=kernel)
    basis = PartitionBasis(config.m, config.basis)
    kind = "bayes_jeffreys" if prior.kind == "jeffreys" else "bayes_uniform"
    return CopulaEstimate(
        kind=kind,
        cdf=partial(copula_cdf, result.mean_P, basis),
        P=result.mean_P,
        basis=basis,
        provenance={
            "config": config,
            "seed": config.seed,
            "kernel": result.kernel,
            "margin_mode": ps.margin_mode,
            "mean_acceptance": float(result.acceptance_rate.mean()),
        },
    )


def _count_objective(P, counts, sel):
    vals = P[sel]
    if vals.min() <= 0.0:
        return -math.inf
    return float(counts[sel] @ np.log(vals))


def _line_maximum(P, E, counts, lo, hi):
    """argmax over gamma in [lo, hi] of sum counts*log(P + gamma*E).

    The restriction is concave; bisection on its derivative.  Entries with
    zero count contribute nothing (0 * log convention), so the derivative at
    an endpoint is infinite only when a positively counted entry vanishes
    there, which pushes the maximum inside.
    """
    sel = (counts > 0) & (E != 0.0)
    if not sel.any():
        return 0.0
    p = P[sel]
    e = E[sel]
    w = counts[sel]

    def deriv(g):
        denom = p + g * e
        bound = denom <= 0.0
        if bound.any():
            # only reachable at an endpoint; the binding entries share the
            # sign of e there and dominate
            return math.inf if e[bound][0] > 0 else -math.inf
        return float(np.sum(w * e / denom))

    if deriv(lo) <= 0.0:
        return lo
    if deriv(hi) >= 0.0:
        return hi
    a, b = lo, hi
    for _ in range(100):
        mid = 0.5 * (a + b)
        if deriv(mid) > 0.0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def _family_estimate(kind, P, flavor, provenance):
    dsm = P if isinstance(P, DoublyStochasticMatrix) else DoublyStochasticMatrix(P)
    basis = PartitionBasis(dsm.m, flavor)
    return CopulaEstimate(
        kind=kind,
        cdf=partial(copula_cdf, dsm, basis),
        P=dsm,
        basis=basis,
        provenance=provenance,
    )


def mle_estimate(ps, m, max_sweeps=1000, tol=1e-10):
    """Maximizer of the multinomial log-likelihood sum N_ij log P_ij.

    Coordinate ascent from the polytope center along the same (m-1)^2
    directions the sampler uses, each step an exact concave line maximization
    over the feasible interval.  Stops when a full sweep improves the
    objective by less than ``tol``; the optimum may lie on the boundary.
    Raises ConvergenceError (carrying the best iterate in ``best``) if
    ``max_sweeps`` is exhausted while still improving.
    """
    counts = bin_counts(ps, m).astype(float)
    G = basis_vectors(m)
    P = np.full((m, m), 1.0 / m)
    sel = counts > 0
    objective = _count_objective(P, counts, sel)
    sweeps = 0
    converged = False
    for sweeps in range(1, max_sweeps + 1):
        for i in range(1, m):
            for j in range(1, m):
                lo, hi = gamma_interval(P, i, j)
                if hi <= lo:
                    continue
                E = np.outer(G[:, i - 1], G[:, j - 1])
                gamma = _line_maximum(P, E, counts, lo, hi)
                if gamma != 0.0:
                    P += gamma * E
                    np.clip(P, 0.0, None, out=P)
        improved = _count_objective(P, counts, sel)
        if improved - objective < tol:
            objective = improved
            converged = True
            break
        objective = improved
    provenance = {"sweeps": sweeps, "log_likelihood": objective, "n": int(ps.n)}
    estimate = _family_estimate("mle", P, "indicator", provenance)
    if not converged:
        raise ConvergenceError(
            f"coordinate ascent still improving after {max_sweeps} sweeps",
            best=estimate,
        )
    return estimate


def _independence_cdf(u, v):
    out = np.asarray(u, dtype=float) * np.asarray(v, dtype=float)
    return float(out) if out.ndim == 0 else out


def deheuvels_estimate(raw):
    """Rank-based copula interpolating the empirical rank CDF exactly.

    Pairs the coordinate ranks into an n x n permutation matrix R; the
    estimate is the order-n indicator-family copula A_R, which satisfies
    A_R(i/n, j/n) = (1/n) #{k : rank(x_k) <= i, rank(y_k) <= j} for all grid
    points.  Depends on the data only through ranks, hence is invariant under
    strictly increasing margin transforms.  A single observation (n = 1)
    yields the independence copula, the only member consistent with it.
    """
    xy = _as_sample(raw)
    n = xy.shape[0]
    if n == 1:
        return CopulaEstimate(
            kind="deheuvels", cdf=_independence_cdf, provenance={"n": 1}
        )
    rx = rankdata(xy[:, 0], method="ordinal")
    ry = rankdata(xy[:, 1], method="ordinal")
    R = np.zeros((n, n))
    R[rx - 1, ry - 1] = 1.0
    return _family_estimate("deheuvels", R, "indicator", {"n": n})


def _bisect_quantile(marginal_cdf, lo, hi, targets):
    """Solve marginal_cdf(x) = t for each target; the CDF is increasing."""
    a = np.full(targets.shape, float(lo))
    b = np.full(targets.shape, float(hi))
    span = max(1.0, abs(lo), abs(hi))
    for _ in range(100):
        mid = 0.5 * (a + b)
        below = marginal_cdf(mid) < targets
        a = np.where(below, mid, a)
        b = np.where(below, b, mid)
        if float((b - a).max()) < 1e-13 * span:
            break
    return 0.5 * (a + b)


def kernel_estimate(raw, bandwidths=None):
    """Gaussian-kernel copula: the smoothed joint CDF on standardized margins.

    F(x, y) = (1/n) sum_k Phi((x - x_k)/h_x) Phi((y - y_k)/h_y) and
    C(u, v) = F(F_X^{-1}(u), F_Y^{-1}(v)) with the smoothed marginal CDFs
    inverted by bisection over the data range extended 5 bandwidths, after
    clamping u, v to [1/(2n), 1 - 1/(2n)] (the smoothed margins never attain
    0 or 1).  Exact boundary values are imposed at u, v in {0, 1}.  Default
    bandwidths follow the normal reference rule h = sigma * n^(-1/5) per
    coordinate; pass ``bandwidths=(h_x, h_y)`` to override.  Not rank-based:
    not invariant under increasing margin transforms.
    """
    xy = _as_sample(raw, min_n=2)
    x = xy[:, 0]
    y = xy[:, 1]
    n = xy.shape[0]
    sx = float(x.std(ddof=1))
    sy = float(y.std(ddof=1))
    if sx == 0.0 or sy == 0.0:
        raise DegenerateSampleError("a coordinate has zero sample variance")
    if bandwidths is None:
        hx = sx * n ** (-0.2)
        hy = sy * n ** (-0.2)
    else:
        hx, hy = (float(h) for h in bandwidths)
        if hx <= 0.0 or hy <= 0.0:
            raise ValueError("bandwidths must be positive")
    lo_x, hi_x = x.min() - 5.0 * hx, x.max() + 5.0 * hx
    lo_y, hi_y = y.min() - 5.0 * hy, y.max() + 5.0 * hy
    clamp_lo, clamp_hi = 0.5 / n, 1.0 - 0.5 / n

    def marg_x(t):
        return ndtr((t[:, None] - x) / hx).mean(axis=1)

    def marg_y(t):
        return ndtr((t[:, None] - y) / hy).mean(axis=1)

    def cdf(u, v):
        U, V = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
        scalar = U.ndim == 0
        uf = np.atleast_1d(U).ravel()
        vf = np.atleast_1d(V).ravel()
        if uf.min() < 0.0 or uf.max() > 1.0 or vf.min() < 0.0 or vf.max() > 1.0:
            raise ValueError("copula arguments must lie in [0, 1]")
        # Invert each distinct coordinate value once; grids repeat them g+1
        # times each.
        ux, iu = np.unique(np.clip(uf, clamp_lo, clamp_hi), return_inverse=True)
        vy, iv = np.unique(np.clip(vf, clamp_lo, clamp_hi), return_inverse=True)
        xq = _bisect_quantile(marg_x, lo_x, hi_x, ux)[iu]
        yq = _bisect_quantile(marg_y, lo_y, hi_y, vy)[iv]
        out = np.empty(uf.size)
        step = max(1, 2_000_000 // n)
        for s in range(0, uf.size, step):
            blk = slice(s, s + step)
            out[blk] = (
                ndtr((xq[blk, None] - x) / hx) * ndtr((yq[blk, None] - y) / hy)
            ).mean(axis=1)
        out[uf == 0.0] = 0.0
        out[vf == 0.0] = 0.0
        one = uf == 1.0
        out[one] = vf[one]
        one = vf == 1.0
        out[one] = uf[one]
        return float(out[0]) if scalar else out.reshape(U.shape)

    return CopulaEstimate(
        kind="kernel",
        cdf=cdf,
        provenance={"bandwidths": (hx, hy), "n": n},
    )
