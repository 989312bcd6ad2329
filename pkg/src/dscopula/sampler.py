"""Metropolis-within-Gibbs sampling over the polytope.

One sweep visits the (m-1)^2 coordinate directions v_i v_j' in row-major
order.  For each direction the move P + gamma * v_i v_j' stays in the
polytope exactly for gamma in a closed interval Gamma (computed by
:func:`gamma_interval`); the proposal draws gamma uniformly on Gamma and
accepts by the prior x likelihood ratio in log space.  Prior-only mode drops
the likelihood factor.  Two acceptance-rule variants exist:

* default: the ratio of target densities alone;
* ``hastings_correction=True``: multiplies in the proposal-support ratio
  |Gamma(current)| / |Gamma(proposed)|.  Because Gamma at the proposed state
  is the current interval translated by -gamma, the support length is
  constant along each direction and the correction is exactly zero up to
  round-off; both variants are exposed so either convention can be pinned.

The inner loop runs in a compiled kernel when available, with a bit-exact
pure-Python twin as fallback (see ``_kernel_py``).  Identical seed, config,
data, and start state give bit-identical chains on either kernel.
"""

import io
import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernel_py
from .copula_basis import FLAVORS, PartitionBasis
from .exceptions import PolytopeError
from .polytope import (
    AlphaCoordinates,
    DoublyStochasticMatrix,
    basis_vectors,
    from_alpha,
    to_alpha,
)
from .priors import PriorSpec

try:
    from . import _kernel as _kernel_c
except ImportError:
    _kernel_c = None

MODES = ("posterior", "prior_only")

KERNEL_ENV_VAR = "DSCOPULA_KERNEL"


def available_kernels():
    """Names of the kernels importable in this build."""
    names = ["python"]
    if _kernel_c is not None:
        names.insert(0, "compiled")
    return tuple(names)


def select_kernel(name=None):
    """Resolve a kernel module by name.

    ``None`` or ``"auto"`` prefers the compiled kernel, honoring the
    DSCOPULA_KERNEL environment variable (``compiled`` or ``python``).
    """
    if name is None or name == "auto":
        name = os.environ.get(KERNEL_ENV_VAR, "auto")
    if name is None or name == "auto":
        return _kernel_c if _kernel_c is not None else _kernel_py
    if name == "python":
        return _kernel_py
    if name == "compiled":
        if _kernel_c is None:
            raise RuntimeError("compiled kernel requested but not built")
        return _kernel_c
    raise ValueError(f"unknown kernel {name!r}")


@dataclass(frozen=True)
class ChainConfig:
    """Configuration of a single chain.

    ``T`` counts sweeps; states after ``burn_in`` sweeps enter the running
    mean, and every ``thin``-th of them is stored (0 stores none).  ``basis``
    selects the likelihood: ``indicator`` reduces the data to the m x m bin
    counts (their sufficient statistic), ``bernstein`` evaluates the model
    density at every observation.
    """

    m: int
    prior: PriorSpec
    T: int = 10_000
    burn_in: int = 1_000
    seed: int = 0
    mode: str = "posterior"
    basis: str = "indicator"
    hastings_correction: bool = False
    thin: int = 10

    def __post_init__(self):
        if self.m < 2:
            raise PolytopeError("order must be at least 2")
        if self.prior.m != self.m:
            raise ValueError(f"prior order {self.prior.m} != chain order {self.m}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.basis not in FLAVORS:
            raise ValueError(f"basis must be one of {FLAVORS}, got {self.basis!r}")
        if self.T < 1:
            raise ValueError("T must be at least 1")
        if not 0 <= self.burn_in < self.T:
            raise ValueError("burn_in must satisfy 0 <= burn_in < T")
        if self.thin < 0:
            raise ValueError("thin must be nonnegative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class ChainResult:
    """Output of :func:`run_chain`."""

    mean_P: DoublyStochasticMatrix
    states: np.ndarray | None
    acceptance_rate: np.ndarray
    radius_trace: np.ndarray
    log_posterior_trace: np.ndarray
    acceptance_trace: np.ndarray
    config: ChainConfig
    kernel: str

    def write_trace_csv(self, fileobj):
        """Per-sweep rows ``sweep,radius,log_posterior,accept_rate`` (1-based)."""
        fileobj.write("sweep,radius,log_posterior,accept_rate\n")
        for t in range(self.radius_trace.size):
            fileobj.write(
                f"{t + 1},{self.radius_trace[t]:.17g},"
                f"{self.log_posterior_trace[t]:.17g},"
                f"{self.acceptance_trace[t]:.17g}\n"
            )

    def trace_csv(self):
        buf = io.StringIO()
        self.write_trace_csv(buf)
        return buf.getvalue()


@lru_cache(maxsize=None)
def _direction_tensor(m):
    """Direction matrices E_d = v_i v_j' stacked row-major, with block extents.

    E_d is nonzero exactly on its leading (i+1) x (j+1) block, where
    d = (i-1)(m-1) + (j-1) for 1-based direction indices (i, j).
    """
    G = basis_vectors(m)
    ndir = (m - 1) ** 2
    dirs = np.zeros((ndir, m, m))
    rows = np.zeros(ndir, dtype=np.int64)
    cols = np.zeros(ndir, dtype=np.int64)
    d = 0
    for i in range(m - 1):
        for j in range(m - 1):
            dirs[d] = np.outer(G[:, i], G[:, j])
            rows[d] = i + 2
            cols[d] = j + 2
            d += 1
    dirs.setflags(write=False)
    rows.setflags(write=False)
    cols.setflags(write=False)
    return dirs, rows, cols


def _state_matrix(state):
    if isinstance(state, AlphaCoordinates):
        return from_alpha(state).entries
    if isinstance(state, DoublyStochasticMatrix):
        return state.entries
    return DoublyStochasticMatrix(state).entries


def gamma_interval(state, i, j):
    """Largest closed interval [lo, hi] with P + gamma * v_i v_j' feasible.

    ``state`` is AlphaCoordinates or a doubly stochastic matrix; direction
    indices are 1-based (1 <= i, j <= m-1).  Always contains 0; each finite
    endpoint drives some entry of P exactly to 0.
    """
    P = _state_matrix(state)
    m = P.shape[0]
    if not (1 <= i <= m - 1 and 1 <= j <= m - 1):
        raise IndexError(f"direction ({i},{j}) out of range 1..{m - 1}")
    dirs, rows, cols = _direction_tensor(m)
    d = (i - 1) * (m - 1) + (j - 1)
    E = dirs[d, : rows[d], : cols[d]]
    block = P[: rows[d], : cols[d]]
    ratio = -block / E
    lo = float(ratio[E > 0].max())
    hi = float(ratio[E < 0].min())
    return lo, hi


def _as_points(data):
    if data is None:
        return None
    if hasattr(data, "u") and hasattr(data, "v"):
        pts = np.column_stack([np.asarray(data.u, float), np.asarray(data.v, float)])
    else:
        pts = np.asarray(data, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"data must have shape (n, 2), got {pts.shape}")
    if pts.size == 0:
        raise ValueError("posterior mode requires a nonempty sample")
    if pts.min() < 0.0 or pts.max() > 1.0:
        raise ValueError("pseudo-observations must lie in [0, 1]^2")
    return pts


def _kernel_inputs(points, config, P0):
    """Likelihood tables for the kernels: bin counts or per-point tables."""
    m = config.m
    if config.mode == "prior_only":
        return None, None, None
    basis = PartitionBasis(m, config.basis)
    if config.basis == "indicator":
        bu = basis.bin_index(points[:, 0])
        bv = basis.bin_index(points[:, 1])
        counts = np.zeros((m, m))
        np.add.at(counts, (bu, bv), 1.0)
        return counts, None, None
    G = basis_vectors(m)
    Bx = basis.phi_matrix(points[:, 0])
    By = basis.phi_matrix(points[:, 1])
    dens0 = m * np.einsum("ki,ij,kj->k", Bx, P0, By)
    CU = Bx @ G
    CV = By @ G
    coef = m * (CU[:, :, None] * CV[:, None, :]).reshape(points.shape[0], -1)
    return None, np.ascontiguousarray(coef), dens0


def run_chain(data, config, kernel=None):
    """Run one chain from the polytope center; deterministic given the seed.

    ``data`` is required in posterior mode: an (n, 2) array of
    pseudo-observations in [0, 1]^2, or any object with ``u``/``v``
    attributes (e.g. ``estimators.PseudoSample``).  Prior-only mode requires
    ``data=None``.  The random stream is PCG64 seeded from ``config.seed``;
    identical seed, config, and data give a bit-identical result on either
    kernel.
    """
    points = _as_points(data)
    if config.mode == "posterior" and points is None:
        raise ValueError("posterior mode requires data")
    if config.mode == "prior_only" and points is not None:
        raise ValueError("prior-only mode takes no data")
    mod = select_kernel(kernel)
    m = config.m
    P0 = np.full((m, m), 1.0 / m)
    counts, coef, dens0 = _kernel_inputs(points, config, P0)
    dirs, rows, cols = _direction_tensor(m)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(config.seed)))
    prior_code = 1 if config.prior.kind == "jeffreys" else 0
    sum_P, n_kept, accepts, radius_tr, logpost_tr, accrate_tr, states, _ = (
        mod.run_chain_kernel(
            P0,
            dirs,
            rows,
            cols,
            counts,
            coef,
            dens0,
            prior_code,
            int(config.hastings_correction),
            config.T,
            config.burn_in,
            config.thin,
            rng,
        )
    )
    mean_P = DoublyStochasticMatrix(sum_P / n_kept)
    rate = (accepts / config.T).reshape(m - 1, m - 1)
    return ChainResult(
        mean_P=mean_P,
        states=states,
        acceptance_rate=rate,
        radius_trace=radius_tr,
        log_posterior_trace=logpost_tr,
        acceptance_trace=accrate_tr,
        config=config,
        kernel=mod.KERNEL_NAME,
    )


def sweep(state, data_counts, config, rng, kernel=None):
    """One full sweep over all (m-1)^2 directions from ``state``.

    ``data_counts`` is the m x m bin-count matrix (indicator basis) or None;
    it is ignored in prior-only mode.  Consumes exactly 2 (m-1)^2 uniforms
    from ``rng`` and returns the new state as AlphaCoordinates.
    """
    P0 = _state_matrix(state)
    m = config.m
    if P0.shape[0] != m:
        raise PolytopeError(f"state order {P0.shape[0]} != config order {m}")
    counts = None
    if config.mode == "posterior":
        if data_counts is None:
            raise ValueError("posterior mode requires data counts")
        counts = np.asarray(data_counts, dtype=float)
        if counts.shape != (m, m) or counts.min() < 0:
            raise ValueError(f"counts must be a nonnegative {m} x {m} matrix")
        if config.basis != "indicator":
            raise ValueError("sweep() supports the indicator likelihood only")
    mod = select_kernel(kernel)
    dirs, rows, cols = _direction_tensor(m)
    prior_code = 1 if config.prior.kind == "jeffreys" else 0
    *_, final_P = mod.run_chain_kernel(
        P0,
        dirs,
        rows,
        cols,
        counts,
        None,
        None,
        prior_code,
        int(config.hastings_correction),
        1,
        0,
        0,
        rng,
    )
    return to_alpha(final_P)
