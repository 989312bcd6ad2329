"""Log-densities on the polytope: Jeffreys (via Fisher information) and uniform.

The model density a_P has, in the free parameters W = P/m, a Fisher
information matrix of order (m-1)^2 whose determinant reduces to

    I(W) = det((1/m) I - m V'V) / (m^m det D0 det D1),

with V the first m-1 columns of W, D0 the diagonal of the interior
(m-1)x(m-1) block of W and D1 the diagonal of (w_mm, last column, last row).
Simplifying in terms of P gives the form implemented here:

    log I(P) = (m-1)^2 log m + logdet(I - (P'P)_[1:m-1, 1:m-1]) - sum_ij log P_ij,

evaluated in log space throughout because I grows like m^(2m(m-1)).
The Jeffreys prior is proportional to I^(1/2); the uniform prior is the
uniform distribution in the alpha coordinates.  Neither is normalized: all
downstream use is ratio-based.
"""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import BoundaryError, PolytopeError
from .polytope import DoublyStochasticMatrix, FEAS_TOL

PRIOR_KINDS = ("jeffreys", "uniform")

# Entries of W = P/m at or below this are treated as the polytope boundary,
# where the Jeffreys density diverges and log-densities return -inf.
BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class PriorSpec:
    """Prior over the polytope: ``jeffreys`` or ``uniform``, of order m."""

    kind: str
    m: int

    def __post_init__(self):
        if self.kind not in PRIOR_KINDS:
            raise ValueError(f"kind must be one of {PRIOR_KINDS}, got {self.kind!r}")
        if self.m < 2:
            raise PolytopeError("order must be at least 2")


def _entries(P):
    if isinstance(P, DoublyStochasticMatrix):
        return P.entries
    arr = np.asarray(P, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 2:
        raise PolytopeError(f"expected a square matrix of order >= 2, got {arr.shape}")
    return arr


def log_fisher_info_det(P):
    """log I(P) by the reduced closed form.

    Requires a strictly interior matrix: raises BoundaryError when any entry
    of W = P/m is at or below BOUNDARY_TOL, where 1/w terms diverge.
    """
    arr = _entries(P)
    m = arr.shape[0]
    if arr.min() / m <= BOUNDARY_TOL:
        raise BoundaryError("matrix is on or outside the polytope boundary")
    S = arr.T @ arr
    A = np.eye(m - 1) - S[: m - 1, : m - 1]
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        raise BoundaryError("information matrix degenerate at this state") from None
    logdet = 2.0 * float(np.log(np.diag(L)).sum())
    return (m - 1) ** 2 * math.log(m) + logdet - float(np.log(arr).sum())


def fisher_info_det(P):
    """I(P) > 0, the Fisher-information determinant in the free parameters."""
    return math.exp(log_fisher_info_det(P))


def log_fisher_info_det_direct(P):
    """log I(P) by assembling the full (m-1)^2 x (m-1)^2 information matrix.

    Entry ((i1,j1), (i2,j2)) of the expected information is

        1/w_i1j1 + 1/w_i1m + 1/w_mj1 + 1/w_mm   if i1 = i2, j1 = j2,
        1/w_i1m + 1/w_mm                        if i1 = i2, j1 != j2,
        1/w_mj1 + 1/w_mm                        if i1 != i2, j1 = j2,
        1/w_mm                                  otherwise.

    Independent reference route for :func:`log_fisher_info_det`; the two agree
    to relative error 1e-8 on interior matrices.
    """
    arr = _entries(P)
    m = arr.shape[0]
    if arr.min() / m <= BOUNDARY_TOL:
        raise BoundaryError("matrix is on or outside the polytope boundary")
    w = arr / m
    k = m - 1
    ones = np.ones((k, k))
    F = np.full((k * k, k * k), 1.0 / w[k, k])
    F += np.kron(np.diag(1.0 / w[:k, k]), ones)
    F += np.kron(ones, np.diag(1.0 / w[k, :k]))
    F += np.diag((1.0 / w[:k, :k]).ravel())
    sign, logdet = np.linalg.slogdet(F)
    if sign <= 0:
        raise BoundaryError("information matrix not positive definite")
    return float(logdet)


def fisher_info_det_direct(P):
    """I(P) by the full-matrix reference route."""
    return math.exp(log_fisher_info_det_direct(P))


def _is_inside(arr):
    if arr.min() < -FEAS_TOL:
        return False
    rows = arr.sum(axis=1)
    cols = arr.sum(axis=0)
    return max(np.abs(rows - 1.0).max(), np.abs(cols - 1.0).max()) <= 1e-10


def log_density(prior, P):
    """Unnormalized log prior density at P.

    jeffreys: 0.5 * log I(P); uniform: 0.  Either returns -inf when P is
    outside the polytope or within BOUNDARY_TOL of its boundary, so samplers
    reject such proposals instead of erroring.
    """
    arr = _entries(P)
    m = arr.shape[0]
    if m != prior.m:
        raise PolytopeError(f"matrix order {m} does not match prior order {prior.m}")
    if not _is_inside(arr) or arr.min() / m <= BOUNDARY_TOL:
        return -math.inf
    if prior.kind == "uniform":
        return 0.0
    try:
        return 0.5 * log_fisher_info_det(arr)
    except BoundaryError:
        return -math.inf
