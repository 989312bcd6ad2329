"""Geometry of the set of doubly stochastic matrices.

An m x m doubly stochastic matrix P has nonnegative entries and unit row and
column sums.  The set of all such matrices is a convex polytope of dimension
(m-1)^2 whose vertices are the permutation matrices.  This module provides

* validated containers for P and for its free coordinates,
* the orthonormal coordinate chart  P = (1/m) 11' + G alpha G',
* a greedy decomposition of P into a convex combination of permutations,
* the Frobenius distance from the polytope's center.
"""

from functools import lru_cache

import numpy as np

from .exceptions import DecompositionError, PolytopeError

# Unit row/column sums are enforced to this absolute tolerance.
SUM_TOL = 1e-12
# Entries >= -FEAS_TOL are accepted as nonnegative and clamped to zero:
# floating-point round-off at the boundary must not reject valid states.
FEAS_TOL = 1e-12


class DoublyStochasticMatrix:
    """Validated, immutable container for a doubly stochastic matrix."""

    __slots__ = ("entries",)

    def __init__(self, entries):
        arr = np.array(entries, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise PolytopeError(f"expected a square matrix, got shape {arr.shape}")
        if arr.shape[0] < 2:
            raise PolytopeError("matrix order must be at least 2")
        low = arr.min()
        if low < -FEAS_TOL:
            raise PolytopeError(f"entry {low:.3e} is negative beyond tolerance")
        rows = arr.sum(axis=1)
        cols = arr.sum(axis=0)
        err = max(np.abs(rows - 1.0).max(), np.abs(cols - 1.0).max())
        if err > SUM_TOL:
            raise PolytopeError(f"row/column sums deviate from 1 by {err:.3e}")
        np.clip(arr, 0.0, None, out=arr)
        arr.setflags(write=False)
        self.entries = arr

    @property
    def m(self):
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None and not copy:
            return self.entries
        return np.array(self.entries, dtype=dtype)

    def __repr__(self):
        return f"DoublyStochasticMatrix(m={self.m})"


class AlphaCoordinates:
    """Free coordinates alpha = G'PG of a doubly stochastic matrix.

    The coordinates are valid (map back onto the polytope) iff every entry of
    (1/m) 11' + G alpha G' is >= -FEAS_TOL; validity is checked by
    :func:`from_alpha`, not at construction.
    """

    __slots__ = ("m", "alpha")

    def __init__(self, m, alpha):
        alpha = np.array(alpha, dtype=float)
        if m < 2:
            raise PolytopeError("order must be at least 2")
        if alpha.shape != (m - 1, m - 1):
            raise PolytopeError(
                f"alpha must have shape {(m - 1, m - 1)}, got {alpha.shape}"
            )
        alpha.setflags(write=False)
        self.m = m
        self.alpha = alpha

    def __repr__(self):
        return f"AlphaCoordinates(m={self.m})"


class BirkhoffDecomposition:
    """Convex combination of permutation matrices reconstructing a matrix.

    ``terms`` is a list of ``(weight, perm)`` pairs where ``perm[r]`` is the
    column of the 1 in row r.  Weights are positive and sum to 1; there are at
    most (m-1)^2 + 1 terms.
    """

    __slots__ = ("m", "terms")

    def __init__(self, m, terms):
        self.m = m
        self.terms = list(terms)

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def reconstruct(self):
        out = np.zeros((self.m, self.m))
        for weight, perm in self.terms:
            out[np.arange(self.m), perm] += weight
        return out


@lru_cache(maxsize=None)
def basis_vectors(m):
    """Orthonormal basis of the hyperplane orthogonal to the all-ones vector.

    Returns the m x (m-1) matrix G whose column i-1 is
    v_i = (1, ..., 1, -i, 0, ..., 0)' / sqrt(i(i+1))  (i ones), i = 1..m-1.
    """
    if m < 2:
        raise PolytopeError("order must be at least 2")
    G = np.zeros((m, m - 1))
    for i in range(1, m):
        scale = 1.0 / np.sqrt(i * (i + 1.0))
        G[:i, i - 1] = scale
        G[i, i - 1] = -i * scale
    G.setflags(write=False)
    return G


def _entries(P):
    if isinstance(P, DoublyStochasticMatrix):
        return P.entries
    return DoublyStochasticMatrix(P).entries


def from_alpha(coords):
    """Map alpha coordinates to the doubly stochastic matrix they represent.

    Raises PolytopeError if the image lies outside the polytope (some entry
    below -FEAS_TOL).
    """
    m = coords.m
    G = basis_vectors(m)
    P = np.full((m, m), 1.0 / m) + G @ coords.alpha @ G.T
    return DoublyStochasticMatrix(P)


def to_alpha(P):
    """Coordinates alpha = G'PG of a doubly stochastic matrix."""
    arr = _entries(P)
    G = basis_vectors(arr.shape[0])
    return AlphaCoordinates(arr.shape[0], G.T @ arr @ G)


def radius(P):
    """Frobenius distance of P from the polytope center (1/m) 11'.

    Equals 0 at the center and sqrt(m-1) at any permutation matrix, the
    maximum over the polytope.
    """
    arr = _entries(P)
    m = arr.shape[0]
    return float(np.sqrt(((arr - 1.0 / m) ** 2).sum()))


def inscribed_ball_radius(m):
    """Radius 1/(m-1) of the largest ball centered at (1/m) 11' inside the polytope."""
    if m < 2:
        raise PolytopeError("order must be at least 2")
    return 1.0 / (m - 1)


def _perfect_matching(support):
    """Perfect matching on a bipartite rows-to-columns support matrix.

    Kuhn's augmenting-path algorithm; deterministic (rows and columns scanned
    in index order).  Returns ``perm`` with ``perm[r]`` the matched column, or
    None when no perfect matching exists.
    """
    m = support.shape[0]
    row_of_col = [-1] * m

    def augment(r, seen):
        for c in range(m):
            if support[r, c] and not seen[c]:
                seen[c] = True
                if row_of_col[c] < 0 or augment(row_of_col[c], seen):
                    row_of_col[c] = r
                    return True
        return False

    for r in range(m):
        if not augment(r, [False] * m):
            return None
    perm = np.empty(m, dtype=np.intp)
    for c, r in enumerate(row_of_col):
        perm[r] = c
    return perm


def birkhoff_decompose(P, tol=1e-12):
    """Greedy decomposition of P into a convex combination of permutations.

    Repeatedly finds a perfect matching on the entries above ``tol``,
    subtracts the smallest matched entry times the permutation, and stops when
    the residual is negligible.  Terminates in at most (m-1)^2 + 1 steps.
    """
    arr = _entries(P)
    m = arr.shape[0]
    residual = arr.copy()
    terms = []
    max_terms = (m - 1) ** 2 + 1
    # Residual entries at or below this are dropped; entrywise reconstruction
    # stays well within 1e-10.
    stop = 1e-11
    for _ in range(max_terms):
        if residual.max() <= stop:
            break
        perm = _perfect_matching(residual > tol)
        if perm is None:
            raise DecompositionError(
                "no perfect matching on the positive support; "
                "input is degenerate beyond tolerance"
            )
        matched = residual[np.arange(m), perm]
        weight = float(matched.min())
        terms.append((weight, perm))
        residual[np.arange(m), perm] = matched - weight
        np.clip(residual, 0.0, None, out=residual)
    else:
        if residual.max() > stop:
            raise DecompositionError(
                f"residual mass {residual.max():.3e} left after {max_terms} terms"
            )
    total = sum(w for w, _ in terms)
    terms = [(w / total, perm) for w, perm in terms]
    return BirkhoffDecomposition(m, terms)


def random_interior(m, rng, iterations=10_000):
    """Random interior doubly stochastic matrix for tests and validation.

    Normalizes a matrix of i.i.d. positive draws by Sinkhorn iteration until
    the row residual after column normalization falls below 1e-14 (so the
    final row rescale leaves both residuals far inside the 1e-12 matrix
    tolerance).  Coverage of the interior is uniform-ish; the exact law is
    irrelevant for invariant checks.
    """
    if m < 2:
        raise PolytopeError("order must be at least 2")
    X = -np.log(rng.random((m, m)))
    for _ in range(iterations):
        X /= X.sum(axis=1, keepdims=True)
        X /= X.sum(axis=0, keepdims=True)
        rows = np.abs(X.sum(axis=1) - 1.0).max()
        if rows < 1e-14:
            break
    X /= X.sum(axis=1, keepdims=True)
    return DoublyStochasticMatrix(X)
