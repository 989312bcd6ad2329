"""Partitions of unity and the copula family built on them.

A partition of unity is a set of nonnegative functions phi_1..phi_m on [0,1]
summing to 1 pointwise, each m*phi_i a probability density.  With
Phi_i(u) = int_0^u phi_i and a doubly stochastic matrix P, the function

    A_P(u, v) = m * Phi(u)' P Phi(v)

is an absolutely continuous copula with density
a_P(u, v) = m * phi(u)' P phi(v).  Two flavors are provided:

* ``indicator``: phi_i is the indicator of the i-th cell of the uniform
  m-partition of [0,1] (first cell closed on the left, all cells closed on
  the right), giving a piecewise-bilinear A_P;
* ``bernstein``: phi_i is the Bernstein polynomial B_{i-1,m-1}, giving a
  polynomial A_P.

Discretizing any copula C on the uniform m-grid by second differences yields
a doubly stochastic matrix P_C whose copula A_{P_C} matches C on the grid and
approximates it in sup norm within 2/m (indicator) or 1/sqrt(m) (bernstein).
"""

import math

import numpy as np
from scipy.special import betainc, comb

from .exceptions import NotACopulaError, PolytopeError
from .polytope import DoublyStochasticMatrix

FLAVORS = ("indicator", "bernstein")


class PartitionBasis:
    """A partition of unity of order m, indicator or bernstein flavor.

    Indices i are 1-based (1 <= i <= m) throughout, matching the functions
    phi_1..phi_m.
    """

    __slots__ = ("m", "flavor", "_binom")

    def __init__(self, m, flavor="indicator"):
        if m < 2:
            raise PolytopeError("order must be at least 2")
        if flavor not in FLAVORS:
            raise ValueError(f"flavor must be one of {FLAVORS}, got {flavor!r}")
        self.m = int(m)
        self.flavor = flavor
        # Binomial coefficients C(m-1, 0..m-1) for the Bernstein densities.
        self._binom = comb(m - 1, np.arange(m)) if flavor == "bernstein" else None

    def __repr__(self):
        return f"PartitionBasis(m={self.m}, flavor={self.flavor!r})"

    def bin_index(self, u):
        """0-based cell index of u: cell 0 is [0, 1/m], cell i is (i/m, (i+1)/m]."""
        u = np.asarray(u, dtype=float)
        idx = np.where(u <= 1.0 / self.m, 0, np.ceil(self.m * u).astype(int) - 1)
        return idx if idx.ndim else int(idx)

    def phi(self, i, u):
        """phi_i(u); scalar or elementwise over an array u."""
        self._check_index(i)
        u = np.asarray(u, dtype=float)
        if self.flavor == "indicator":
            out = (self.bin_index(u) == i - 1).astype(float)
        else:
            k = i - 1
            out = self._binom[k] * u**k * (1.0 - u) ** (self.m - 1 - k)
        return float(out) if out.ndim == 0 else out

    def phi_integral(self, i, u):
        """Phi_i(u) = int_0^u phi_i(t) dt, in closed form; scalar or elementwise."""
        self._check_index(i)
        u = np.asarray(u, dtype=float)
        if self.flavor == "indicator":
            out = np.clip(u - (i - 1) / self.m, 0.0, 1.0 / self.m)
        else:
            # Phi_i(u) = (1/m) * sum_{k=i}^m B_{k,m}(u) = (1/m) * P[Bin(m,u) >= i],
            # the regularized incomplete beta function I_u(i, m-i+1).
            out = betainc(i, self.m - i + 1, u) / self.m
        return float(out) if out.ndim == 0 else out

    def phi_matrix(self, u):
        """Matrix [phi_i(u_k)] of shape (len(u), m)."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if self.flavor == "indicator":
            out = np.zeros((u.size, self.m))
            out[np.arange(u.size), self.bin_index(u)] = 1.0
        else:
            k = np.arange(self.m)
            out = self._binom * u[:, None] ** k * (1.0 - u[:, None]) ** (self.m - 1 - k)
        return out

    def integral_matrix(self, u):
        """Matrix [Phi_i(u_k)] of shape (len(u), m)."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if self.flavor == "indicator":
            i = np.arange(1, self.m + 1)
            return np.clip(u[:, None] - (i - 1) / self.m, 0.0, 1.0 / self.m)
        i = np.arange(1, self.m + 1)
        return betainc(i, self.m - i + 1, u[:, None]) / self.m

    def _check_index(self, i):
        if not 1 <= i <= self.m:
            raise IndexError(f"basis index {i} out of range 1..{self.m}")


def _entries(P):
    if isinstance(P, DoublyStochasticMatrix):
        return P.entries
    return DoublyStochasticMatrix(P).entries


def copula_cdf(P, basis, u, v):
    """A_P(u, v) = m * Phi(u)' P Phi(v), elementwise over broadcast u, v."""
    arr = _entries(P)
    u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    U = basis.integral_matrix(u.ravel())
    V = basis.integral_matrix(v.ravel())
    out = basis.m * np.einsum("ki,ij,kj->k", U, arr, V)
    return float(out[0]) if u.ndim == 0 else out.reshape(u.shape)


def copula_pdf(P, basis, u, v):
    """Density a_P(u, v) = m * phi(u)' P phi(v), elementwise over broadcast u, v."""
    arr = _entries(P)
    u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    U = basis.phi_matrix(u.ravel())
    V = basis.phi_matrix(v.ravel())
    out = basis.m * np.einsum("ki,ij,kj->k", U, arr, V)
    return float(out[0]) if u.ndim == 0 else out.reshape(u.shape)


def cdf_outer(P, basis, u, v):
    """A_P evaluated on the product grid u x v; shape (len(u), len(v))."""
    arr = _entries(P)
    U = basis.integral_matrix(u)
    V = basis.integral_matrix(v)
    return basis.m * (U @ arr @ V.T)


def discretize(C, m, tol=1e-8):
    """Doubly stochastic matrix P_C = m * (second differences of C on the m-grid).

    ``C`` is called as C(u, v) with broadcasting arrays.  Grid boundary values
    are imposed exactly (C(u,0)=0, C(u,1)=u, ...), so row/column sums are
    exact up to round-off regardless of the accuracy of C in the interior.
    Raises NotACopulaError when a second difference is negative beyond
    ``tol`` (C is not 2-increasing).
    """
    grid = np.arange(m + 1) / m
    R = np.empty((m + 1, m + 1))
    inner = grid[1:-1]
    R[1:-1, 1:-1] = C(inner[:, None], inner[None, :])
    R[0, :] = 0.0
    R[:, 0] = 0.0
    R[m, :] = grid
    R[:, m] = grid
    P = m * (R[1:, 1:] - R[:-1, 1:] - R[1:, :-1] + R[:-1, :-1])
    low = P.min()
    if low < -tol:
        raise NotACopulaError(
            f"second difference {low:.3e} is negative beyond tolerance; "
            "input is not 2-increasing"
        )
    np.clip(P, 0.0, None, out=P)
    return DoublyStochasticMatrix(P)


def approximation_error(C, m, basis, resolution=200):
    """Sup-grid distance between C and A_{P_C} for the given basis.

    Bounded by 2/m for the indicator basis and 1/sqrt(m) for the bernstein
    basis.  ``resolution`` must be at least 10*m so the grid resolves the
    cells of the discretization.
    """
    if resolution < 10 * m:
        raise ValueError("resolution must be at least 10*m")
    P = discretize(C, m)
    grid = np.arange(resolution + 1) / resolution
    A = cdf_outer(P, basis, grid, grid)
    target = C(grid[:, None], grid[None, :])
    return float(np.abs(A - target).max())


class CopulaGrid:
    """A copula evaluated on the uniform (g+1) x (g+1) grid {i/g} x {j/g}."""

    __slots__ = ("resolution", "values")

    def __init__(self, resolution, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (resolution + 1, resolution + 1):
            raise ValueError(
                f"values shape {values.shape} does not match resolution {resolution}"
            )
        self.resolution = int(resolution)
        self.values = values

    @classmethod
    def from_function(cls, f, resolution):
        grid = np.arange(resolution + 1) / resolution
        return cls(resolution, f(grid[:, None], grid[None, :]))

    def validate(self, margin_tol=1e-8, increase_tol=1e-12):
        """Check uniform margins and 2-increasingness on grid cells."""
        g = self.resolution
        grid = np.arange(g + 1) / g
        V = self.values
        margin_err = max(
            np.abs(V[0, :]).max(),
            np.abs(V[:, 0]).max(),
            np.abs(V[g, :] - grid).max(),
            np.abs(V[:, g] - grid).max(),
        )
        if margin_err > margin_tol:
            raise NotACopulaError(f"margin deviates by {margin_err:.3e}")
        inc = V[1:, 1:] - V[:-1, 1:] - V[1:, :-1] + V[:-1, :-1]
        if inc.min() < -increase_tol:
            raise NotACopulaError(
                f"2-increasingness violated by {-inc.min():.3e} on a grid cell"
            )
        return self

    def write_csv(self, fileobj):
        """Rows ``u,v,value`` in row-major grid order, 17 significant digits."""
        g = self.resolution
        fileobj.write("u,v,value\n")
        for i in range(g + 1):
            u = i / g
            for j in range(g + 1):
                fileobj.write(f"{u:.17g},{j / g:.17g},{self.values[i, j]:.17g}\n")

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            self.write_csv(fh)


def pdf_normalization(P, basis, resolution=201):
    """Integral of a_P over the unit square.

    Exact cell sum for the indicator flavor; midpoint quadrature on a
    resolution x resolution grid for bernstein.  Equals 1 up to quadrature
    error (the leading midpoint error term vanishes because rows and columns
    of P sum to 1).
    """
    arr = _entries(P)
    if basis.flavor == "indicator":
        return float(arr.sum() / basis.m)
    mid = (np.arange(resolution) + 0.5) / resolution
    U = basis.phi_matrix(mid)
    vals = basis.m * (U @ arr @ U.T)
    return float(vals.sum() / resolution**2)
