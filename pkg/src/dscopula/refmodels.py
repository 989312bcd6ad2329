"""Ground-truth laws for the simulation study.

Three reference copulas parameterized by a correlation rho:

* ``gaussian``: C(u,v) = Phi2(Phi^-1(u), Phi^-1(v); rho), evaluated through
  Owen's T function to full double accuracy;
* ``cross``: C(u,v) = (C_g(u,v) - C_g(u,1-v) + u) / 2, the law of a Gaussian
  pair whose second coordinate is flipped v -> 1-v with probability 1/2;
* ``diamond``: the cross law with the first coordinate shifted by 1/2 mod 1.

Exact samplers follow the same constructions.  ``MarginPair`` supplies the
margins of the unknown-margins experiment arm: Student t with 7 degrees of
freedom and chi-square with 4.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.special import ndtr, ndtri, owens_t

FAMILIES = ("gaussian", "cross", "diamond")


def _owens_t_ext(h, a):
    """Owen's T extended to a = +-inf, where T(h, +-inf) = +-Phi(-|h|)/2."""
    h = np.asarray(h, dtype=float)
    a = np.asarray(a, dtype=float)
    out = np.empty(np.broadcast(h, a).shape)
    h, a = np.broadcast_arrays(h, a)
    finite = np.isfinite(a)
    out[finite] = owens_t(h[finite], a[finite])
    inf = ~finite
    out[inf] = np.sign(a[inf]) * 0.5 * ndtr(-np.abs(h[inf]))
    return out


def bvn_cdf(x, y, rho):
    """P(X <= x, Y <= y) for standard bivariate normal (X, Y), corr rho.

    Owen's T decomposition; absolute accuracy near machine precision, well
    inside the 1e-7 budget.  Handles rho = +-1 and zero arguments exactly.
    """
    if not -1.0 <= rho <= 1.0:
        raise ValueError(f"correlation must lie in [-1, 1], got {rho}")
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    x = np.atleast_1d(x)
    y = np.atleast_1d(y)
    if rho == 1.0:
        return ndtr(np.minimum(x, y)).reshape(x.shape)
    if rho == -1.0:
        return np.maximum(ndtr(x) + ndtr(y) - 1.0, 0.0).reshape(x.shape)
    s = np.sqrt(1.0 - rho * rho)
    with np.errstate(divide="ignore", invalid="ignore"):
        ax = (y - rho * x) / (x * s)
        ay = (x - rho * y) / (y * s)
    out = 0.5 * (ndtr(x) + ndtr(y)) - _owens_t_ext(x, ax) - _owens_t_ext(y, ay)
    prod = x * y
    out -= 0.5 * ((prod < 0) | ((prod == 0) & (x + y < 0)))
    # Both arguments zero: the a-arguments above are 0/0.
    both = (x == 0) & (y == 0)
    if both.any():
        out[both] = 0.25 + np.arcsin(rho) / (2.0 * np.pi)
    return out


def _gaussian_cdf(u, v, rho):
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    u, v = np.broadcast_arrays(u, v)
    inner = (u > 0) & (u < 1) & (v > 0) & (v < 1)
    out = np.empty(u.shape)
    if inner.any():
        out[inner] = bvn_cdf(ndtri(u[inner]), ndtri(v[inner]), rho)
    out[u >= 1] = v[u >= 1]
    out[v >= 1] = u[v >= 1]
    out[(u >= 1) & (v >= 1)] = 1.0
    out[(u <= 0) | (v <= 0)] = 0.0
    return out


def _cross_cdf(u, v, rho):
    return 0.5 * (_gaussian_cdf(u, v, rho) - _gaussian_cdf(u, 1.0 - v, rho) + u)


def _diamond_cdf(u, v, rho):
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    u, v = np.broadcast_arrays(u, v)
    left = u <= 0.5
    mid = _cross_cdf(np.full(v.shape, 0.5), v, rho)
    out = np.where(
        left,
        _cross_cdf(u + 0.5, v, rho) - mid,
        _cross_cdf(u - 0.5, v, rho) + v - mid,
    )
    return out


@dataclass(frozen=True)
class ReferenceCopula:
    """One of the study's ground-truth copulas: gaussian, cross, or diamond."""

    family: str
    rho: float

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if not -1.0 <= self.rho <= 1.0:
            raise ValueError(f"correlation must lie in [-1, 1], got {self.rho}")

    def cdf(self, u, v):
        """C(u, v), elementwise over broadcast arrays."""
        u_arr = np.asarray(u, dtype=float)
        scalar = u_arr.ndim == 0 and np.asarray(v).ndim == 0
        if self.family == "gaussian":
            out = _gaussian_cdf(u, v, self.rho)
        elif self.family == "cross":
            out = _cross_cdf(u, v, self.rho)
        else:
            out = _diamond_cdf(u, v, self.rho)
        return float(out[0]) if scalar else out

    def sample(self, n, rng):
        """n exact draws, shape (n, 2), in (0, 1)^2.

        Consumes the stream in a fixed order: n normal pairs, then (for cross
        and diamond) n flip uniforms.
        """
        if n < 1:
            raise ValueError("n must be at least 1")
        z = rng.standard_normal((n, 2))
        x = z[:, 0]
        y = self.rho * z[:, 0] + np.sqrt(max(1.0 - self.rho**2, 0.0)) * z[:, 1]
        u = ndtr(x)
        v = ndtr(y)
        if self.family in ("cross", "diamond"):
            flip = rng.random(n) > 0.5
            v = np.where(flip, 1.0 - v, v)
        if self.family == "diamond":
            u = np.mod(u + 0.5, 1.0)
        return np.column_stack([u, v])


_T7 = stats.t(df=7)
_CHI4 = stats.chi2(df=4)

MARGIN_KINDS = ("uniform", "student_t7", "chi_square4")


def _margin_dist(kind):
    if kind == "student_t7":
        return _T7
    if kind == "chi_square4":
        return _CHI4
    return None


@dataclass(frozen=True)
class MarginPair:
    """Margins of the two coordinates; ``uniform`` means no transform."""

    x: str = "uniform"
    y: str = "uniform"

    def __post_init__(self):
        for kind in (self.x, self.y):
            if kind not in MARGIN_KINDS:
                raise ValueError(f"margin must be one of {MARGIN_KINDS}, got {kind!r}")

    def _kind(self, coordinate):
        if coordinate in (0, "x"):
            return self.x
        if coordinate in (1, "y"):
            return self.y
        raise ValueError(f"coordinate must be 'x'/0 or 'y'/1, got {coordinate!r}")

    def cdf(self, coordinate, value):
        """Margin CDF; raises for values outside the support."""
        kind = self._kind(coordinate)
        value = np.asarray(value, dtype=float)
        if kind == "chi_square4" and np.any(value < 0):
            raise ValueError("chi-square support is [0, inf)")
        if kind == "uniform":
            if np.any(value < 0) or np.any(value > 1):
                raise ValueError("uniform support is [0, 1]")
            out = value
        else:
            out = _margin_dist(kind).cdf(value)
        return float(out) if out.ndim == 0 else out

    def quantile(self, coordinate, prob):
        """Margin quantile function, the inverse of :meth:`cdf`."""
        kind = self._kind(coordinate)
        prob = np.asarray(prob, dtype=float)
        if np.any(prob < 0) or np.any(prob > 1):
            raise ValueError("probabilities must lie in [0, 1]")
        out = prob if kind == "uniform" else _margin_dist(kind).ppf(prob)
        return float(out) if out.ndim == 0 else out

    def transform(self, uv):
        """Apply the quantile transforms to copula draws, shape (n, 2)."""
        uv = np.asarray(uv, dtype=float)
        return np.column_stack(
            [self.quantile("x", uv[:, 0]), self.quantile("y", uv[:, 1])]
        )


def write_sample_csv(xy, fileobj):
    """Rows ``x,y``, 17 significant digits."""
    fileobj.write("x,y\n")
    for x, y in np.asarray(xy, dtype=float):
        fileobj.write(f"{x:.17g},{y:.17g}\n")
