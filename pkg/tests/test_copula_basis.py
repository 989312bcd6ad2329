import io
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from dscopula import (
    CopulaGrid,
    NotACopulaError,
    PartitionBasis,
    ReferenceCopula,
    approximation_error,
    cdf_outer,
    copula_cdf,
    copula_pdf,
    discretize,
    pdf_normalization,
    random_interior,
)

BASES = [PartitionBasis(4, "indicator"), PartitionBasis(4, "bernstein")]


def test_basis_validates():
    with pytest.raises(Exception):
        PartitionBasis(1)
    with pytest.raises(ValueError):
        PartitionBasis(3, "fourier")


@pytest.mark.parametrize("basis", BASES, ids=lambda b: b.flavor)
def test_partition_of_unity(basis, rng):
    u = rng.random(50)
    M = basis.phi_matrix(u)
    assert M.min() >= 0.0
    assert_allclose(M.sum(axis=1), 1.0, atol=1e-12)


@pytest.mark.parametrize("basis", BASES, ids=lambda b: b.flavor)
def test_each_scaled_phi_is_a_density(basis):
    for i in range(1, basis.m + 1):
        assert basis.phi_integral(i, 0.0) == 0.0
        assert basis.phi_integral(i, 1.0) == pytest.approx(1.0 / basis.m, abs=1e-14)
        grid = np.linspace(0, 1, 101)
        vals = basis.phi_integral(i, grid)
        assert (np.diff(vals) >= -1e-15).all()


@pytest.mark.parametrize("basis", BASES, ids=lambda b: b.flavor)
def test_integral_matrix_matches_scalar_integral(basis, rng):
    u = rng.random(20)
    M = basis.integral_matrix(u)
    for i in range(1, basis.m + 1):
        assert_allclose(M[:, i - 1], basis.phi_integral(i, u), atol=1e-15)


def test_bin_index_cell_boundaries():
    basis = PartitionBasis(4, "indicator")
    assert basis.bin_index(0.0) == 0
    assert basis.bin_index(0.25) == 0
    assert basis.bin_index(0.25 + 1e-12) == 1
    assert basis.bin_index(1.0) == 3
    assert list(basis.bin_index(np.array([0.1, 0.5, 0.9]))) == [0, 1, 3]


def test_phi_index_out_of_range():
    basis = PartitionBasis(3)
    for i in (0, 4):
        with pytest.raises(IndexError):
            basis.phi(i, 0.5)


@pytest.mark.parametrize("flavor", ["indicator", "bernstein"])
def test_center_gives_independence(flavor, rng):
    m = 5
    basis = PartitionBasis(m, flavor)
    P = np.full((m, m), 1.0 / m)
    u = rng.random(30)
    v = rng.random(30)
    assert_allclose(copula_cdf(P, basis, u, v), u * v, atol=1e-12)
    assert_allclose(copula_pdf(P, basis, u, v), 1.0, atol=1e-12)


def test_indicator_cdf_interpolates_partial_sums(rng):
    m = 5
    basis = PartitionBasis(m, "indicator")
    P = random_interior(m, rng)
    grid = np.arange(m + 1) / m
    A = cdf_outer(P, basis, grid, grid)
    cumulative = np.zeros((m + 1, m + 1))
    cumulative[1:, 1:] = P.entries.cumsum(axis=0).cumsum(axis=1) / m
    assert_allclose(A, cumulative, atol=1e-12)


@pytest.mark.parametrize("flavor", ["indicator", "bernstein"])
def test_family_member_is_grid_valid(flavor, rng):
    P = random_interior(6, rng)
    basis = PartitionBasis(6, flavor)
    CopulaGrid.from_function(lambda u, v: copula_cdf(P, basis, u, v), 60).validate()


def test_indicator_density_is_cellwise_slope(rng):
    m = 4
    basis = PartitionBasis(m, "indicator")
    P = random_interior(m, rng)
    # second difference of the CDF over a rectangle inside cell (2, 3)
    u0, u1 = 0.30, 0.45
    v0, v1 = 0.55, 0.70
    mass = (
        copula_cdf(P, basis, u1, v1)
        - copula_cdf(P, basis, u0, v1)
        - copula_cdf(P, basis, u1, v0)
        + copula_cdf(P, basis, u0, v0)
    )
    dens = copula_pdf(P, basis, 0.4, 0.6)
    assert_allclose(mass, dens * (u1 - u0) * (v1 - v0), rtol=1e-10)


def test_scalar_and_array_shapes(rng):
    P = random_interior(3, rng)
    basis = PartitionBasis(3, "bernstein")
    assert isinstance(copula_cdf(P, basis, 0.3, 0.7), float)
    out = copula_cdf(P, basis, np.linspace(0, 1, 7)[:, None], np.linspace(0, 1, 5)[None, :])
    assert out.shape == (7, 5)
    assert_allclose(
        out, cdf_outer(P, basis, np.linspace(0, 1, 7), np.linspace(0, 1, 5)), atol=1e-14
    )


def test_discretize_independence_gives_center():
    P = discretize(lambda u, v: u * v, 4)
    assert_allclose(P.entries, 0.25, atol=1e-14)


def test_discretize_frechet_bounds():
    upper = discretize(np.minimum, 5)
    assert_allclose(upper.entries, np.eye(5), atol=1e-14)
    lower = discretize(lambda u, v: np.maximum(u + v - 1.0, 0.0), 5)
    assert_allclose(lower.entries, np.eye(5)[::-1], atol=1e-14)


def test_discretize_matches_target_on_grid():
    C = ReferenceCopula("gaussian", 0.5).cdf
    m = 5
    P = discretize(C, m)
    basis = PartitionBasis(m, "indicator")
    grid = np.arange(m + 1) / m
    A = cdf_outer(P, basis, grid, grid)
    assert_allclose(A, C(grid[:, None], grid[None, :]), atol=1e-9)


def test_discretize_rejects_non_2_increasing():
    def not_a_copula(u, v):
        return u * v + 0.2 * np.sin(np.pi * u) * np.sin(np.pi * v)

    with pytest.raises(NotACopulaError):
        discretize(not_a_copula, 4)


def test_approximation_error_bounds_single_case():
    C = ReferenceCopula("gaussian", 0.5).cdf
    m = 4
    assert approximation_error(C, m, PartitionBasis(m, "indicator")) <= 2.0 / m
    assert approximation_error(C, m, PartitionBasis(m, "bernstein")) <= 1.0 / math.sqrt(m)


def test_approximation_error_requires_fine_grid():
    with pytest.raises(ValueError):
        approximation_error(lambda u, v: u * v, 16, PartitionBasis(16), resolution=100)


def test_grid_validate_flags_margin_and_increase_violations():
    CopulaGrid.from_function(lambda u, v: u * v, 50).validate()
    with pytest.raises(NotACopulaError):
        CopulaGrid.from_function(lambda u, v: u * v + 0.01, 50).validate()
    with pytest.raises(NotACopulaError):
        CopulaGrid.from_function(
            lambda u, v: u * v + 0.2 * np.sin(np.pi * u) * np.sin(np.pi * v), 50
        ).validate()


def test_grid_csv_round_trip():
    grid = CopulaGrid.from_function(lambda u, v: u * v, 10)
    buf = io.StringIO()
    grid.write_csv(buf)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "u,v,value"
    assert len(lines) == 1 + 11 * 11
    u, v, val = (float(part) for part in lines[37].split(","))
    assert val == pytest.approx(u * v, abs=1e-16)


@pytest.mark.parametrize("flavor", ["indicator", "bernstein"])
def test_pdf_normalization(flavor, rng):
    P = random_interior(4, rng)
    total = pdf_normalization(P, PartitionBasis(4, flavor))
    assert total == pytest.approx(1.0, abs=1e-10)
