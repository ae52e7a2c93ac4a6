import math

import numpy as np
import pytest

from centerbetti import (RingMatrix, build_inverse_limit_stage, cyclic, direct_product, free_abelian,
                         oracle_density, oracle_kernel_coefficient, oracle_lndet, reduction_map)
from centerbetti.oracle import grid_eigenvalues, oracle_coefficient_table
from conftest import det_family, laplacian, sector

Z = free_abelian(["u"])
G = direct_product(cyclic(2, "t"), free_abelian(["u"]))


def test_sector_coefficient_table():
    table = oracle_coefficient_table(sector(G), ["e", "t"], 1024)
    assert table["e"].value == pytest.approx(0.5, abs=1e-9)
    assert table["t"].value == pytest.approx(0.5, abs=1e-9)


def test_single_factor_coefficients():
    A = RingMatrix.parse(G, [[[["e", "1"], ["t", "-1"]]]])
    assert oracle_kernel_coefficient(A, G.parse("t"), 256).value == pytest.approx(0.5, abs=1e-12)
    assert oracle_density(A, 0.0, 256).value == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("lam", [0.25, 1.0, 2.0, 3.5])
def test_laplacian_density_closed_form(lam):
    # eigenvalues 2 - 2cos(x) <= lam  iff  |x| <= 2 arcsin(sqrt(lam)/2)
    ref = 2 / math.pi * math.asin(math.sqrt(lam) / 2)
    assert oracle_density(laplacian(Z), lam, 1 << 14).value == pytest.approx(ref, abs=1e-3)


def test_laplacian_has_trivial_kernel():
    A = laplacian(Z)
    assert oracle_density(A, 0.0, 4096).value == 0
    assert oracle_kernel_coefficient(A, Z.parse("u"), 4096).value == pytest.approx(0, abs=1e-12)


def test_mahler_measure():
    est = oracle_lndet(det_family(Z), 4096)
    assert est.value == pytest.approx(math.log((3 + math.sqrt(5)) / 2), abs=1e-12)
    assert not est.flagged


@pytest.mark.parametrize("n", [5, 16])
def test_unshifted_grid_matches_quotient_stage(n):
    A = sector(G)
    H = build_inverse_limit_stage(A, reduction_map(G, n))
    ref = np.sort(np.linalg.eigvalsh(H.matrix))
    assert np.allclose(np.sort(np.ravel(grid_eigenvalues(A, n, 0.0))), ref, atol=1e-12)
