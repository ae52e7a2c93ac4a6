import math
import random

import numpy as np
import pytest
import sympy
from hypothesis import given, strategies as st

from centerbetti import (QuotientMap, RingMatrix, build_inverse_limit_stage, cyclic, direct_product, free_abelian,
                         reduction_map, symmetric3)
from centerbetti.ring import positive_from_witness
from centerbetti.sofic import (SoficError, build_sofic_stage, corrupt_graph, det_star, format_graph,
                               galois_sum_check, parse_graph, sofic_kernel, sofic_lndet_limit)
from centerbetti.spectral import SpectralError
from conftest import det_family, laplacian, random_positive

Z = free_abelian(["u"])
G = direct_product(cyclic(2, "t"), free_abelian(["u"]))


@pytest.mark.parametrize("n", [3, 8, 33])
def test_cycle_kernel_is_the_circulant(n):
    A = laplacian(Z)
    K = sofic_kernel(A, build_sofic_stage(Z, "cycle", n))
    H = build_inverse_limit_stage(A, reduction_map(Z, n))
    assert np.array_equal(K.matrix, H.matrix)


@pytest.mark.parametrize("n", [3, 10, 40])
def test_cycle_laplacian_det_star(n):
    K = sofic_kernel(laplacian(Z), build_sofic_stage(Z, "cycle", n), symmetric=True)
    D = det_star(K)
    assert D.certificate == n * n and D.certificate_kind == "integer"
    assert D.rank == n - 1
    assert D.log_value == pytest.approx(2 * math.log(n))


def test_det_star_small_matrices():
    assert det_star([[2, 2], [2, 2]]).certificate == 4
    assert det_star([[1, 0], [0, 1]]).certificate == 1
    with pytest.raises(SpectralError):
        det_star([[0, 1], [0, 0]])
    with pytest.raises(SpectralError):
        det_star([[-1, 0], [0, 1]])


@given(st.integers(0, 10 ** 6))
def test_det_star_matches_sympy(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 7))
    B = rng.integers(-2, 3, size=(int(rng.integers(1, 7)), n))
    M = (B.T @ B).tolist()
    x = sympy.Symbol("x")
    coeffs = sympy.Matrix(M).charpoly(x).all_coeffs()[::-1]
    ref = next(abs(int(c)) for c in coeffs if c != 0)
    assert det_star(M).certificate == ref


def test_ball_certificate():
    assert len(build_sofic_stage(Z, "cycle", 5, radius=2).good) == 5
    assert len(build_sofic_stage(Z, "cycle", 4, radius=2).good) == 0
    g = build_sofic_stage(G, "torus", 6)
    assert g.size == 12 and g.delta == 0


def test_corrupted_torus():
    g = corrupt_graph(build_sofic_stage(G, "torus", 16), swaps=3, seed=1)
    assert 0 < g.delta < 0.5
    A = random_positive(G, random.Random(2))
    K = sofic_kernel(A, g, symmetric=True)
    M = K.matrix
    bad = np.setdiff1d(np.arange(g.size), g.good)
    assert len(bad)
    assert np.allclose(M, M.conj().T)
    assert not M[bad].any() and not M[:, bad].any()
    assert np.linalg.eigvalsh(M)[0] >= -1e-9


def test_file_format_roundtrip():
    g = build_sofic_stage(Z, "cycle", 7)
    h = parse_graph(Z, format_graph(g))
    assert np.array_equal(g.succ, h.succ) and np.array_equal(g.good, h.good)
    with pytest.raises(SoficError):
        parse_graph(Z, "vertices 2\nedge 0 u 5\n")
    with pytest.raises(SoficError):
        parse_graph(Z, "edge 0 u 1\n")


def test_finite_cayley_family_matches_group_stage():
    S = symmetric3()
    A = positive_from_witness(RingMatrix.parse(S, [[[["e", "1"], ["r", "1"], ["s", "-1"]]]]))
    K = sofic_kernel(A, build_sofic_stage(S, "cayley", radius=2))
    H = build_inverse_limit_stage(A, QuotientMap(S, S, (S.generator_nf(0), S.generator_nf(1))))
    assert np.allclose(np.sort(np.linalg.eigvalsh(K.matrix)), np.sort(np.linalg.eigvalsh(H.matrix)), atol=1e-9)


def test_mahler_measure_along_cycles():
    A = det_family(Z)
    rep = sofic_lndet_limit(A, [build_sofic_stage(Z, "cycle", n) for n in (64, 256)], oracle_grid=4096)
    assert all(r.nonnegative for r in rep.rows)
    assert abs(rep.values[-1] - math.log((3 + math.sqrt(5)) / 2)) < 1e-9


def test_galois_sum_for_conductor_four():
    B = RingMatrix.parse(Z, [[[["e", "2"], ["u", "z^1@4"]]]])
    A = positive_from_witness(B)
    chk = galois_sum_check(A, build_sofic_stage(Z, "cycle", 12))
    assert chk.passed
    assert chk.certificate_log == pytest.approx(chk.total, abs=1e-9)


def test_wrong_group_rejected():
    with pytest.raises(SoficError):
        sofic_kernel(laplacian(Z), build_sofic_stage(G, "torus", 5))
