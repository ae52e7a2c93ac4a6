import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from centerbetti import (DirectLimit, DirectLimitStage, FolnerSet, InverseLimit, QuotientMap, RingMatrix,
                         build_direct_limit_stage, build_folner_compression, build_inverse_limit_stage,
                         conjugacy_class, cyclic, direct_product, free_abelian, kernel_dim_exact,
                         kernel_fourier_coefficient_exact, neighborhood, reduction_map, symmetric3,
                         trace_convergence_check)
from centerbetti.approximation import SchemeError, defect, is_nested, boxes, split_finite_free
from conftest import circulant_symmetric, laplacian, random_positive, sector, sector_matrix

Z = free_abelian(["u"])
G = direct_product(cyclic(2, "t"), free_abelian(["u"]))


@pytest.mark.parametrize("n", [2, 3, 8, 31])
def test_quotient_stage_is_circulant(n):
    H = build_inverse_limit_stage(laplacian(Z), reduction_map(Z, n))
    assert np.array_equal(H.matrix, circulant_symmetric(n, {0: 2, 1: -1, -1: -1}))


@pytest.mark.parametrize("n", [3, 6, 10])
def test_sector_stage_spectrum(n):
    H = build_inverse_limit_stage(sector(G), reduction_map(G, n))
    assert np.allclose(np.linalg.eigvalsh(H.matrix), np.linalg.eigvalsh(sector_matrix(n)))


@given(st.integers(0, 10 ** 6), st.integers(2, 7))
def test_stages_are_hermitian_and_bounded(seed, n):
    A = random_positive(G, random.Random(seed), d=2)
    H = build_inverse_limit_stage(A, reduction_map(G, n))
    M = H.matrix
    assert np.allclose(M, M.conj().T, atol=1e-12)
    assert np.max(np.abs(np.linalg.eigvalsh(M))) <= H.kappa_bound + 1e-9


@pytest.mark.parametrize("n", [2, 5, 9])
def test_box_boundary(n):
    fs = FolnerSet.box(n)
    # the two end points and their outside neighbours
    assert neighborhood(fs, 1) == frozenset({(-1,), (0,), (n - 1,), (n,)})
    assert defect(fs, 1) == 4 / n


def test_boxes_are_nested():
    assert is_nested(boxes([2, 4, 8]))
    assert not is_nested([FolnerSet.box(3, start=5), FolnerSet.box(4)])
    with pytest.raises(SchemeError):
        FolnerSet(((0,), (0,)))


def test_compression_of_sector():
    n = 8
    H = build_folner_compression(sector(G), FolnerSet.box(n))
    assert H.dim == 2 * n
    # (1 - t) tensor the truncated path Laplacian: kernel is the t-symmetric half
    assert kernel_dim_exact(H) == Fraction(1, 2)
    t = conjugacy_class(G.parse("t"))
    assert kernel_fourier_coefficient_exact(H, t) == Fraction(1, 2)


def test_split_rejects_free_groups():
    from centerbetti import free_group
    with pytest.raises(SchemeError):
        split_finite_free(free_group(["a", "b"]))


def test_direct_limit_of_constant_system():
    S = symmetric3()
    ident = QuotientMap(S, S, tuple(S.generator_nf(i) for i in range(S.rank)))
    scheme = DirectLimit((DirectLimitStage(S, ident, ident), DirectLimitStage(S, ident)))
    A = RingMatrix.parse(S, [[[["e", "2"], ["r", "-1"], ["r^2", "-1"]]]])
    H = build_direct_limit_stage(A, scheme, 1)
    assert H.dim == 6
    # 2 - r - r^-1 kills the functions constant on cosets of <r>
    assert kernel_dim_exact(H) == Fraction(1, 3)
    cls = conjugacy_class(S.parse("r"))
    assert kernel_fourier_coefficient_exact(H, cls) == Fraction(1, 3)


def test_inverse_limit_rejects_non_quotients():
    with pytest.raises(SchemeError):
        InverseLimit((reduction_map(Z, 4), reduction_map(G, 4)))


@pytest.mark.parametrize("group,A", [(Z, laplacian(Z)), (G, sector(G))])
def test_telescope_bound(group, A):
    for n in range(1, 5):
        for size in (4, 9):
            chk = trace_convergence_check(A, FolnerSet.box(size), n)
            assert chk.passed, chk
    if group is G:
        t = conjugacy_class(G.parse("t"))
        chk = trace_convergence_check(A, FolnerSet.box(6), 3, t, "im")
        assert chk.passed
