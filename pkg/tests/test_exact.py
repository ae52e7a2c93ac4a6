from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, strategies as st

from centerbetti import exact
from centerbetti.cyclotomic import Cyclotomic

entries = st.integers(-3, 3)


def sparse(M):
    return [{j: Fraction(v) for j, v in enumerate(row) if v} for row in M]


@st.composite
def int_matrices(draw, max_n=6):
    r = draw(st.integers(1, max_n))
    c = draw(st.integers(1, max_n))
    return [[draw(entries) for _ in range(c)] for _ in range(r)]


@st.composite
def int_symmetric(draw, max_n=7):
    n = draw(st.integers(1, max_n))
    B = [[draw(entries) for _ in range(n)] for _ in range(n)]
    return [[sum(B[k][i] * B[k][j] for k in range(n)) for j in range(n)] for i in range(n)]


@given(int_matrices())
def test_rank_and_nullspace_match_sympy(M):
    ncols = len(M[0])
    S = sympy.Matrix(M)
    assert exact.rank(sparse(M)) == S.rank()
    basis = exact.nullspace(sparse(M), ncols)
    assert len(basis) == ncols - S.rank()
    for v in basis:
        vec = [v.get(j, 0) for j in range(ncols)]
        assert all(sum(row[j] * vec[j] for j in range(ncols)) == 0 for row in M)


@given(int_symmetric())
def test_kernel_projection_matches_float_projection(M):
    n = len(M)
    cols = exact.kernel_projection_columns(sparse(M), n, range(n))
    P = np.array([[float(cols[s].get(i, 0)) for s in range(n)] for i in range(n)])
    N = sympy.Matrix(M).nullspace()
    if not N:
        assert not P.any()
        return
    B = np.array(sympy.Matrix.hstack(*N).evalf(), dtype=float)
    Q, _ = np.linalg.qr(B)
    assert np.allclose(P, Q @ Q.T, atol=1e-12)


@given(int_symmetric())
def test_charpoly_matches_sympy(M):
    ref = sympy.Matrix(M).charpoly().all_coeffs()[::-1]
    assert exact.charpoly_integer(M, psd=True) == [int(c) for c in ref]
    assert exact.charpoly_integer(M) == [int(c) for c in ref]


@given(int_matrices(max_n=5).filter(lambda M: len(M) == len(M[0])))
def test_charpoly_general_matches_sympy(M):
    ref = sympy.Matrix(M).charpoly().all_coeffs()[::-1]
    assert exact.charpoly_integer(M) == [int(c) for c in ref]


def test_charpoly_large_entries():
    rng = np.random.default_rng(3)
    B = rng.integers(-9, 10, size=(14, 14))
    M = (B.T @ B).tolist()
    ref = sympy.Matrix(M).charpoly().all_coeffs()[::-1]
    assert exact.charpoly_integer(M, psd=True) == [int(c) for c in ref]


def test_lowest_nonzero():
    assert exact.lowest_nonzero([0, 0, 5, 1]) == (2, 5)
    with pytest.raises(ValueError):
        exact.lowest_nonzero([0, 0])


def test_realified_charpoly_is_product_over_conjugates():
    i = Cyclotomic.root_of_unity(4)
    rows = [{0: Fraction(2), 1: 1 + i}, {0: 1 - i, 1: Fraction(3)}]
    R = exact.realify_integer(rows, 2, 4)
    x = sympy.Symbol("x")
    I = sympy.I
    conj = [sympy.Matrix([[2, 1 + s * I], [1 - s * I, 3]]) for s in (1, -1)]
    ref = sympy.expand(conj[0].charpoly(x).as_expr() * conj[1].charpoly(x).as_expr())
    got = sum(c * x ** k for k, c in enumerate(exact.charpoly_integer(R)))
    assert sympy.expand(ref - got) == 0


def test_solve_dense():
    M = [[Fraction(2), Fraction(1)], [Fraction(1), Fraction(3)]]
    assert exact.solve_dense(M, [Fraction(3), Fraction(5)]) == [Fraction(4, 5), Fraction(7, 5)]
