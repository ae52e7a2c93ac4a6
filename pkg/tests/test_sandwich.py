import numpy as np
import pytest
from hypothesis import given, strategies as st

from centerbetti import build_inverse_limit_stage, free_abelian, reduction_map, sandwich_diagnostic
from centerbetti.sandwich import (SandwichError, build_sandwich_polynomial, density_envelope, tail_envelope)
from centerbetti.spectral import spectral_data
from conftest import laplacian

Z = free_abelian(["u"])


@given(st.floats(0, 6), st.integers(1, 40))
def test_polynomial_lies_between_steps(lam, n):
    kap = 6.0
    P = build_sandwich_polynomial(lam, n, kap)
    assert P.certified
    x = np.linspace(0, kap, 20001)
    v = P(x)
    lower = (x <= lam).astype(float)
    upper = (x <= lam + 1 / n) + 1 / n
    assert np.all(v >= lower - 1e-12)
    assert np.all(v <= upper + 1e-12)


def test_bad_arguments():
    with pytest.raises(SandwichError):
        build_sandwich_polynomial(7.0, 4, 6.0)
    with pytest.raises(SandwichError):
        build_sandwich_polynomial(1.0, 0, 6.0)


def test_laplacian_chain_holds():
    A = laplacian(Z)
    stages = [build_inverse_limit_stage(A, reduction_map(Z, n), i) for i, n in enumerate([4, 16, 64])]
    rep = sandwich_diagnostic(A, stages, 0.5, 16, oracle_grid=2048)
    assert rep.passed
    assert rep.limit_row is not None and rep.limit_row.passed


def test_tail_envelope():
    env = tail_envelope([5.0, 1.0, 0.3, 0.2, 0.25])
    assert (env.limsup, env.liminf, env.tail) == (0.3, 0.2, 3)
    assert env.flagged
    assert not tail_envelope([1.0, 1.0, 1.0]).flagged


def test_density_envelope_is_ordered():
    A = laplacian(Z)
    sds = [spectral_data(build_inverse_limit_stage(A, reduction_map(Z, n))) for n in (8, 16, 32, 64)]
    env = density_envelope(sds, 1.0, 4)
    assert env.ordered
