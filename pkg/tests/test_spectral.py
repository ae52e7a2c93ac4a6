import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from centerbetti import (FolnerSet, build_folner_compression, build_inverse_limit_stage, conjugacy_class, cyclic,
                         density, direct_product, eigh, free_abelian, fuglede_kadison, kernel_dim_exact,
                         kernel_fourier_coefficient, kernel_fourier_coefficient_exact, partial_integration_check,
                         reduction_map, spectral_data)
from centerbetti.spectral import (SpectralError, density_function, determinant_report, domination_violations,
                                  positivity_violations, zero_threshold)
from conftest import kernel_projection, laplacian, random_positive, sector, sector_matrix

Z = free_abelian(["u"])
G = direct_product(cyclic(2, "t"), free_abelian(["u"]))
TRACKED = ["t", "u", "t u"]


def tracked(words):
    return [(w, conjugacy_class(G.parse(w))) for w in words]


@pytest.mark.parametrize("n", [2, 3, 4, 7, 16])
def test_sector_kernel_data(n):
    H = build_inverse_limit_stage(sector(G), reduction_map(G, n))
    t = conjugacy_class(G.parse("t"))
    assert kernel_dim_exact(H) == Fraction(n + 1, 2 * n)
    assert kernel_fourier_coefficient_exact(H, t) == Fraction(n - 1, 2 * n)
    # brute force: projection onto ker of (1 - t) kron circulant, sites (t^a, u^b) -> a*n + b
    P = kernel_projection(sector_matrix(n))
    sd = spectral_data(H, tracked(["t"]))
    assert density(sd) == pytest.approx(np.trace(P) / (2 * n), abs=1e-12)
    assert kernel_fourier_coefficient(sd, "t") == pytest.approx(np.mean([P[n + b, b] for b in range(n)]), abs=1e-12)


@pytest.mark.parametrize("n", [3, 8, 20])
def test_laplacian_lndet_matrix_tree(n):
    # det* of the cycle Laplacian is n^2 (n spanning trees times n)
    H = build_inverse_limit_stage(laplacian(Z), reduction_map(Z, n))
    sd = spectral_data(H)
    assert fuglede_kadison(sd) == pytest.approx(2 * math.log(n) / n, rel=1e-10)


@given(st.integers(0, 10 ** 6), st.integers(2, 6))
def test_random_positive_stage_invariants(seed, n):
    A = random_positive(G, random.Random(seed), d=2)
    H = build_inverse_limit_stage(A, reduction_map(G, n))
    sd = spectral_data(H, tracked(TRACKED))
    assert np.min(sd.eigenvalues) >= -sd.tau
    for g in TRACKED:
        assert domination_violations(sd, g, 1e-9) == 0
        assert positivity_violations(sd, g, 1e-9) == 0
        for kind in ("re", "im"):
            assert sd.total_mass(kind, g) == pytest.approx(sd.total_mass(), abs=1e-9)
    F = density_function(sd)
    assert np.all(np.diff(F.values) >= -1e-12)
    assert F.values[-1] == pytest.approx(sd.d, abs=1e-9)
    pi = partial_integration_check(sd)
    assert pi.passed


@given(st.integers(0, 10 ** 6))
def test_exact_and_float_agree_on_compressions(seed):
    A = random_positive(G, random.Random(seed))
    H = build_folner_compression(A, FolnerSet.box(5))
    t = conjugacy_class(G.parse("t"))
    sd = spectral_data(H, [("t", t)])
    assert float(kernel_dim_exact(H)) == pytest.approx(density(sd), abs=1e-9)
    assert complex(kernel_fourier_coefficient_exact(H, t)) == pytest.approx(kernel_fourier_coefficient(sd, "t"),
                                                                              abs=1e-9)


def test_identity_class_has_no_deviated_determinant():
    H = build_inverse_limit_stage(sector(G), reduction_map(G, 4))
    sd = spectral_data(H, [("e", conjugacy_class(G.identity())), ("t", conjugacy_class(G.parse("t")))])
    rep = determinant_report(sd, None, sector(G))
    assert set(rep.lndet_dev_re) == {"t"}
    assert rep.checks()["lndet >= B0"]


def test_non_hermitian_rejected():
    with pytest.raises(SpectralError):
        eigh(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_zero_threshold():
    assert zero_threshold(6.0) == pytest.approx(6e-10)
    assert zero_threshold(1e-5) == 1e-12


def test_density_rejects_negative_lambda():
    sd = spectral_data(build_inverse_limit_stage(laplacian(Z), reduction_map(Z, 4)))
    with pytest.raises(SpectralError):
        density(sd, "standard", -0.5)
