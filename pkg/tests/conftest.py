"""Shared builders and independent brute-force references for the test suite."""

from __future__ import annotations

import random
import sys

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import settings

from centerbetti import RingElement, RingMatrix, cyclic, direct_product, free_abelian, symmetric3
from centerbetti.ring import positive_from_witness

def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.LINES):
        terminalreporter.write_line(mod.LINES[k])


settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def Z():
    return free_abelian(["u"])


@pytest.fixture
def Z2xZ():
    return direct_product(cyclic(2, "t"), free_abelian(["u"]))


@pytest.fixture
def S3():
    return symmetric3()


def laplacian(G):
    return RingMatrix.parse(G, [[[["e", "2"], ["u", "-1"], ["u^-1", "-1"]]]])


def sector(G):
    """(1 - t)(2 - u - u^-1) over Z/2 x Z."""
    return RingMatrix.parse(G, [[[["e", "2"], ["u", "-1"], ["u^-1", "-1"], ["t", "-2"],
                                  ["t u", "1"], ["t u^-1", "1"]]]])


def det_family(G):
    return RingMatrix.parse(G, [[[["e", "3"], ["u", "1"], ["u^-1", "1"]]]])


def cyclotomic4(G):
    """B*B for B = 2 + i u + u^-1 + t over Z/2 x Z, with i = zeta_4."""
    B = RingMatrix.parse(G, [[[["e", "2"], ["u", "z^1@4"], ["u^-1", "1"], ["t", "1"]]]])
    return positive_from_witness(B)


# -- brute-force references (plain numpy/scipy, no package code) ---------------


def circulant_symmetric(n: int, coeffs: dict[int, float]) -> np.ndarray:
    col = np.zeros(n)
    for k, c in coeffs.items():
        col[k % n] += c
    return sla.circulant(col)


def kernel_projection(M: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    N = sla.null_space(M, rcond=tol)
    return N @ N.conj().T


def sector_matrix(n: int) -> np.ndarray:
    """(1 - t)(2 - u - u^-1) on l2(Z/2 x Z/n), site (t^a, u^b) -> index a*n + b."""
    L = circulant_symmetric(n, {0: 2, 1: -1, -1: -1})
    T = np.array([[1.0, -1.0], [-1.0, 1.0]])
    return np.kron(T, L)


# -- random witnesses ---------------------------------------------------------


def _words(G, radius: int):
    gens = G.generators
    if G.is_finite:
        return [G.format_nf(x) for x in G.elements_nf()]
    if len(gens) == 1:
        return ["e"] + [f"{gens[0]}^{k}" for k in range(-radius, radius + 1) if k]
    fin, free = gens[0], gens[1]
    out = []
    for a in (0, 1):
        for k in range(-radius, radius + 1):
            parts = ([fin] if a else []) + ([f"{free}^{k}"] if k else [])
            out.append(" ".join(parts) or "e")
    return out


def random_witness(G, rng: random.Random, d: int = 1, radius: int = 1, terms: int = 3, coeff: int = 2):
    words = _words(G, radius)
    rows = []
    for _ in range(d):
        row = []
        for _ in range(d):
            pairs = [(rng.choice(words), str(rng.randint(-coeff, coeff))) for _ in range(rng.randint(1, terms))]
            row.append(RingElement.parse(G, pairs))
        rows.append(row)
    return RingMatrix.from_rows(G, rows)


def random_positive(G, rng: random.Random, d: int = 1, radius: int = 1):
    return positive_from_witness(random_witness(G, rng, d, radius))
