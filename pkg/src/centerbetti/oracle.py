"""Fourier-symbol ground truth for G = Z^r and G = U x Z^r (U finite).

A matrix A over G becomes a matrix-valued trigonometric polynomial
theta -> A(theta) of size m = |U| d, where the U part is written in the
regular representation of U.  Traces on G are averages over the torus:

    tr(f(A)) = (1/|U|) (1/N^r) sum_theta tr f(A(theta))     (grid of N^r points).

Two grids are used.  Offset 0 samples theta = 2 pi j / N, which are exactly
the characters of Z/N; the oracle then reproduces quotient stages.  Offset
1/2 (midpoint rule) is used for limit values, since it never lands on
isolated zeros of the symbol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .approximation import split_finite_free
from .groups import GroupElement, conjugacy_class
from .ring import RingMatrix, kappa

MIDPOINT = 0.5


@dataclass(frozen=True, eq=False)
class SymbolFunction:
    """A(theta) = sum_z e^{-i z.theta} B_z with m x m blocks B_z."""

    rank: int
    m: int
    u_order: int
    d: int
    frequencies: tuple
    blocks: np.ndarray
    u_elements: tuple
    kappa: float

    def grid(self, N: int, offset: float = MIDPOINT) -> np.ndarray:
        """All grid points theta (shape (N^r, r))."""
        pts = (np.arange(N) + offset) * (2 * np.pi / N)
        if self.rank == 0:
            return np.zeros((1, 0))
        mesh = np.meshgrid(*([pts] * self.rank), indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=-1)

    def evaluate(self, thetas: np.ndarray) -> np.ndarray:
        """A(theta) for every row of ``thetas`` (shape (P, m, m))."""
        freqs = np.array(self.frequencies, dtype=float).reshape(len(self.frequencies), self.rank)
        phases = np.exp(-1j * thetas @ freqs.T) if self.rank else np.ones((len(thetas), len(freqs)))
        return np.einsum("pf,fab->pab", phases, self.blocks)


def symbol(A: RingMatrix) -> SymbolFunction:
    split = split_finite_free(A.group)
    U = split.U
    us = tuple(U.elements_nf())
    uidx = {u: i for i, u in enumerate(us)}
    nu, d = len(us), A.d
    m = nu * d
    blocks: dict[tuple, np.ndarray] = {}
    for k in range(d):
        for l in range(d):
            for s, c in A.entries[k][l].terms.items():
                su, z = split.split(s)
                B = blocks.setdefault(tuple(z), np.zeros((m, m), dtype=np.complex128))
                # regular representation of U: entry (u, v) carries the coefficient of u v^-1
                for v in us:
                    u = U.mul_nf(su, v)
                    B[uidx[u] * d + k, uidx[v] * d + l] += complex(c)
    if not blocks:
        blocks[(0,) * split.rank] = np.zeros((m, m), dtype=np.complex128)
    freqs = tuple(sorted(blocks))
    return SymbolFunction(split.rank, m, nu, d, freqs, np.stack([blocks[f] for f in freqs]), us,
                          kappa(A).kappa)


def _tau(kap: float) -> float:
    return max(1e-10 * kap, 1e-12)


def _chunks(sym: SymbolFunction, N: int, offset: float, vectors: bool, chunk: int = 1 << 14):
    thetas = sym.grid(N, offset)
    for start in range(0, len(thetas), chunk):
        th = thetas[start:start + chunk]
        mats = sym.evaluate(th)
        if vectors:
            w, V = np.linalg.eigh(mats)
            yield th, w, V
        else:
            yield th, np.linalg.eigvalsh(mats), None


def grid_eigenvalues(A: RingMatrix, N: int, offset: float = 0.0) -> np.ndarray:
    """Sorted multiset of eigenvalues of A(theta) over the grid."""
    sym = symbol(A)
    return np.sort(np.concatenate([w.ravel() for _, w, _ in _chunks(sym, N, offset, False)]))


@dataclass(frozen=True)
class OracleEstimate:
    value: complex | float
    N: int
    coarse_value: complex | float
    error_estimate: float
    flagged: bool
    note: str = ""

    def __float__(self):
        return float(np.real(self.value))


def _density_at(sym: SymbolFunction, lam: float, N: int, offset: float, tau: float) -> tuple[float, float]:
    count = 0
    closest = math.inf
    for _, w, _ in _chunks(sym, N, offset, False):
        count += int(np.sum(w <= lam + tau))
        above = w[w > lam + tau]
        if above.size:
            closest = min(closest, float(above.min()) - lam)
    return count / (sym.u_order * N ** sym.rank), closest


def _flag_gap(sym: SymbolFunction, gap: float) -> bool:
    return gap < 1e-6 * max(sym.kappa, 1.0)


def oracle_density(A: RingMatrix, lam: float, N: int = 4096, offset: float = MIDPOINT) -> OracleEstimate:
    """(1/|U|)(1/N^r) sum_theta #{eigenvalues of A(theta) <= lam}, with N vs N/2 comparison."""
    sym = symbol(A)
    tau = _tau(sym.kappa)
    val, gap = _density_at(sym, lam, N, offset, tau)
    coarse, _ = _density_at(sym, lam, max(N // 2, 1), offset, tau)
    flagged = _flag_gap(sym, gap)
    note = "spectrum accumulates near lambda" if flagged else ""
    return OracleEstimate(val, N, coarse, abs(val - coarse), flagged, note)


def _kernel_coefficient(sym: SymbolFunction, A: RingMatrix, g: GroupElement, N: int, offset: float,
                        tau: float) -> tuple[complex, float]:
    split = split_finite_free(A.group)
    info = conjugacy_class(g)
    if not info.is_finite:
        raise ValueError(f"class of {g} is {info.status.value}")
    U = split.U
    uidx = {u: i for i, u in enumerate(sym.u_elements)}
    members = [split.split(h) for h in info.elements]
    e_u = uidx[U.identity_nf()]
    d = sym.d
    total = 0j
    gap = math.inf
    for th, w, V in _chunks(sym, N, offset, True):
        mask = w <= tau
        above = np.where(mask, np.inf, w)
        gap = min(gap, float(above.min()))
        # kernel projections P(theta) = V diag(mask) V^*
        Vm = V * mask[:, None, :]
        for hu, hz in members:
            phase = np.exp(1j * (th @ np.array(hz, dtype=float))) if sym.rank else np.ones(len(th))
            acc = np.zeros(len(th), dtype=np.complex128)
            for k in range(d):
                row = uidx[hu] * d + k
                col = e_u * d + k
                acc += np.einsum("pj,pj->p", Vm[:, row, :], V[:, col, :].conj())
            total += np.sum(phase * acc)
    value = total / (N ** sym.rank) / len(members)
    return value, gap


def oracle_kernel_coefficient(A: RingMatrix, g: GroupElement, N: int = 4096,
                              offset: float = MIDPOINT) -> OracleEstimate:
    """(1/|<g>|) sum_{h in <g>} coefficient of h in the kernel projection, by quadrature."""
    sym = symbol(A)
    tau = _tau(sym.kappa)
    val, gap = _kernel_coefficient(sym, A, g, N, offset, tau)
    coarse, _ = _kernel_coefficient(sym, A, g, max(N // 2, 1), offset, tau)
    flagged = _flag_gap(sym, gap)
    note = "kernel not uniformly separated from the rest of the spectrum" if flagged else ""
    return OracleEstimate(complex(val), N, complex(coarse), float(abs(val - coarse)), flagged, note)


def _lndet(sym: SymbolFunction, N: int, offset: float, tau: float) -> tuple[float, float]:
    total = 0.0
    zero_count = 0
    for _, w, _ in _chunks(sym, N, offset, False):
        pos = w > tau
        total += float(np.sum(np.log(w[pos])))
        zero_count += int(np.sum(~pos))
    scale = sym.u_order * N ** sym.rank
    return total / scale, zero_count / scale


def oracle_lndet(A: RingMatrix, N: int = 4096, offset: float = MIDPOINT) -> OracleEstimate:
    """(1/|U|)(1/N^r) sum_theta sum ln(eigenvalues > tau); excluded kernel mass in the note."""
    sym = symbol(A)
    tau = _tau(sym.kappa)
    val, zero_mass = _lndet(sym, N, offset, tau)
    coarse, _ = _lndet(sym, max(N // 2, 1), offset, tau)
    flagged = zero_mass > 0
    note = f"excluded kernel mass {zero_mass:.6g}" if flagged else ""
    return OracleEstimate(float(val), N, float(coarse), float(abs(val - coarse)), flagged, note)


def oracle_polynomial_trace(A: RingMatrix, poly, N: int = 4096, offset: float = MIDPOINT) -> float:
    """(1/|U|)(1/N^r) sum_theta sum_j poly(eigenvalue_j), for a vectorized callable ``poly``."""
    sym = symbol(A)
    total = 0.0
    for _, w, _ in _chunks(sym, N, offset, False):
        total += float(np.sum(poly(w.ravel())))
    return total / (sym.u_order * N ** sym.rank)


def oracle_coefficient_table(A: RingMatrix, words, N: int = 4096) -> dict:
    return {str(w): oracle_kernel_coefficient(A, A.group.parse(w) if isinstance(w, str) else w, N)
            for w in words}
