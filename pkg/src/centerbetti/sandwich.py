"""Polynomials squeezed between spectral step functions.

For lam in [0, kappa] and n >= 1 we construct a polynomial P with

    chi_[0,lam](x) <= P(x) <= chi_[0,lam+1/n](x) + (1/n) chi_[0,kappa](x)   on [0, kappa],

so that, for every positive weight distribution on the spectrum,
F(lam) <= sum_j w_j P(lam_j) <= F(lam + 1/n) + d/n.

Recipe: a smoothed step f(x) = erfc((x - c)/s)/2 + 1/(2n) with c = lam + 1/(2n)
and width s chosen so that the step is within 1/(4n) of 0 and 1 outside
[lam, lam + 1/n]; f is interpolated at Chebyshev nodes (coefficients by DCT)
and the degree doubles from ceil(n kappa / max(lam, 1)) until the uniform
error on a 10x finer Chebyshev grid is below 1/(4n) and the two inequalities
hold on that grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import chebyshev
from scipy import fft, special

from .spectral import SpectralData, density, spectral_data


class SandwichError(ValueError):
    pass


@dataclass(frozen=True)
class SandwichPolynomial:
    lam: float
    n: int
    kappa: float
    degree: int
    coeffs: np.ndarray
    grid_error: float
    certified: bool

    def __call__(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, self.kappa)
        return chebyshev.chebval(2.0 * x / self.kappa - 1.0, self.coeffs)


def _target(lam: float, n: int):
    h = 1.0 / (2 * n)
    c = lam + h
    s = h / special.erfcinv(1.0 / (2 * n))

    def f(x):
        return 0.5 * special.erfc((x - c) / s) + h

    return f


def _cheb_coefficients(f, deg: int, kap: float) -> np.ndarray:
    M = deg + 1
    x = np.cos(np.pi * (np.arange(M) + 0.5) / M)
    c = fft.dct(f(kap * (x + 1) / 2), type=2) / M
    c[0] /= 2
    return c


def _values_on_fine_grid(coeffs: np.ndarray, M: int) -> tuple[np.ndarray, np.ndarray]:
    """Values at the M first-kind Chebyshev nodes via a zero-padded DCT-III."""
    padded = np.zeros(M)
    padded[:len(coeffs)] = coeffs
    padded[1:] /= 2
    vals = fft.dct(padded, type=3)
    x = np.cos(np.pi * (np.arange(M) + 0.5) / M)
    return x, vals


def build_sandwich_polynomial(lam: float, n: int, kap: float, max_degree: int = 1 << 16) -> SandwichPolynomial:
    if n < 1:
        raise SandwichError("n must be at least 1")
    if not 0 <= lam <= kap:
        raise SandwichError(f"lambda = {lam} outside [0, kappa = {kap}]")
    f = _target(lam, n)
    deg = max(1, math.ceil(n * kap / max(lam, 1.0)))
    tol = 1.0 / (4 * n)
    while True:
        coeffs = _cheb_coefficients(f, deg, kap)
        x, vals = _values_on_fine_grid(coeffs, 10 * (deg + 1))
        lamx = kap * (x + 1) / 2
        err = float(np.max(np.abs(vals - f(lamx))))
        lower = (lamx <= lam).astype(float)
        upper = (lamx <= lam + 1.0 / n).astype(float) + 1.0 / n
        ok = err < tol and bool(np.all(vals >= lower)) and bool(np.all(vals <= upper))
        if ok or deg >= max_degree:
            return SandwichPolynomial(lam, n, kap, deg, coeffs, err, ok)
        deg *= 2


@dataclass(frozen=True)
class SandwichRow:
    index: int
    F_lam: float
    trace_P: float
    upper: float

    @property
    def passed(self) -> bool:
        eps = 1e-12
        return self.F_lam <= self.trace_P + eps and self.trace_P <= self.upper + eps


@dataclass(frozen=True)
class SandwichReport:
    lam: float
    n: int
    kind: str
    g: str | None
    polynomial: SandwichPolynomial
    rows: list
    limit_trace: float | None = None
    limit_row: SandwichRow | None = None

    @property
    def trace_envelope(self) -> "TailEnvelope":
        return tail_envelope([r.trace_P for r in self.rows])

    @property
    def passed(self) -> bool:
        rows = list(self.rows) + ([self.limit_row] if self.limit_row is not None else [])
        return self.polynomial.certified and all(r.passed for r in rows)


def sandwich_row(sd: SpectralData, P: SandwichPolynomial, kind: str = "standard", g: str | None = None) -> SandwichRow:
    wts = np.real(sd.weights(kind, g))
    tr = float(np.sum(wts * P(sd.eigenvalues)))
    upper = density(sd, kind, P.lam + 1.0 / P.n, g) + 2.0 * sd.d / P.n
    return SandwichRow(sd.index, density(sd, kind, P.lam, g), tr, upper)


def sandwich_diagnostic(A, stages, lam: float, n: int, kind: str = "standard", g: str | None = None,
                        oracle_grid: int | None = None) -> SandwichReport:
    """Check F(lam) <= Tr_i P_n(A[i]) <= F(lam + 1/n) + 2d/n at every stage.

    ``stages`` holds FiniteRealizations or SpectralData.  With ``oracle_grid``
    the same chain is evaluated for A itself through the Fourier oracle.
    """
    from .ring import kappa
    kap = kappa(A).kappa
    P = build_sandwich_polynomial(lam, n, kap)
    rows = []
    for st in stages:
        sd = st if isinstance(st, SpectralData) else spectral_data(st, [g] if g else ())
        rows.append(sandwich_row(sd, P, kind, g))
    limit_trace = limit_row = None
    if oracle_grid and kind == "standard":
        from .oracle import oracle_density, oracle_polynomial_trace
        limit_trace = oracle_polynomial_trace(A, P, oracle_grid)
        lo = float(oracle_density(A, lam, oracle_grid).value)
        hi = float(oracle_density(A, lam + 1.0 / n, oracle_grid).value) + 2.0 * A.d / n
        limit_row = SandwichRow(-1, lo, limit_trace, hi)
    return SandwichReport(lam, n, kind, g, P, rows, limit_trace, limit_row)


@dataclass(frozen=True)
class TailEnvelope:
    """Largest and smallest value over the second half of a stage sequence."""

    limsup: float
    liminf: float
    tail: int
    tol: float

    @property
    def flagged(self) -> bool:
        return self.limsup - self.liminf > self.tol


def tail_envelope(values: Sequence[float], tol: float = 1e-6) -> TailEnvelope:
    vals = [float(v) for v in values]
    if not vals:
        return TailEnvelope(math.nan, math.nan, 0, tol)
    tail = vals[len(vals) // 2:]
    return TailEnvelope(max(tail), min(tail), len(tail), tol)


@dataclass(frozen=True)
class DensityEnvelope:
    """Stage estimates of the lower density at lam and the upper density at lam + 1/n."""

    lam: float
    n: int
    lower: TailEnvelope
    upper: TailEnvelope

    @property
    def ordered(self) -> bool:
        return self.lower.limsup <= self.upper.liminf + 1e-12


def density_envelope(sds: Sequence[SpectralData], lam: float, n: int, kind: str = "standard",
                     g: str | None = None, tol: float = 1e-6) -> DensityEnvelope:
    lo = tail_envelope([np.real(density(sd, kind, lam, g)) for sd in sds], tol)
    hi = tail_envelope([np.real(density(sd, kind, lam + 1.0 / n, g)) for sd in sds], tol)
    return DensityEnvelope(lam, n, lo, hi)
