"""Spectral data of finite realizations: densities, kernel Fourier
coefficients and Fuglede-Kadison determinants, standard and delocalized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import abelian, exact
from .approximation import COMPRESSION, FiniteRealization
from .cyclotomic import Cyclotomic
from .groups import ConjugacyClassInfo, GroupElement, is_cyclic_product
from .ring import DeterminantBounds, RingMatrix, determinant_lower_bound_rhs

KINDS = ("standard", "re", "im", "raw")


class SpectralError(ValueError):
    pass


def zero_threshold(kappa_value: float) -> float:
    """tau = max(1e-10 kappa, 1e-12)."""
    return max(1e-10 * kappa_value, 1e-12)


# -- eigensolver --------------------------------------------------------------


@dataclass(frozen=True)
class EigenPairs:
    values: np.ndarray
    vectors: np.ndarray | None
    residual: float | None


def _as_matrix(H) -> np.ndarray:
    return H.matrix if isinstance(H, FiniteRealization) else np.asarray(H)


def eigh(H, vectors: bool = True, check_residual: bool = True, herm_tol: float = 1e-12) -> EigenPairs:
    """Full spectrum of a Hermitian matrix (ascending) with optional eigenvectors.

    Raises SpectralError if the input is not Hermitian within ``herm_tol`` or
    if some pair has residual above 1e-10 (1 + ||H||).
    """
    M = _as_matrix(H)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise SpectralError("eigh needs a square matrix")
    if M.size and np.max(np.abs(M - M.conj().T)) > herm_tol:
        raise SpectralError("matrix is not Hermitian")
    if not vectors:
        return EigenPairs(np.linalg.eigvalsh(M), None, None)
    w, V = np.linalg.eigh(M)
    res = None
    if check_residual and M.size:
        R = M @ V - V * w
        res = float(np.max(np.linalg.norm(R, axis=0)))
        scale = 1.0 + float(np.max(np.abs(w)))
        if res > 1e-10 * scale:
            raise SpectralError(f"eigen-residual {res:.3e} exceeds 1e-10 (1 + ||H||)")
    return EigenPairs(w, V, res)


# -- spectral data ------------------------------------------------------------


@dataclass(frozen=True)
class DelocWeights:
    """Per-eigenvector raw delocalized weights for one tracked class.

    ``raw[j] = site_weight * sum_{h in C} sum_s v_j[pi_h s] conj(v_j[s])``,
    i.e. the delocalized trace of the rank-one projection onto v_j.
    """

    label: str
    class_size: int
    raw: np.ndarray
    raw_inverse: np.ndarray
    identity: bool = False


@dataclass(frozen=True)
class SpectralData:
    eigenvalues: np.ndarray
    weights_standard: np.ndarray
    deloc: dict
    normalization: Fraction
    site_weight: Fraction
    tau: float
    kappa: float
    d: int
    index: int = 0

    def weights(self, kind: str = "standard", g: str | None = None) -> np.ndarray:
        if kind == "standard":
            return self.weights_standard
        if kind not in KINDS:
            raise SpectralError(f"unknown density kind {kind!r}; expected one of {KINDS}")
        if g not in self.deloc:
            raise SpectralError(f"class {g!r} is not tracked; tracked: {sorted(self.deloc)}")
        dw = self.deloc[g]
        if kind == "raw":
            return dw.raw
        if kind == "re":
            return self.weights_standard + ((dw.raw + dw.raw_inverse) / (2 * dw.class_size)).real
        return self.weights_standard + ((dw.raw - dw.raw_inverse) / (2j * dw.class_size)).real

    def total_mass(self, kind: str = "standard", g: str | None = None):
        return self.weights(kind, g).sum()


def _raw_weights(H: FiniteRealization, V: np.ndarray, cls: ConjugacyClassInfo) -> np.ndarray:
    w = float(H.site_weight)
    Vc = V.conj()
    total = np.zeros(V.shape[1], dtype=np.complex128)
    for h in cls.elements:
        total += (V[H.translate(h), :] * Vc).sum(axis=0)
    return w * total


def normalize_tracked(tracked) -> list[tuple[str, ConjugacyClassInfo]]:
    from .groups import conjugacy_class
    out = []
    for item in tracked or ():
        if isinstance(item, tuple):
            label, info = item
        elif isinstance(item, ConjugacyClassInfo):
            label, info = str(item.representative), item
        elif isinstance(item, GroupElement):
            label, info = str(item), conjugacy_class(item)
        else:
            raise SpectralError(f"cannot track {item!r}")
        if not info.is_finite:
            raise SpectralError(f"class of {info.representative} is {info.status.value}; "
                                "delocalized data needs a finite class")
        out.append((label, info))
    return out


def spectral_data(H: FiniteRealization, tracked: Sequence = (), tau: float | None = None,
                  check_residual: bool = True) -> SpectralData:
    """Eigenvalues with standard weights and raw delocalized weights per tracked class."""
    classes = normalize_tracked(tracked)
    images = [(label, H.class_image(info)) for label, info in classes]
    w = float(H.site_weight)
    need_vectors = any(img.elements != frozenset([H.site_group.identity_nf()]) for _, img in images)
    pairs = eigh(H, vectors=need_vectors, check_residual=check_residual)
    n = len(pairs.values)
    std = np.full(n, w)
    deloc = {}
    for (label, img), (_, info) in zip(images, classes):
        if img.elements == frozenset([H.site_group.identity_nf()]):
            raw = std.astype(np.complex128)
            raw_inv = raw
        else:
            raw = _raw_weights(H, pairs.vectors, img)
            raw_inv = _raw_weights(H, pairs.vectors, img.inverse())
        deloc[label] = DelocWeights(label, img.size, raw, raw_inv, info.representative.is_identity())
    tau = zero_threshold(H.kappa_bound) if tau is None else tau
    return SpectralData(pairs.values, std, deloc, H.normalization, H.site_weight, tau,
                        H.kappa_bound, H.d, H.index)


# -- densities ----------------------------------------------------------------


def density(sd: SpectralData, kind: str = "standard", lam: float = 0.0, g: str | None = None):
    """Cumulative weight over eigenvalues <= lam + tau (complex for kind 'raw')."""
    if lam < 0:
        raise SpectralError("density is evaluated at lambda >= 0")
    mask = sd.eigenvalues <= lam + sd.tau
    value = sd.weights(kind, g)[mask].sum()
    return complex(value) if kind == "raw" else float(np.real(value))


@dataclass(frozen=True)
class DensityFunction:
    """Right-continuous step function: value ``values[j]`` on [jumps[j], jumps[j+1])."""

    kind: str
    g: str | None
    jumps: np.ndarray
    values: np.ndarray

    def __call__(self, lam: float):
        k = np.searchsorted(self.jumps, lam, side="right") - 1
        if k < 0:
            return 0.0
        return self.values[k]


def density_function(sd: SpectralData, kind: str = "standard", g: str | None = None) -> DensityFunction:
    """Jumps at the distinct eigenvalues (eigenvalues within tau of 0 sit at 0)."""
    ev = np.where(np.abs(sd.eigenvalues) <= sd.tau, 0.0, sd.eigenvalues)
    wts = sd.weights(kind, g)
    order = np.argsort(ev, kind="stable")
    ev, wts = ev[order], wts[order]
    jumps, idx = np.unique(ev, return_index=True)
    cums = np.cumsum(wts)
    ends = np.append(idx[1:], len(ev)) - 1
    return DensityFunction(kind, g, jumps, cums[ends])


def domination_violations(sd: SpectralData, g: str, tol: float = 1e-9) -> int:
    """Count eigenvectors with |raw_j| > |C| * standard_j + tol."""
    dw = sd.deloc[g]
    return int(np.sum(np.abs(dw.raw) > dw.class_size * sd.weights_standard + tol))


def positivity_violations(sd: SpectralData, g: str, tol: float = 1e-12) -> int:
    """Count negative deviated (re and im) weights below -tol."""
    return int(np.sum(sd.weights("re", g) < -tol) + np.sum(sd.weights("im", g) < -tol))


# -- kernels ------------------------------------------------------------------


def kernel_fourier_coefficient(sd: SpectralData, g: str) -> complex:
    """(1/|C|) * raw delocalized mass at eigenvalues <= tau."""
    dw = sd.deloc[g]
    mask = sd.eigenvalues <= sd.tau
    return complex(dw.raw[mask].sum()) / dw.class_size


def _abelian_exact_ok(H: FiniteRealization) -> bool:
    if H.kind == COMPRESSION or H.stage_matrix is None:
        return False
    B = _stage_matrix(H)
    if not is_cyclic_product(B.group):
        return False
    return all(isinstance(c, Cyclotomic) and c.is_rational()
               for row in B.entries for e in row for c in e.terms.values())


def _stage_matrix(H: FiniteRealization) -> RingMatrix:
    return H.stage_matrix


def kernel_dim_exact(H: FiniteRealization) -> Fraction:
    """Normalized kernel dimension F(0) computed exactly."""
    if not H.is_exact():
        raise SpectralError("exact copy absent: realization has floating coefficients")
    if _abelian_exact_ok(H):
        return abelian.kernel_dimension_exact(_stage_matrix(H))
    nul = exact.nullity(H.exact_rows(), H.dim)
    return Fraction(nul) * H.site_weight


def kernel_fourier_coefficient_exact(H: FiniteRealization, cls) -> object:
    """Exact (1/|C_i|) tr^<g_i>(kernel projection) for a tracked class of G."""
    if not H.is_exact():
        raise SpectralError("exact copy absent: realization has floating coefficients")
    (_, info), = normalize_tracked([cls])
    img = H.class_image(info)
    if _abelian_exact_ok(H):
        coeffs = abelian.kernel_coefficients_exact(_stage_matrix(H), img.elements)
        return sum(coeffs.values(), Fraction(0)) / img.size
    idx = H.label_index
    e = H.site_group.identity_nf()
    if H.kind == COMPRESSION:
        xs = sorted({lab[0] for lab in H.labels})
        columns = [idx[(x, e, k)] for x in xs for k in range(H.d)]
        scale = Fraction(1, len(xs))
    else:
        columns = [idx[(e, k)] for k in range(H.d)]
        scale = Fraction(1)
    cols = exact.kernel_projection_columns(H.exact_rows(), H.dim, columns)
    total = Fraction(0)
    for h in img.elements:
        for s in columns:
            lab = H.labels[s]
            target = (lab[0], H.site_group.mul_nf(h, lab[1]), lab[2]) if H.kind == COMPRESSION \
                else (H.site_group.mul_nf(h, lab[0]), lab[1])
            v = cols[s].get(idx[target], 0)
            total = total + v
    result = exact.normalize_entry(total) * scale / img.size
    return result


# -- determinants -------------------------------------------------------------


def fuglede_kadison(sd: SpectralData, kind: str = "standard", g: str | None = None) -> float:
    """sum over eigenvalues > tau of weight * ln(lambda); -inf without positive spectrum."""
    mask = sd.eigenvalues > sd.tau
    if not mask.any():
        return -math.inf
    wts = np.real(sd.weights(kind, g)[mask])
    return float(np.sum(wts * np.log(sd.eigenvalues[mask])))


@dataclass(frozen=True)
class DeterminantReport:
    index: int
    lndet: float
    lndet_dev_re: dict
    lndet_dev_im: dict
    bounds: DeterminantBounds | None
    kernel_dim: object
    kernel_dim_is_exact: bool

    def checks(self) -> dict:
        """Bound checks: lndet >= B0, deviated determinants >= B1 and >= the corrected bound."""
        out = {}
        if self.bounds is None:
            return out
        tol = 1e-9
        out["lndet >= B0"] = self.lndet >= self.bounds.B0 - tol
        for part, vals in (("re", self.lndet_dev_re), ("im", self.lndet_dev_im)):
            for g, v in vals.items():
                out[f"lndet_{part}[{g}] >= B1"] = v >= self.bounds.B1 - tol
                out[f"lndet_{part}[{g}] >= B1_corrected"] = v >= self.bounds.B1_corrected - tol
        return out

    def as_text(self, with_checks: bool = True) -> str:
        lines = [f"index = {self.index}", f"lndet = {self.lndet:.12g}"]
        for g, v in self.lndet_dev_re.items():
            lines.append(f"lndet_re[{g}] = {v:.12g}")
        for g, v in self.lndet_dev_im.items():
            lines.append(f"lndet_im[{g}] = {v:.12g}")
        kd = self.kernel_dim
        lines.append(f"kernel_dim = {kd}" + (" (exact)" if self.kernel_dim_is_exact else ""))
        if self.bounds is not None:
            lines.append(f"B0 = {self.bounds.B0:.12g}")
            lines.append(f"B1 = {self.bounds.B1:.12g}")
            lines.append(f"B1_corrected = {self.bounds.B1_corrected:.12g}")
        if with_checks:
            for name, ok in self.checks().items():
                lines.append(f"{name}: {'PASS' if ok else 'FAIL'}")
        return "\n".join(lines)


def determinant_report(sd: SpectralData, H: FiniteRealization | None = None,
                       A: RingMatrix | None = None) -> DeterminantReport:
    """Standard and deviated determinants of one stage, with the bound right-hand sides of A."""
    # deviated traces are defined for central g != e only
    dev = [g for g, w in sd.deloc.items() if not w.identity]
    re = {g: fuglede_kadison(sd, "re", g) for g in dev}
    im = {g: fuglede_kadison(sd, "im", g) for g in dev}
    bounds = determinant_lower_bound_rhs(A) if A is not None and A.is_exact() else None
    kd: object = density(sd, "standard", 0.0)
    is_exact = False
    if H is not None and H.is_exact():
        try:
            kd = kernel_dim_exact(H)
            is_exact = True
        except (SpectralError, ValueError):
            pass
    return DeterminantReport(sd.index, fuglede_kadison(sd), re, im, bounds, kd, is_exact)


@dataclass(frozen=True)
class PartialIntegration:
    lhs: float
    rhs: float
    residual: float

    @property
    def passed(self) -> bool:
        return self.residual <= 1e-8 * (1 + abs(self.lhs))


def partial_integration_check(sd: SpectralData, kind: str = "standard", g: str | None = None,
                              kappa_value: float | None = None) -> PartialIntegration:
    """Compare lndet with ln(k)(F(k) - F(0)) - int_0+^k (F(l) - F(0))/l dl.

    The right side integrates the step function piecewise between its jumps;
    the left side sums weights times logarithms directly.
    """
    kap = sd.kappa if kappa_value is None else kappa_value
    top = float(np.max(sd.eigenvalues)) if len(sd.eigenvalues) else 0.0
    if top > kap * (1 + 1e-12) + sd.tau:
        raise SpectralError(f"spectrum reaches {top} beyond kappa = {kap}")
    lhs = fuglede_kadison(sd, kind, g)
    F = density_function(sd, kind, g)
    jumps = np.asarray(F.jumps, dtype=float)
    vals = np.real(np.asarray(F.values))
    F0 = vals[0] if len(jumps) and jumps[0] <= sd.tau else 0.0
    pos = jumps > sd.tau
    if not pos.any():
        return PartialIntegration(lhs, -math.inf, 0.0 if lhs == -math.inf else math.inf)
    pj, pv = jumps[pos], vals[pos] - F0
    ends = np.append(pj[1:], kap)
    integral = float(np.sum(pv * (np.log(ends) - np.log(pj))))
    total = float(pv[-1])
    rhs = math.log(kap) * total - integral
    return PartialIntegration(lhs, rhs, abs(lhs - rhs))
