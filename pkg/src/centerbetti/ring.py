"""Group ring elements and matrices, their traces, the kappa bound and
Galois conjugation of cyclotomic coefficients.

Coefficients are either exact (:class:`~centerbetti.cyclotomic.Cyclotomic`)
or floating (``complex``).  Only exact zeros are pruned from supports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .cyclotomic import Cyclotomic, parse_coefficient, units_mod
from .groups import ConjugacyClassInfo, GroupDescriptor, GroupElement, GroupError, QuotientMap

Coefficient = "Cyclotomic | complex"


class RingError(ValueError):
    pass


# -- coefficient helpers --------------------------------------------------


def coeff_is_zero(c) -> bool:
    return not c


def coeff_add(a, b):
    if isinstance(a, Cyclotomic) and isinstance(b, Cyclotomic):
        return a + b
    return complex(a) + complex(b)


def coeff_mul(a, b):
    if isinstance(a, Cyclotomic) and isinstance(b, Cyclotomic):
        return a * b
    return complex(a) * complex(b)


def coeff_conj(c):
    if isinstance(c, Cyclotomic):
        return c.conjugate()
    return complex(c).conjugate()


def coeff_abs(c) -> float:
    return abs(complex(c))


def as_coefficient(value):
    if isinstance(value, (Cyclotomic, complex)):
        return value
    if isinstance(value, (int, Fraction)) and not isinstance(value, bool):
        return Cyclotomic.rational(value)
    if isinstance(value, float):
        return complex(value)
    return parse_coefficient(value)


# -- ring elements ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RingElement:
    """Finitely supported map group -> coefficients (normal form keyed)."""

    group: GroupDescriptor
    terms: Mapping

    @classmethod
    def from_terms(cls, group: GroupDescriptor, terms: Mapping | Iterable) -> "RingElement":
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict = {}
        for nf, c in items:
            c = as_coefficient(c)
            acc[nf] = coeff_add(acc[nf], c) if nf in acc else c
        return cls(group, {k: v for k, v in acc.items() if not coeff_is_zero(v)})

    @classmethod
    def zero(cls, group: GroupDescriptor) -> "RingElement":
        return cls(group, {})

    @classmethod
    def one(cls, group: GroupDescriptor, scalar=1) -> "RingElement":
        return cls.from_terms(group, {group.identity_nf(): scalar})

    @classmethod
    def monomial(cls, x: GroupElement, scalar=1) -> "RingElement":
        return cls.from_terms(x.group, {x.nf: scalar})

    @classmethod
    def parse(cls, group: GroupDescriptor, pairs: Sequence) -> "RingElement":
        """From ``[(word, coefficient), ...]`` pairs, e.g. ``[("e", "2"), ("u", "-1")]``."""
        terms = []
        for pair in pairs:
            if len(pair) != 2:
                raise RingError(f"expected (word, coefficient) pair, got {pair!r}")
            word, coef = pair
            terms.append((group.parse(str(word)).nf, parse_coefficient(coef)))
        return cls.from_terms(group, terms)

    def to_pairs(self) -> list[tuple[str, str]]:
        out = []
        for nf in sorted(self.terms, key=lambda x: (self.group.length_nf(x), repr(x))):
            c = self.terms[nf]
            out.append((self.group.format_nf(nf), str(c) if isinstance(c, Cyclotomic) else repr(c)))
        return out

    # -- structure ----------------------------------------------------------

    def coefficient(self, nf):
        c = self.terms.get(nf)
        if c is None:
            return Cyclotomic.rational(0) if self.is_exact() else 0j
        return c

    def support(self) -> set:
        return set(self.terms)

    def is_exact(self) -> bool:
        return all(isinstance(c, Cyclotomic) for c in self.terms.values())

    def conductor(self) -> int:
        n = 1
        for c in self.terms.values():
            if isinstance(c, Cyclotomic):
                n = math.lcm(n, c.n)
        return n

    def sup_norm(self) -> float:
        return max((coeff_abs(c) for c in self.terms.values()), default=0.0)

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if not isinstance(other, RingElement):
            return NotImplemented
        if self.group != other.group or set(self.terms) != set(other.terms):
            return False
        for k, v in self.terms.items():
            w = other.terms[k]
            if isinstance(v, Cyclotomic) and isinstance(w, Cyclotomic):
                if v != w:
                    return False
            elif complex(v) != complex(w):
                return False
        return True

    __hash__ = None

    def __repr__(self):
        inner = ", ".join(f"{c}*[{w}]" for w, c in self.to_pairs())
        return f"RingElement({inner or '0'})"

    # -- arithmetic -----------------------------------------------------------

    def _check(self, other: "RingElement") -> None:
        if self.group != other.group:
            raise GroupError(f"descriptor mismatch: {self.group!r} vs {other.group!r}")

    def __add__(self, other: "RingElement") -> "RingElement":
        self._check(other)
        acc = dict(self.terms)
        for k, v in other.terms.items():
            acc[k] = coeff_add(acc[k], v) if k in acc else v
        return RingElement(self.group, {k: v for k, v in acc.items() if not coeff_is_zero(v)})

    def __neg__(self) -> "RingElement":
        return self.scale(-1)

    def __sub__(self, other: "RingElement") -> "RingElement":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, RingElement):
            return convolve(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def scale(self, s) -> "RingElement":
        s = as_coefficient(s)
        out = {k: coeff_mul(s, v) for k, v in self.terms.items()}
        return RingElement(self.group, {k: v for k, v in out.items() if not coeff_is_zero(v)})

    def adjoint(self) -> "RingElement":
        g = self.group
        return RingElement(g, {g.inv_nf(k): coeff_conj(v) for k, v in self.terms.items()})

    def galois(self, j: int) -> "RingElement":
        out = {}
        for k, v in self.terms.items():
            if not isinstance(v, Cyclotomic):
                raise RingError("Galois conjugation needs exact coefficients")
            out[k] = v.galois(j % v.n if v.n > 1 else 1)
        return RingElement(self.group, out)

    def to_float(self) -> "RingElement":
        return RingElement(self.group, {k: complex(v) for k, v in self.terms.items()})

    def push_forward(self, p: QuotientMap) -> "RingElement":
        """Image under a group homomorphism; colliding coefficients are summed."""
        if p.source != self.group:
            raise GroupError("push-forward along a map with a different source")
        acc: dict = {}
        for k, v in self.terms.items():
            y = p.apply_nf(k)
            acc[y] = coeff_add(acc[y], v) if y in acc else v
        return RingElement(p.target, {k: v for k, v in acc.items() if not coeff_is_zero(v)})


def convolve(a: RingElement, b: RingElement) -> RingElement:
    """(a b)(g) = sum_h a(h) b(h^-1 g)."""
    a._check(b)
    g = a.group
    mul = g.mul_nf
    acc: dict = {}
    for x, ax in a.terms.items():
        for y, by in b.terms.items():
            z = mul(x, y)
            c = coeff_mul(ax, by)
            acc[z] = coeff_add(acc[z], c) if z in acc else c
    return RingElement(g, {k: v for k, v in acc.items() if not coeff_is_zero(v)})


# -- matrices -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RingMatrix:
    """d x d matrix over the group ring of ``group``."""

    group: GroupDescriptor
    entries: tuple[tuple[RingElement, ...], ...]

    def __post_init__(self):
        d = len(self.entries)
        if d == 0 or any(len(row) != d for row in self.entries):
            raise RingError("ring matrix must be square and nonempty")
        for row in self.entries:
            for e in row:
                if e.group != self.group:
                    raise GroupError("all entries must live over the matrix's group")

    @property
    def d(self) -> int:
        return len(self.entries)

    @classmethod
    def from_rows(cls, group: GroupDescriptor, rows: Sequence[Sequence[RingElement]]) -> "RingMatrix":
        return cls(group, tuple(tuple(r) for r in rows))

    @classmethod
    def scalar(cls, a: RingElement) -> "RingMatrix":
        return cls(a.group, ((a,),))

    @classmethod
    def identity(cls, group: GroupDescriptor, d: int = 1) -> "RingMatrix":
        one, zero = RingElement.one(group), RingElement.zero(group)
        return cls(group, tuple(tuple(one if i == j else zero for j in range(d)) for i in range(d)))

    @classmethod
    def zeros(cls, group: GroupDescriptor, d: int = 1) -> "RingMatrix":
        zero = RingElement.zero(group)
        return cls(group, tuple(tuple(zero for _ in range(d)) for _ in range(d)))

    @classmethod
    def parse(cls, group: GroupDescriptor, nested: Sequence) -> "RingMatrix":
        """From a d x d nested list of ``[(word, coefficient), ...]`` entries."""
        rows = []
        for row in nested:
            rows.append(tuple(RingElement.parse(group, entry) for entry in row))
        return cls(group, tuple(rows))

    def to_nested(self) -> list:
        return [[list(map(list, e.to_pairs())) for e in row] for row in self.entries]

    def __getitem__(self, kl: tuple[int, int]) -> RingElement:
        k, l = kl
        return self.entries[k][l]

    def is_exact(self) -> bool:
        return all(e.is_exact() for row in self.entries for e in row)

    def conductor(self) -> int:
        n = 1
        for row in self.entries:
            for e in row:
                n = math.lcm(n, e.conductor())
        return n

    def support(self) -> set:
        out = set()
        for row in self.entries:
            for e in row:
                out |= e.support()
        return out

    def support_radius(self) -> int:
        return max((self.group.length_nf(x) for x in self.support()), default=0)

    def sup_norm(self) -> float:
        return max(e.sup_norm() for row in self.entries for e in row)

    def __eq__(self, other):
        if not isinstance(other, RingMatrix):
            return NotImplemented
        return self.group == other.group and self.d == other.d and all(
            a == b for ra, rb in zip(self.entries, other.entries) for a, b in zip(ra, rb))

    __hash__ = None

    def __repr__(self):
        return f"RingMatrix(d={self.d}, {self.to_nested()})"

    def _check(self, other: "RingMatrix") -> None:
        if self.group != other.group:
            raise GroupError("descriptor mismatch between matrices")
        if self.d != other.d:
            raise RingError(f"dimension mismatch: {self.d} vs {other.d}")

    def __add__(self, other: "RingMatrix") -> "RingMatrix":
        return matrix_add(self, other)

    def __sub__(self, other: "RingMatrix") -> "RingMatrix":
        return matrix_add(self, other.scale(-1))

    def __mul__(self, other):
        if isinstance(other, RingMatrix):
            return matrix_mul(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def scale(self, s) -> "RingMatrix":
        return RingMatrix(self.group, tuple(tuple(e.scale(s) for e in row) for row in self.entries))

    def adjoint(self) -> "RingMatrix":
        return matrix_adjoint(self)

    def power(self, n: int) -> "RingMatrix":
        if n < 0:
            raise RingError("negative matrix powers are not defined")
        result = RingMatrix.identity(self.group, self.d)
        for _ in range(n):
            result = matrix_mul(result, self)
        return result

    def galois(self, j: int) -> "RingMatrix":
        return galois_conjugate(self, j)

    def to_float(self) -> "RingMatrix":
        return RingMatrix(self.group, tuple(tuple(e.to_float() for e in row) for row in self.entries))

    def push_forward(self, p: QuotientMap) -> "RingMatrix":
        return RingMatrix(p.target, tuple(tuple(e.push_forward(p) for e in row) for row in self.entries))

    def is_hermitian(self, tol: float = 0.0) -> bool:
        adj = matrix_adjoint(self)
        if self.is_exact() and tol == 0.0:
            return adj == self
        for ra, rb in zip(self.entries, adj.entries):
            for a, b in zip(ra, rb):
                diff = a.to_float() - b.to_float()
                if diff.sup_norm() > tol:
                    return False
        return True


def matrix_add(A: RingMatrix, B: RingMatrix) -> RingMatrix:
    A._check(B)
    return RingMatrix(A.group, tuple(tuple(a + b for a, b in zip(ra, rb)) for ra, rb in zip(A.entries, B.entries)))


def matrix_mul(A: RingMatrix, B: RingMatrix) -> RingMatrix:
    A._check(B)
    d = A.d
    rows = []
    for k in range(d):
        row = []
        for l in range(d):
            acc = RingElement.zero(A.group)
            for m in range(d):
                if A.entries[k][m] and B.entries[m][l]:
                    acc = acc + convolve(A.entries[k][m], B.entries[m][l])
            row.append(acc)
        rows.append(tuple(row))
    return RingMatrix(A.group, tuple(rows))


def matrix_adjoint(A: RingMatrix) -> RingMatrix:
    d = A.d
    return RingMatrix(A.group, tuple(tuple(A.entries[l][k].adjoint() for l in range(d)) for k in range(d)))


def positive_from_witness(B: RingMatrix) -> RingMatrix:
    """B* B, a positive matrix with its witness."""
    return matrix_mul(matrix_adjoint(B), B)


def diagonal_domination_gap(A: RingMatrix) -> float:
    """min over k and g != e of Re c_e(A_kk) - |c_g(A_kk)|; nonnegative for A = B*B."""
    e = A.group.identity_nf()
    gap = math.inf
    for k in range(A.d):
        entry = A.entries[k][k]
        top = complex(entry.coefficient(e)).real
        for nf, c in entry.terms.items():
            if nf != e:
                gap = min(gap, top - coeff_abs(c))
    return gap


# -- traces -----------------------------------------------------------------


def _zero_like(A: RingMatrix):
    return Cyclotomic.rational(0) if A.is_exact() else 0j


def trace_standard(A: RingMatrix):
    """sum_k (coefficient of e in A_kk)."""
    e = A.group.identity_nf()
    total = _zero_like(A)
    for k in range(A.d):
        total = coeff_add(total, A.entries[k][k].coefficient(e))
    return total


def trace_delocalized(A: RingMatrix, cls: ConjugacyClassInfo):
    """sum_k sum_{h in class} (coefficient of h in A_kk)."""
    if cls.group != A.group:
        raise GroupError("class and matrix live over different groups")
    if not cls.is_finite:
        raise RingError(f"delocalized trace needs a finite class; class of {cls.representative} is "
                        f"{cls.status.value}")
    total = _zero_like(A)
    for k in range(A.d):
        entry = A.entries[k][k]
        for h in cls.elements:
            c = entry.terms.get(h)
            if c is not None:
                total = coeff_add(total, c)
    return total


def trace_deviated(A: RingMatrix, cls: ConjugacyClassInfo, part: str = "re"):
    """Real or imaginary deviated trace: tr + (tr^<g> +/- tr^<g^-1>) / (2|<g>|) (divided by i for im)."""
    if part not in ("re", "im"):
        raise ValueError("part must be 're' or 'im'")
    size = cls.size
    t = trace_standard(A)
    t_g = trace_delocalized(A, cls)
    t_ginv = trace_delocalized(A, cls.inverse())
    if part == "re":
        combo = coeff_add(t_g, t_ginv)
        factor = Cyclotomic.rational(Fraction(1, 2 * size))
    else:
        combo = coeff_add(t_g, coeff_mul(Cyclotomic.rational(-1), t_ginv))
        factor = Cyclotomic.root_of_unity(4, 3, Fraction(1, 2 * size))  # 1/(2 i |<g>|)
    return coeff_add(t, coeff_mul(factor, combo))


# -- kappa --------------------------------------------------------------------


@dataclass(frozen=True)
class KappaReport:
    S_A: int
    S_Astar: int
    sup_norm: float
    kappa: float


def kappa(A: RingMatrix) -> KappaReport:
    """Combinatorial norm bound sqrt(S(A) S(A*)) |A|_inf on the {1..d} x G realization."""
    d = A.d
    s_rows = max(sum(len(A.entries[k][l].terms) for l in range(d)) for k in range(d))
    s_cols = max(sum(len(A.entries[k][l].terms) for k in range(d)) for l in range(d))
    sup = A.sup_norm()
    return KappaReport(s_rows, s_cols, sup, math.sqrt(s_rows * s_cols) * sup)


# -- Galois conjugates and determinant bounds -------------------------------


def galois_conjugate(A: RingMatrix, j: int) -> RingMatrix:
    """Apply zeta_n -> zeta_n^j coefficientwise (n the conductor of A)."""
    if not A.is_exact():
        raise RingError("Galois conjugation needs exact coefficients")
    n = A.conductor()
    if math.gcd(j, n) != 1:
        raise RingError(f"gcd({j}, {n}) != 1")
    rows = []
    for row in A.entries:
        out_row = []
        for e in row:
            terms = {}
            for k, v in e.terms.items():
                terms[k] = v.lift(n).galois(j % n) if n > 1 else v
            out_row.append(RingElement(A.group, {k: v for k, v in terms.items() if v}))
        rows.append(tuple(out_row))
    return RingMatrix(A.group, tuple(rows))


@dataclass(frozen=True)
class DeterminantBounds:
    conductor: int
    conjugate_kappas: tuple[float, ...]
    B0: float
    B1: float
    kappa: float = math.nan
    B1_corrected: float = math.nan


def determinant_lower_bound_rhs(A: RingMatrix, conductor: int | None = None) -> DeterminantBounds:
    """Right-hand sides -d sum ln kappa(sigma_k A) and -2d |sum ln kappa(sigma_k A)| over k >= 2.

    ``B1_corrected = 2 B0 - 2d max(ln kappa(A), 0)`` is a lower bound for the
    deviated determinants that follows from lndet >= B0 and the spectrum lying
    in [0, kappa(A)]; B1 alone can fail (the Laplacian on Z has deviated
    determinant -1 at u while B1 = 0).

    The embeddings are zeta_n -> zeta_n^j for the units j != 1 mod n, n the
    conductor of A (or the one supplied, which must be a multiple of it).
    """
    if not A.is_exact():
        raise RingError("determinant bounds need exact coefficients")
    n = A.conductor()
    if conductor is not None:
        if conductor % n:
            raise RingError(f"conductor {conductor} does not contain the coefficient field Q(zeta_{n})")
        n = conductor
    kappas = []
    for j in units_mod(n):
        if j == 1:
            continue
        conj = _galois_with_conductor(A, j, n)
        kappas.append(kappa(conj).kappa)
    total = sum(math.log(k) if k > 0 else -math.inf for k in kappas)
    d = A.d
    B0 = -d * total
    # |int ln x df| <= int |ln x| dF = -lndet + 2 int_{x>1} ln x dF, with lndet >= B0
    kap = kappa(A).kappa
    corrected = 2 * B0 - 2 * d * max(math.log(kap), 0.0) if kap > 0 else 2 * B0
    return DeterminantBounds(n, tuple(kappas), B0, -2 * d * abs(total), kap, corrected)


def _galois_with_conductor(A: RingMatrix, j: int, n: int) -> RingMatrix:
    rows = []
    for row in A.entries:
        rows.append(tuple(RingElement(A.group, {k: v.lift(n).galois(j) if n > 1 else v
                                                 for k, v in e.terms.items()}) for e in row))
    return RingMatrix(A.group, tuple(rows))
