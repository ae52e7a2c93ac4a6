"""Finite approximations A[i] of a group ring matrix.

Three constructions are supported:

* inverse limits: push A along quotient maps G -> G_i onto finite groups;
* direct limits: replace each support element by a chosen lift in a finite
  stage group G_i (choices are seeded and recorded);
* Folner compressions: for G = U x Z^r with U finite, restrict the kernel of
  A to the preimage of a finite set X of cosets of U.

Each construction yields a :class:`FiniteRealization`, a concrete matrix with
a labeled basis plus the data needed for standard and delocalized traces.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .cyclotomic import Cyclotomic
from .exact import normalize_entry
from .groups import (ABELIAN, PRODUCT, ConjugacyClassInfo, GroupDescriptor, GroupElement, GroupError,
                     QuotientMap, conjugacy_class, direct_product, trivial_group)
from .ring import RingElement, RingMatrix, coeff_add, kappa

INVERSE_LIMIT = "inverse_limit"
DIRECT_LIMIT = "direct_limit"
COMPRESSION = "compression"


class SchemeError(ValueError):
    pass


# -- U x Z^r bookkeeping ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class FiniteByFreeAbelian:
    """Splits normal forms of G = U x Z^r into a U part and an exponent vector."""

    group: GroupDescriptor
    U: GroupDescriptor
    rank: int
    finite_slots: tuple[int, ...]
    abelian_slots: tuple[int, ...]

    def split(self, nf) -> tuple:
        g = self.group
        if g.kind == ABELIAN:
            return self.U.identity_nf(), tuple(nf)
        u_parts = tuple(nf[i] for i in self.finite_slots)
        u = u_parts[0] if len(u_parts) == 1 else (u_parts if u_parts else self.U.identity_nf())
        z = tuple(itertools.chain.from_iterable(nf[i] for i in self.abelian_slots))
        return u, z

    def join(self, u, z) -> tuple:
        g = self.group
        if g.kind == ABELIAN:
            return tuple(z)
        parts: list = [None] * len(g.components)
        if len(self.finite_slots) == 1:
            parts[self.finite_slots[0]] = u
        else:
            for slot, part in zip(self.finite_slots, u):
                parts[slot] = part
        pos = 0
        for slot in self.abelian_slots:
            r = g.components[slot].rank
            parts[slot] = tuple(z[pos:pos + r])
            pos += r
        return tuple(parts)


def split_finite_free(group: GroupDescriptor) -> FiniteByFreeAbelian:
    """Recognize G = U x Z^r (U possibly trivial) among the built-in descriptors."""
    if group.kind == ABELIAN:
        return FiniteByFreeAbelian(group, trivial_group(), group.rank, (), ())
    if group.kind == PRODUCT:
        finite = tuple(i for i, c in enumerate(group.components) if c.is_finite)
        abelian = tuple(i for i, c in enumerate(group.components) if c.kind == ABELIAN)
        if len(finite) + len(abelian) != len(group.components):
            raise SchemeError(f"{group!r} is not of the form U x Z^r with U finite")
        comps = [group.components[i] for i in finite]
        if not comps:
            U = trivial_group()
        elif len(comps) == 1:
            U = comps[0]
        else:
            U = direct_product(*comps)
        r = sum(group.components[i].rank for i in abelian)
        return FiniteByFreeAbelian(group, U, r, finite, abelian)
    if group.is_finite:
        return FiniteByFreeAbelian(group, group, 0, (), ())
    raise SchemeError(f"{group!r} is not of the form U x Z^r with U finite")


# -- Folner sets --------------------------------------------------------------


@dataclass(frozen=True)
class FolnerSet:
    """A finite set X of cosets of U in G = U x Z^r, stored as exponent vectors."""

    cosets: tuple[tuple[int, ...], ...]
    index: int = 0

    def __post_init__(self):
        if not self.cosets:
            raise SchemeError("Folner set must be nonempty")
        if len(set(self.cosets)) != len(self.cosets):
            raise SchemeError("Folner set has repeated cosets")

    @property
    def rank(self) -> int:
        return len(self.cosets[0])

    def __len__(self) -> int:
        return len(self.cosets)

    @cached_property
    def members(self) -> frozenset:
        return frozenset(self.cosets)

    @classmethod
    def box(cls, n: int, rank: int = 1, index: int = 0, start: int = 0) -> "FolnerSet":
        """The box {start, ..., start+n-1}^rank."""
        if n < 1:
            raise SchemeError("box size must be positive")
        pts = tuple(itertools.product(range(start, start + n), repeat=rank))
        return cls(pts, index)

    @classmethod
    def centered(cls, n: int, rank: int = 1, index: int = 0) -> "FolnerSet":
        """The box {-n, ..., n}^rank."""
        return cls(tuple(itertools.product(range(-n, n + 1), repeat=rank)), index)


def boxes(sizes: Sequence[int], rank: int = 1) -> list[FolnerSet]:
    return [FolnerSet.box(n, rank, index=i) for i, n in enumerate(sizes)]


def is_nested(exhaustion: Sequence[FolnerSet]) -> bool:
    return all(a.members <= b.members for a, b in zip(exhaustion, exhaustion[1:]))


def _l1_ball(radius: int, rank: int) -> list[tuple[int, ...]]:
    rng = range(-radius, radius + 1)
    return [v for v in itertools.product(rng, repeat=rank) if sum(map(abs, v)) <= radius]


def neighborhood(fs: FolnerSet, K: int) -> frozenset:
    """Two-sided K-boundary {x : d(x, X) <= K and d(x, complement of X) <= K}.

    The metric on G/U = Z^r is the quotient word metric, i.e. the l1 norm.
    """
    if K < 0:
        raise ValueError("K must be nonnegative")
    if K == 0:
        return frozenset()
    X = fs.members
    ball = [v for v in _l1_ball(K, fs.rank) if any(v)]
    out = set()
    for x in fs.cosets:
        inner = False
        for v in ball:
            y = tuple(a + b for a, b in zip(x, v))
            if y not in X:
                out.add(y)
                inner = True
        if inner:
            out.add(x)
    return frozenset(out)


def defect(fs: FolnerSet, K: int) -> float:
    return len(neighborhood(fs, K)) / len(fs)


# -- schemes --------------------------------------------------------------------


@dataclass(frozen=True)
class InverseLimit:
    quotients: tuple[QuotientMap, ...]

    @classmethod
    def reductions(cls, group: GroupDescriptor, moduli: Iterable[int]) -> "InverseLimit":
        from .groups import reduction_map
        return cls(tuple(reduction_map(group, n) for n in moduli))

    def __post_init__(self):
        for p in self.quotients:
            if not p.target.is_finite:
                raise SchemeError("inverse-limit targets must be finite groups")
            if p.source != self.quotients[0].source:
                raise SchemeError("inverse-limit quotients must share one source group")

    def __len__(self):
        return len(self.quotients)


@dataclass(frozen=True, eq=False)
class DirectLimitStage:
    """Stage group G_i with its map to G and the connecting map to G_{i+1}."""

    group: GroupDescriptor
    to_limit: QuotientMap
    connecting: QuotientMap | None = None

    def __post_init__(self):
        if not self.group.is_finite:
            raise SchemeError("direct-limit stages must be finite groups")


@dataclass(eq=False)
class DirectLimit:
    """Direct system of finite groups; lifts of support elements are chosen once
    (seeded) in the first stage covering them and pushed along connecting maps.
    """

    stages: tuple[DirectLimitStage, ...]
    seed: int = 0
    explicit_lifts: dict = field(default_factory=dict)
    _base_choice: dict = field(default_factory=dict, repr=False)

    def __len__(self):
        return len(self.stages)

    def _preimages(self, j: int, nf) -> list:
        st = self.stages[j]
        return sorted((x for x in st.group.elements_nf() if st.to_limit.apply_nf(x) == nf), key=repr)

    def base_choice(self, nf) -> tuple[int, object]:
        """(j0, chosen preimage in G_{j0}) for a limit-group element."""
        if nf in self._base_choice:
            return self._base_choice[nf]
        if nf in self.explicit_lifts:
            choice = self.explicit_lifts[nf]
        else:
            choice = None
            for j in range(len(self.stages)):
                pre = self._preimages(j, nf)
                if pre:
                    rng = random.Random(f"{self.seed}:{nf!r}")
                    choice = (j, pre[rng.randrange(len(pre))])
                    break
            if choice is None:
                raise SchemeError(f"element {nf!r} is not covered by any stage")
        self._base_choice[nf] = choice
        return choice

    def lift(self, i: int, nf):
        j0, x = self.base_choice(nf)
        if i < j0:
            raise SchemeError(f"support element {nf!r} is not covered at stage {i} (first covered at {j0})")
        for j in range(j0, i):
            conn = self.stages[j].connecting
            if conn is None:
                raise SchemeError(f"stage {j} has no connecting map")
            x = conn.apply_nf(x)
        return x

    def lift_table(self, i: int, support: Iterable) -> dict:
        return {nf: self.lift(i, nf) for nf in support}


@dataclass(frozen=True)
class FolnerCompression:
    U: GroupDescriptor
    exhaustion: tuple[FolnerSet, ...]

    def __len__(self):
        return len(self.exhaustion)


# -- realizations ---------------------------------------------------------------


@dataclass(eq=False)
class FiniteRealization:
    """A finite matrix A[i] with labeled basis and trace data.

    ``labels[s]`` is ``(g, k)`` in the limit cases and ``(x, u, k)`` for
    compressions.  Traces average over all sites: the standard trace of a
    matrix M is ``site_weight * trace(M)``; ``normalization`` is the factor in
    front of the sum over cosets (1 in limit cases, 1/|X| for compressions).
    """

    kind: str
    index: int
    labels: list
    d: int
    site_group: GroupDescriptor
    site_parts: list
    normalization: Fraction
    site_weight: Fraction
    entries: list
    kappa_bound: float
    stage_matrix: RingMatrix | None = None
    lifts: dict | None = None
    class_map: object = None

    @property
    def dim(self) -> int:
        return len(self.labels)

    @cached_property
    def label_index(self) -> dict:
        return {lab: i for i, lab in enumerate(self.labels)}

    def is_exact(self) -> bool:
        if self.stage_matrix is not None:
            return self.stage_matrix.is_exact()
        return all(isinstance(c, Cyclotomic) for _, _, c in self.entries)

    def is_real(self) -> bool:
        coeffs = ((c for row in self.stage_matrix.entries for e in row for c in e.terms.values())
                  if self.stage_matrix is not None else (c for _, _, c in self.entries))
        for c in coeffs:
            if isinstance(c, Cyclotomic):
                if not c.is_rational():
                    return False
            elif complex(c).imag != 0:
                return False
        return True

    @cached_property
    def matrix(self) -> np.ndarray:
        dtype = np.float64 if self.is_real() else np.complex128
        M = np.zeros((self.dim, self.dim), dtype=dtype)
        for i, j, c in self.entries:
            M[i, j] += complex(c).real if dtype is np.float64 else complex(c)
        return M

    def exact_rows(self) -> list[dict]:
        if not self.is_exact():
            raise SchemeError("realization has floating coefficients; no exact copy")
        rows: list[dict] = [dict() for _ in range(self.dim)]
        for i, j, c in self.entries:
            v = normalize_entry(c)
            rows[i][j] = rows[i].get(j, 0) + v
        return [{k: v for k, v in r.items() if v} for r in rows]

    def hermitian_defect(self) -> float:
        M = self.matrix
        return float(np.max(np.abs(M - M.conj().T))) if self.dim else 0.0

    def translate(self, h) -> np.ndarray:
        """Permutation s -> index of the site obtained by left-multiplying the site part by h."""
        cache = self.__dict__.setdefault("_perm_cache", {})
        if h in cache:
            return cache[h]
        mul = self.site_group.mul_nf
        idx = self.label_index
        perm = np.empty(self.dim, dtype=np.int64)
        for s, lab in enumerate(self.labels):
            if self.kind == COMPRESSION:
                x, u, k = lab
                perm[s] = idx[(x, mul(h, u), k)]
            else:
                g, k = lab
                perm[s] = idx[(mul(h, g), k)]
        cache[h] = perm
        return perm

    def class_image(self, g: GroupElement | ConjugacyClassInfo) -> ConjugacyClassInfo:
        """Conjugacy class in the site group of the image of a tracked element of G."""
        rep = g.representative if isinstance(g, ConjugacyClassInfo) else g
        y = self.class_map(rep.nf)
        info = conjugacy_class(GroupElement(self.site_group, y))
        if not info.is_finite:
            raise SchemeError(f"class of {rep} in the stage group is {info.status.value}")
        return info

    def trace(self, M: np.ndarray | None = None) -> complex:
        M = self.matrix if M is None else M
        return complex(float(self.site_weight) * np.trace(M))

    def trace_raw(self, cls: ConjugacyClassInfo, M: np.ndarray | None = None) -> complex:
        """site_weight * sum_{h in class} sum_s M[pi_h s, s]."""
        M = self.matrix if M is None else M
        cols = np.arange(self.dim)
        total = 0j
        for h in cls.elements:
            total += complex(M[self.translate(h), cols].sum())
        return float(self.site_weight) * total

    def trace_deviated(self, cls: ConjugacyClassInfo, part: str = "re", M: np.ndarray | None = None) -> complex:
        size = cls.size
        t = self.trace(M)
        tg = self.trace_raw(cls, M)
        tginv = self.trace_raw(cls.inverse(), M)
        if part == "re":
            return t + (tg + tginv) / (2 * size)
        return t + (tg - tginv) / (2j * size)


class _LazyEntries(Sequence):
    """Entry triples built on first use; the exact character path never needs them."""

    def __init__(self, build):
        self._build = build
        self._items = None

    def _get(self) -> list:
        if self._items is None:
            self._items = self._build()
        return self._items

    def __getitem__(self, i):
        return self._get()[i]

    def __len__(self) -> int:
        return len(self._get())

    def __iter__(self):
        return iter(self._get())


def _realize_finite(B: RingMatrix, kind: str, index: int, kappa_bound: float, class_map,
                    lifts=None) -> FiniteRealization:
    H = B.group
    d = B.d
    elements = list(H.elements_nf())
    labels = list(itertools.product(elements, range(d)))

    def build() -> list:
        idx = {lab: i for i, lab in enumerate(labels)}
        entries = []
        mul = H.mul_nf
        for k in range(d):
            for l in range(d):
                for s, c in B.entries[k][l].terms.items():
                    # entry ((g,k),(h,l)) is the coefficient of g h^-1, i.e. g = s h
                    for h in elements:
                        entries.append((idx[(mul(s, h), k)], idx[(h, l)], c))
        return entries

    order = len(elements)
    return FiniteRealization(kind, index, labels, d, H, elements, Fraction(1), Fraction(1, order),
                             _LazyEntries(build), kappa_bound, stage_matrix=B, lifts=lifts, class_map=class_map)


def build_inverse_limit_stage(A: RingMatrix, p: QuotientMap, index: int = 0) -> FiniteRealization:
    """Realize p(A) as left multiplication on l2(G_i)^d."""
    if p.source != A.group:
        raise SchemeError("quotient map source differs from the matrix's group")
    if not p.target.is_finite:
        raise SchemeError("inverse-limit target must be finite")
    B = A.push_forward(p)
    return _realize_finite(B, INVERSE_LIMIT, index, kappa(A).kappa, p.apply_nf)


def build_direct_limit_stage(A: RingMatrix, scheme: DirectLimit, index: int) -> FiniteRealization:
    """Replace support elements of A by their recorded lifts in G_i and realize."""
    stage = scheme.stages[index]
    if stage.to_limit.target != A.group:
        raise SchemeError("stage maps do not land in the matrix's group")
    table = scheme.lift_table(index, A.support())
    rows = []
    for row in A.entries:
        out = []
        for e in row:
            acc: dict = {}
            for s, c in e.terms.items():
                y = table[s]
                acc[y] = coeff_add(acc[y], c) if y in acc else c
            out.append(RingElement(stage.group, {k: v for k, v in acc.items() if v}))
        rows.append(tuple(out))
    B = RingMatrix(stage.group, tuple(rows))
    return _realize_finite(B, DIRECT_LIMIT, index, kappa(A).kappa,
                           lambda nf: scheme.lift(index, nf), lifts=dict(table))


def build_folner_compression(A: RingMatrix, fs: FolnerSet, U: GroupDescriptor | None = None,
                             index: int | None = None) -> FiniteRealization:
    """Compress A to the preimage of X = fs in G = U x Z^r.

    Basis (x, u, k) in lexicographic order; the entry at ((x,u,k),(y,v,l)) is
    the coefficient of (u v^-1, x - y) in A_kl.
    """
    split = split_finite_free(A.group)
    if U is not None and U != split.U:
        raise SchemeError(f"U = {U!r} does not match the finite factor {split.U!r} of {A.group!r}")
    if split.rank != fs.rank:
        raise SchemeError(f"Folner set has rank {fs.rank}, group has free abelian rank {split.rank}")
    Ugrp = split.U
    d = A.d
    us = list(Ugrp.elements_nf())
    labels = [(x, u, k) for x in fs.cosets for u in us for k in range(d)]
    idx = {lab: i for i, lab in enumerate(labels)}
    X = fs.members
    mul = Ugrp.mul_nf
    entries = []
    for k in range(d):
        for l in range(d):
            for s, c in A.entries[k][l].terms.items():
                su, sz = split.split(s)
                for y in fs.cosets:
                    x = tuple(a + b for a, b in zip(y, sz))
                    if x not in X:
                        continue
                    for v in us:
                        entries.append((idx[(x, mul(su, v), k)], idx[(y, v, l)], c))

    def class_map(nf):
        u, z = split.split(nf)
        if any(z):
            raise SchemeError(
                f"tracked element {A.group.format_nf(nf)} is not in U; compression only approximates "
                "coefficients at elements of the finite-conjugacy center of U (without C(G) in C(U) the "
                "approximation holds only for g in C(U))")
        return u

    return FiniteRealization(COMPRESSION, fs.index if index is None else index, labels, d, Ugrp,
                             [lab[1] for lab in labels], Fraction(1, len(fs)),
                             Fraction(1, len(fs) * len(us)), entries, kappa(A).kappa,
                             class_map=class_map)


def check_tracked_in_center_of_U(A: RingMatrix, classes: Sequence[ConjugacyClassInfo]) -> None:
    """Reject tracked classes outside U for compressions, naming the C(U) restriction."""
    split = split_finite_free(A.group)
    for cls in classes:
        u, z = split.split(cls.representative.nf)
        if any(z):
            raise SchemeError(
                f"tracked element {cls.representative} is not in U: the compression scheme approximates "
                "delocalized coefficients only for g in C(U)")


def build_stages(A: RingMatrix, scheme) -> list[FiniteRealization]:
    if isinstance(scheme, InverseLimit):
        return [build_inverse_limit_stage(A, p, i) for i, p in enumerate(scheme.quotients)]
    if isinstance(scheme, DirectLimit):
        return [build_direct_limit_stage(A, scheme, i) for i in range(len(scheme))]
    if isinstance(scheme, FolnerCompression):
        return [build_folner_compression(A, fs, scheme.U, i) for i, fs in enumerate(scheme.exhaustion)]
    raise SchemeError(f"unknown scheme {scheme!r}")


def build_stage(A: RingMatrix, scheme, i: int) -> FiniteRealization:
    if isinstance(scheme, InverseLimit):
        return build_inverse_limit_stage(A, scheme.quotients[i], i)
    if isinstance(scheme, DirectLimit):
        return build_direct_limit_stage(A, scheme, i)
    if isinstance(scheme, FolnerCompression):
        return build_folner_compression(A, scheme.exhaustion[i], scheme.U, i)
    raise SchemeError(f"unknown scheme {scheme!r}")


# -- trace convergence -------------------------------------------------------


def quotient_support_radius(A: RingMatrix) -> int:
    """Largest l1 length of the Z^r part over the support of A (distance in G/U)."""
    split = split_finite_free(A.group)
    return max((sum(abs(a) for a in split.split(s)[1]) for s in A.support()), default=0)


@dataclass(frozen=True)
class TelescopeCheck:
    power: int
    stage_value: complex
    limit_value: complex
    difference: float
    radius: int
    boundary_ratio: float
    constant: float
    bound: float
    kind: str

    @property
    def passed(self) -> bool:
        return self.difference <= self.bound + 1e-9


def telescope_constant(kap: float, n: int) -> float:
    """c_n = 2n max_j kappa^j kappa^(n-j) = 2n kappa^n (kappa(A*) = kappa(A))."""
    return 2 * n * kap ** n


def trace_convergence_check(A: RingMatrix, fs: FolnerSet, n: int,
                            cls: ConjugacyClassInfo | None = None, part: str = "re") -> TelescopeCheck:
    """Compare the normalized trace of (P A P)^n with tr(A^n) against c_n |N_R(X)|/|X|."""
    from .ring import trace_deviated as ring_deviated, trace_standard
    H = build_folner_compression(A, fs)
    An = A.power(n)
    Mn = np.linalg.matrix_power(H.matrix, n)
    if cls is None:
        stage = H.trace(Mn)
        limit = complex(trace_standard(An))
        kind = "standard"
    else:
        check_tracked_in_center_of_U(A, [cls])
        ucls = H.class_image(cls)
        stage = H.trace_deviated(ucls, part, Mn)
        limit = complex(ring_deviated(An, cls, part))
        kind = f"{part}({cls.representative})"
    R = quotient_support_radius(An)
    ratio = defect(fs, R)
    c = telescope_constant(kappa(A).kappa, n)
    return TelescopeCheck(n, stage, limit, abs(stage - limit), R, ratio, c, c * ratio, kind)
