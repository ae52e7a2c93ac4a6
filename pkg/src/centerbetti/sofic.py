"""Edge-labeled graph approximations, transported kernels and det*.

A :class:`LabeledGraph` has one out-edge per generator at every vertex
(``succ[i][y]`` is the vertex s_i y).  A vertex y is good at radius r when
walking words from y embeds the Cayley ball B(r) into the graph: the walk is
injective, every Cayley edge inside B(r) is a graph edge, and the image is the
graph r-ball around y.  The kernel of A on a graph puts the coefficient of g
in A_kl at ((psi_y(g), k), (y, l)) for good y, where psi_y(g) is the endpoint
of the walk of g from y; columns of bad vertices vanish.

Built-in families are Cayley graphs of finite quotients (cycles, tori,
finite groups, U x (Z/n)^r); a plain-text format covers arbitrary graphs.
"""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .approximation import FiniteRealization
from .cyclotomic import Cyclotomic
from .exact import charpoly_integer, integer_rows, lowest_nonzero, normalize_entry, realify_integer
from .groups import ABELIAN, FREE, PRODUCT, GroupDescriptor, QuotientMap, reduction_map, trivial_group
from .ring import RingMatrix, kappa
from .spectral import SpectralError, fuglede_kadison, spectral_data, zero_threshold

SOFIC = "sofic"
CERTIFICATE_LIMIT = 512


class SoficError(ValueError):
    pass


# -- Cayley balls -------------------------------------------------------------


@dataclass(frozen=True)
class CayleyBall:
    """B(r) in BFS order; element a > 0 is s_gen[a]^sign[a] times element parent[a]."""

    group: GroupDescriptor
    radius: int
    elements: tuple
    parent: np.ndarray
    gen: np.ndarray
    sign: np.ndarray
    edges: tuple  # (a, i, sign, b): s_i^sign * elements[a] == elements[b]

    @cached_property
    def index(self) -> dict:
        return {g: a for a, g in enumerate(self.elements)}


def cayley_ball(G: GroupDescriptor, r: int) -> CayleyBall:
    e = G.identity_nf()
    order = [e]
    index = {e: 0}
    parent, gen, sign = [-1], [-1], [0]
    steps = [(i, s, G.generator_nf(i, s)) for i in range(G.rank) for s in (1, -1)]
    frontier = [e]
    for _ in range(r):
        nxt = []
        for x in frontier:
            for i, s, g in steps:
                y = G.mul_nf(g, x)
                if y not in index:
                    index[y] = len(order)
                    order.append(y)
                    parent.append(index[x])
                    gen.append(i)
                    sign.append(s)
                    nxt.append(y)
        frontier = nxt
    edges = []
    for a, x in enumerate(order):
        for i, s, g in steps:
            b = index.get(G.mul_nf(g, x))
            if b is not None:
                edges.append((a, i, s, b))
    return CayleyBall(G, r, tuple(order), np.array(parent), np.array(gen), np.array(sign), tuple(edges))


# -- labeled graphs -----------------------------------------------------------


@dataclass(eq=False)
class LabeledGraph:
    """Directed graph with one s-labeled out-edge per vertex and generator.

    ``succ[i, y]`` is the s_i-neighbour of y (-1 if missing).  ``good`` is the
    certified set V0 at radius ``radius``.
    """

    group: GroupDescriptor
    succ: np.ndarray
    radius: int
    good: np.ndarray
    vertex_names: list | None = None
    family: str = ""
    delta_declared: float | None = None

    def __post_init__(self):
        if self.succ.shape[0] != self.group.rank:
            raise SoficError(f"graph has {self.succ.shape[0]} labels, the group {self.group.rank} generators")
        if self.delta_declared is not None and len(self.good) < (1 - self.delta_declared) * self.size - 1e-9:
            raise SoficError(f"|V0| = {len(self.good)} < (1 - {self.delta_declared}) |V|")

    @property
    def size(self) -> int:
        return self.succ.shape[1]

    @property
    def delta(self) -> float:
        return 1.0 - len(self.good) / self.size if self.size else 0.0

    @cached_property
    def is_permutation(self) -> bool:
        n = self.size
        return all(np.array_equal(np.sort(row), np.arange(n)) for row in self.succ)

    @cached_property
    def pred(self) -> np.ndarray:
        out = np.full_like(self.succ, -1)
        for i, row in enumerate(self.succ):
            ok = row >= 0
            out[i, row[ok]] = np.nonzero(ok)[0]
        return out

    def step(self, i: int, s: int, v: np.ndarray) -> np.ndarray:
        table = self.succ[i] if s > 0 else self.pred[i]
        out = np.full_like(v, -1)
        ok = v >= 0
        out[ok] = table[v[ok]]
        return out

    def neighbours(self, v: int) -> set:
        out = set()
        for i in range(self.succ.shape[0]):
            if self.succ[i, v] >= 0:
                out.add(int(self.succ[i, v]))
            out.update(int(w) for w in np.nonzero(self.succ[i] == v)[0])
        return out

    def graph_ball(self, v: int, r: int) -> set:
        seen = {v}
        frontier = [v]
        for _ in range(r):
            nxt = []
            for x in frontier:
                for y in self.neighbours(x):
                    if y not in seen:
                        seen.add(y)
                        nxt.append(y)
            frontier = nxt
        return seen


def walk_table(graph: LabeledGraph, ball: CayleyBall, roots: np.ndarray | None = None) -> np.ndarray:
    """psi[a, j] = endpoint of the walk of ball element a from roots[j] (-1 if it leaves the graph)."""
    roots = np.arange(graph.size) if roots is None else np.asarray(roots)
    psi = np.empty((len(ball.elements), len(roots)), dtype=np.int64)
    psi[0] = roots
    for a in range(1, len(ball.elements)):
        psi[a] = graph.step(int(ball.gen[a]), int(ball.sign[a]), psi[ball.parent[a]])
    return psi


def ball_certificate(graph: LabeledGraph, r: int) -> np.ndarray:
    """Boolean mask of the vertices whose r-ball matches B(r)."""
    ball = cayley_ball(graph.group, r)
    psi = walk_table(graph, ball)
    ok = np.all(psi >= 0, axis=0)
    srt = np.sort(psi, axis=0)
    ok &= np.all(srt[1:] != srt[:-1], axis=0) if len(ball.elements) > 1 else True
    for a, i, s, b in ball.edges:
        ok &= graph.step(i, s, psi[a]) == psi[b]
    if not graph.is_permutation:
        # with non-bijective labels the graph ball can contain vertices no walk reaches
        for y in np.nonzero(ok)[0]:
            ok[y] = len(graph.graph_ball(int(y), r)) == len(ball.elements)
    return ok


def certify(group: GroupDescriptor, succ: np.ndarray, r: int, claimed=None, **kw) -> LabeledGraph:
    probe = LabeledGraph(group, succ, r, np.arange(succ.shape[1]))
    mask = ball_certificate(probe, r)
    if claimed is not None:
        claimed = np.asarray(sorted(set(int(v) for v in claimed)), dtype=np.int64)
        bad = claimed[~mask[claimed]] if len(claimed) else claimed
        if len(bad):
            raise SoficError(f"claimed good vertices fail the radius-{r} ball check: {bad[:10].tolist()}")
        good = claimed
    else:
        good = np.nonzero(mask)[0]
    return LabeledGraph(group, succ, r, good, **kw)


def quotient_graph(p: QuotientMap, radius: int = 1, family: str = "") -> LabeledGraph:
    """Cayley graph of the finite target of p with labels s_i -> p(s_i)."""
    H = p.target
    elements = list(H.elements_nf())
    idx = {h: j for j, h in enumerate(elements)}
    succ = np.empty((p.source.rank, len(elements)), dtype=np.int64)
    for i in range(p.source.rank):
        s = p.images[i]
        succ[i] = [idx[H.mul_nf(s, h)] for h in elements]
    return certify(p.source, succ, radius, vertex_names=elements, family=family)


def _is_free_abelian_like(G: GroupDescriptor) -> bool:
    return G.kind == ABELIAN or (G.kind == FREE and G.rank == 1)


def build_sofic_stage(G: GroupDescriptor, family: str, size: int | None = None, radius: int = 1,
                      path: str | Path | None = None) -> LabeledGraph:
    """Built-in families: cycle (Z), torus (Z^r or U x Z^r), cayley (finite G), file."""
    if family == "file":
        if path is None:
            raise SoficError("family 'file' needs a path")
        return load_graph(G, path, radius)
    if family == "cayley":
        if not G.is_finite:
            raise SoficError(f"the Cayley family needs a finite group, got {G!r}")
        p = QuotientMap(G, G, tuple(G.generator_nf(i) for i in range(G.rank)))
        return quotient_graph(p, radius, family)
    if size is None or size < 1:
        raise SoficError(f"family {family!r} needs a positive size")
    if family == "cycle":
        if not (_is_free_abelian_like(G) and G.rank == 1):
            raise SoficError(f"cycles approximate Z only, got {G!r}")
        return quotient_graph(reduction_map(G, size), radius, family)
    if family == "torus":
        if not (G.kind == ABELIAN or G.kind == PRODUCT):
            raise SoficError(f"tori approximate Z^r and U x Z^r, got {G!r}")
        return quotient_graph(reduction_map(G, size), radius, family)
    raise SoficError(f"unsupported sofic family {family!r}")


def corrupt_graph(graph: LabeledGraph, swaps: int, seed: int = 0, radius: int | None = None) -> LabeledGraph:
    """Swap the s-targets of random vertex pairs and recertify (labels stay bijective)."""
    rng = random.Random(seed)
    succ = graph.succ.copy()
    for _ in range(swaps):
        i = rng.randrange(succ.shape[0])
        a, b = rng.sample(range(graph.size), 2)
        succ[i, a], succ[i, b] = succ[i, b], succ[i, a]
    r = graph.radius if radius is None else radius
    return certify(graph.group, succ, r, vertex_names=graph.vertex_names, family=graph.family + "+corrupted")


# -- text format ----------------------------------------------------------------


def parse_graph(G: GroupDescriptor, text: str, radius: int = 1) -> LabeledGraph:
    """Read ``vertices N``, ``edge a LABEL b`` lines and an optional ``good v1 v2 ...`` line."""
    n = None
    edges = []
    claimed = None
    delta = None
    names = {name: i for i, name in enumerate(G.generators)}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        try:
            if head == "vertices":
                n = int(rest[0])
            elif head == "edge":
                a, label, b = rest
                if label not in names:
                    raise SoficError(f"unknown label {label!r}")
                edges.append((int(a), names[label], int(b)))
            elif head == "good":
                claimed = [int(v) for v in rest]
            elif head == "delta":
                delta = float(rest[0])
            else:
                raise SoficError(f"unknown directive {head!r}")
        except (ValueError, IndexError) as exc:
            raise SoficError(f"line {lineno}: {exc}") from None
    if n is None:
        raise SoficError("missing 'vertices' line")
    succ = np.full((G.rank, n), -1, dtype=np.int64)
    for a, i, b in edges:
        if not (0 <= a < n and 0 <= b < n):
            raise SoficError(f"edge {a} -> {b} outside 0..{n - 1}")
        if succ[i, a] >= 0 and succ[i, a] != b:
            raise SoficError(f"vertex {a} has two {G.generators[i]}-edges")
        succ[i, a] = b
    return certify(G, succ, radius, claimed, family="file", delta_declared=delta)


def load_graph(G: GroupDescriptor, path, radius: int = 1) -> LabeledGraph:
    return parse_graph(G, Path(path).read_text(), radius)


def format_graph(graph: LabeledGraph) -> str:
    lines = [f"vertices {graph.size}"]
    for i, name in enumerate(graph.group.generators):
        for a, b in enumerate(graph.succ[i]):
            if b >= 0:
                lines.append(f"edge {a} {name} {b}")
    lines.append("good " + " ".join(str(int(v)) for v in graph.good))
    return "\n".join(lines) + "\n"


# -- kernels --------------------------------------------------------------------


@dataclass(eq=False)
class SoficKernel:
    """K[(x,k),(y,l)] on V x {0..d-1}, stored as sparse (row, col, coefficient) entries."""

    graph: LabeledGraph
    d: int
    entries: list
    width: int
    kappa_bound: float
    symmetric: bool = False

    @property
    def dim(self) -> int:
        return self.graph.size * self.d

    @cached_property
    def realization(self) -> FiniteRealization:
        labels = [(v, k) for v in range(self.graph.size) for k in range(self.d)]
        n = self.graph.size
        return FiniteRealization(SOFIC, n, labels, self.d, trivial_group(), list(range(n)), Fraction(1),
                                 Fraction(1, n), self.entries, self.kappa_bound,
                                 class_map=lambda nf: trivial_group().identity_nf())

    @property
    def matrix(self) -> np.ndarray:
        return self.realization.matrix

    def is_exact(self) -> bool:
        return self.realization.is_exact()

    def exact_rows(self) -> list[dict]:
        return self.realization.exact_rows()


def sofic_kernel(A: RingMatrix, graph: LabeledGraph, symmetric: bool = False) -> SoficKernel:
    """Transport the coefficients of A along the ball maps of the good vertices.

    With ``symmetric`` the rows of bad vertices are zeroed as well, which keeps
    a Hermitian A Hermitian when some balls are broken.
    """
    width = A.support_radius()
    if width > graph.radius:
        raise SoficError(f"width {width} of A exceeds the certified radius {graph.radius}")
    if A.group != graph.group:
        raise SoficError("graph and matrix live over different groups")
    ball = cayley_ball(A.group, width)
    good = np.asarray(graph.good, dtype=np.int64)
    psi = walk_table(graph, ball, good)
    keep = np.zeros(graph.size, dtype=bool)
    keep[good] = True
    d = A.d
    entries = []
    for k in range(d):
        for l in range(d):
            for g, c in A.entries[k][l].terms.items():
                xs = psi[ball.index[g]]
                for x, y in zip(xs.tolist(), good.tolist()):
                    if symmetric and not keep[x]:
                        continue
                    entries.append((x * d + k, y * d + l, c))
    entries.sort(key=lambda t: (t[0], t[1]))
    return SoficKernel(graph, d, entries, width, kappa(A).kappa, symmetric)


# -- det* -------------------------------------------------------------------------


@dataclass(frozen=True)
class DetStar:
    log_value: float
    rank: int
    certificate: int | None
    certificate_kind: str | None
    note: str = ""

    @property
    def value(self) -> float:
        return math.exp(self.log_value) if self.log_value < 700 else math.inf

    @property
    def certified_positive(self) -> bool:
        return self.certificate is not None and self.certificate > 0


def _entries_of(K) -> tuple[np.ndarray, list[dict] | None, float]:
    if isinstance(K, SoficKernel):
        rows = K.exact_rows() if K.is_exact() else None
        return K.matrix, rows, K.kappa_bound
    if isinstance(K, FiniteRealization):
        rows = K.exact_rows() if K.is_exact() else None
        return K.matrix, rows, K.kappa_bound
    M = [list(r) for r in K]
    exact = all(isinstance(v, (int, Fraction, Cyclotomic)) for r in M for v in r)
    rows = [{j: normalize_entry(v) for j, v in enumerate(r) if v} for r in M] if exact else None
    F = np.array([[complex(v) for v in r] for r in M])
    if not np.any(F.imag):
        F = F.real
    return F, rows, float(np.max(np.abs(F).sum(axis=1))) if F.size else 0.0


def _conductor(rows: list[dict]) -> int:
    n = 1
    for r in rows:
        for v in r.values():
            if isinstance(v, Cyclotomic) and not v.is_rational():
                n = math.lcm(n, v.n)
    return n


def det_star(K, tau: float | None = None, certificate_limit: int = CERTIFICATE_LIMIT) -> DetStar:
    """Product of eigenvalues > tau, with an exact lowest-coefficient certificate when possible.

    Integer entries give |c| = det* with c the lowest nonzero coefficient of
    det(x - K).  Entries in Z[zeta_n] are replaced by their multiplication
    matrices first; the certificate is then the product of det* over all
    Galois conjugates of K (``certificate_kind == "galois_sum"``).
    """
    M, rows, kap = _entries_of(K)
    n = M.shape[0]
    tau = zero_threshold(kap) if tau is None else tau
    if n and np.max(np.abs(M - M.conj().T)) > 1e-12:
        raise SpectralError("det* needs a Hermitian matrix")
    w = np.linalg.eigvalsh(M) if n else np.zeros(0)
    if n and w[0] < -tau:
        raise SpectralError(f"negative eigenvalue {w[0]:.3e} below -tau")
    pos = w[w > tau]
    logv = float(np.sum(np.log(pos)))
    cert = kind = None
    note = ""
    if rows is not None:
        cond = _conductor(rows)
        try:
            if cond == 1:
                if n <= certificate_limit:
                    coeffs = charpoly_integer(integer_rows(rows, n), psd=True)
                    k, c = lowest_nonzero(coeffs)
                    cert, kind = abs(c), "integer"
                    if n - k != len(pos):
                        note = f"exact rank {n - k} differs from float rank {len(pos)}"
                else:
                    note = f"size {n} above the certificate limit {certificate_limit}"
            else:
                R = realify_integer(rows, n, cond)
                if len(R) <= certificate_limit:
                    coeffs = charpoly_integer(R)
                    cert, kind = abs(lowest_nonzero(coeffs)[1]), "galois_sum"
                else:
                    note = f"realified size {len(R)} above the certificate limit {certificate_limit}"
        except ValueError as exc:
            note = f"no integer certificate: {exc}"
    return DetStar(logv, len(pos), cert, kind, note)


# -- limits -----------------------------------------------------------------------


@dataclass(frozen=True)
class SoficStageRow:
    size: int
    delta: float
    lndet: float
    det: DetStar

    @property
    def nonnegative(self) -> bool:
        """Certified ln det* / |V| >= 0 (integer coefficients only)."""
        return self.det.certificate_kind == "integer" and self.det.certificate >= 1


@dataclass(frozen=True)
class SoficLndetReport:
    rows: list
    oracle: object = None

    @property
    def values(self) -> list[float]:
        return [r.lndet for r in self.rows]

    def deltas(self) -> list[float] | None:
        if self.oracle is None:
            return None
        return [abs(v - float(self.oracle.value)) for v in self.values]


def sofic_lndet_limit(A: RingMatrix, stages: Sequence[LabeledGraph], oracle_grid: int | None = None,
                      certificate_limit: int = CERTIFICATE_LIMIT) -> SoficLndetReport:
    """ln det*(K_A on V_m) / |V_m| for every stage, and the oracle value of lndet A if requested."""
    rows = []
    for graph in stages:
        K = sofic_kernel(A, graph, symmetric=True)
        D = det_star(K, certificate_limit=certificate_limit)
        rows.append(SoficStageRow(graph.size, graph.delta, D.log_value / graph.size, D))
    oracle = None
    if oracle_grid:
        from .oracle import oracle_lndet
        oracle = oracle_lndet(A, oracle_grid)
    return SoficLndetReport(rows, oracle)


def sofic_lndet(K: SoficKernel) -> float:
    """Normalized Fuglede-Kadison determinant of a kernel (floating eigenvalues)."""
    return fuglede_kadison(spectral_data(K.realization))


@dataclass(frozen=True)
class GaloisSumCheck:
    conjugate_lndets: dict
    total: float
    certificate_log: float | None
    stage_error: float
    lndet: float
    bound: float

    @property
    def passed(self) -> bool:
        ok = self.total >= -self.stage_error
        ok &= self.lndet >= self.bound - self.stage_error
        if self.certificate_log is not None:
            ok &= abs(self.certificate_log - self.total) <= max(self.stage_error, 1e-6)
        return ok


def galois_sum_check(A: RingMatrix, graph: LabeledGraph, stage_error: float = 1e-8) -> GaloisSumCheck:
    """Per-stage sum over Galois conjugates of sum ln|lambda| / |V| and the bound -d sum ln kappa."""
    from .cyclotomic import units_mod
    from .ring import determinant_lower_bound_rhs, galois_conjugate
    n = A.conductor()
    vals = {}
    for j in (units_mod(n) if n > 1 else [1]):
        M = sofic_kernel(galois_conjugate(A, j) if n > 1 else A, graph, symmetric=True).matrix
        w = np.abs(np.linalg.eigvalsh(M))
        tau = zero_threshold(kappa(A).kappa)
        vals[j] = float(np.sum(np.log(w[w > tau]))) / graph.size
    total = sum(vals.values())
    K = sofic_kernel(A, graph, symmetric=True)
    D = det_star(K)
    cert_log = math.log(D.certificate) / graph.size if D.certificate else None
    bounds = determinant_lower_bound_rhs(A)
    return GaloisSumCheck(vals, total, cert_log, stage_error, vals[1], bounds.B0)
