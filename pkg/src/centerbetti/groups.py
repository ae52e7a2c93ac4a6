"""Finitely described groups: finite tables, free abelian groups, free groups
and direct products of these.

Elements are stored as kind-specific normal forms (an int for table groups,
an exponent tuple for free abelian groups, a freely reduced tuple of signed
letters for free groups, a tuple of component normal forms for products).
Hot loops work on normal forms directly through the descriptor methods;
:class:`GroupElement` wraps a normal form together with its group for the
public API.
"""

from __future__ import annotations

import itertools
import math
import re
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Hashable, Iterable, Iterator, Sequence

TABLE = "table"
ABELIAN = "abelian"
FREE = "free"
PRODUCT = "product"

_TOKEN = re.compile(r"([A-Za-z_][A-Za-z_0-9]*)(?:\^\(?([+-]?\d+)\)?)?")


class GroupError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GroupDescriptor:
    """A finitely described group.

    ``kind`` is one of ``"table"``, ``"abelian"``, ``"free"``, ``"product"``.
    Table groups either carry an explicit multiplication table or, for cyclic
    groups, the order alone (``cyclic_order``); the law is then addition mod n
    and the table is only materialized on request.
    """

    kind: str
    generators: tuple[str, ...]
    table: tuple[tuple[int, ...], ...] | None = None
    identity_index: int = 0
    generator_elements: tuple[int, ...] = ()
    cyclic_order: int | None = None
    components: tuple["GroupDescriptor", ...] = ()
    name: str = ""

    def __post_init__(self):
        if not self.generators:
            raise GroupError("generator list must be nonempty")
        if len(set(self.generators)) != len(self.generators):
            raise GroupError(f"duplicate generator names in {self.generators}")
        if self.kind == TABLE:
            if self.table is None and self.cyclic_order is None:
                raise GroupError("table group needs a multiplication table or a cyclic order")
            if len(self.generator_elements) != len(self.generators):
                raise GroupError("every table generator needs an element index")
        elif self.kind == PRODUCT:
            if not self.components:
                raise GroupError("direct product needs components")
            names = tuple(itertools.chain.from_iterable(c.generators for c in self.components))
            if names != self.generators:
                raise GroupError("product generators must be the concatenated component generators")
        elif self.kind not in (ABELIAN, FREE):
            raise GroupError(f"unknown group kind {self.kind!r}")

    # -- identity / equality ------------------------------------------------

    @cached_property
    def _key(self) -> tuple:
        if self.kind == TABLE:
            body = ("cyclic", self.cyclic_order) if self.table is None else self.table
            return (TABLE, self.generators, body, self.identity_index, self.generator_elements)
        if self.kind == PRODUCT:
            return (PRODUCT, tuple(c._key for c in self.components))
        return (self.kind, self.generators)

    @cached_property
    def _hash(self) -> int:
        return hash(self._key)

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, GroupDescriptor):
            return NotImplemented
        return self._hash == other._hash and self._key == other._key

    def __hash__(self):
        return self._hash

    def __repr__(self):
        if self.name:
            return f"GroupDescriptor({self.name})"
        return f"GroupDescriptor({self.kind}, {self.generators})"

    @property
    def rank(self) -> int:
        return len(self.generators)

    @property
    def is_finite(self) -> bool:
        if self.kind == TABLE:
            return True
        if self.kind == PRODUCT:
            return all(c.is_finite for c in self.components)
        return False

    @property
    def is_abelian(self) -> bool:
        if self.kind == ABELIAN:
            return True
        if self.kind == FREE:
            return self.rank == 1
        if self.kind == PRODUCT:
            return all(c.is_abelian for c in self.components)
        if self.cyclic_order is not None:
            return True
        return all(self.mul_nf(a, b) == self.mul_nf(b, a) for a in self.elements_nf() for b in self.elements_nf())

    def order(self) -> int:
        if self.kind == TABLE:
            return self.cyclic_order if self.table is None else len(self.table)
        if self.kind == PRODUCT:
            return math.prod(c.order() for c in self.components)
        raise GroupError(f"{self!r} is infinite")

    # -- normal form arithmetic --------------------------------------------

    def identity_nf(self) -> Hashable:
        if self.kind == TABLE:
            return self.identity_index
        if self.kind == ABELIAN:
            return (0,) * self.rank
        if self.kind == FREE:
            return ()
        return tuple(c.identity_nf() for c in self.components)

    def mul_nf(self, x, y):
        kind = self.kind
        if kind == TABLE:
            if self.table is None:
                return (x + y) % self.cyclic_order
            return self.table[x][y]
        if kind == ABELIAN:
            return tuple(a + b for a, b in zip(x, y))
        if kind == FREE:
            return _free_reduce_concat(x, y)
        return tuple(c.mul_nf(a, b) for c, a, b in zip(self.components, x, y))

    def inv_nf(self, x):
        kind = self.kind
        if kind == TABLE:
            if self.table is None:
                return (-x) % self.cyclic_order
            return self._inverse_table[x]
        if kind == ABELIAN:
            return tuple(-a for a in x)
        if kind == FREE:
            return tuple(-a for a in reversed(x))
        return tuple(c.inv_nf(a) for c, a in zip(self.components, x))

    def pow_nf(self, x, n: int):
        if n < 0:
            x, n = self.inv_nf(x), -n
        if self.kind == ABELIAN:
            return tuple(a * n for a in x)
        if self.kind == TABLE and self.table is None:
            return (x * n) % self.cyclic_order
        result = self.identity_nf()
        while n:
            if n & 1:
                result = self.mul_nf(result, x)
            x = self.mul_nf(x, x)
            n >>= 1
        return result

    def generator_nf(self, i: int, exponent: int = 1):
        """Normal form of the i-th generator raised to ``exponent``."""
        if self.kind == TABLE:
            return self.pow_nf(self.generator_elements[i], exponent)
        if self.kind == ABELIAN:
            return tuple(exponent if j == i else 0 for j in range(self.rank))
        if self.kind == FREE:
            letter = i + 1 if exponent > 0 else -(i + 1)
            return (letter,) * abs(exponent)
        offset = 0
        parts = []
        for c in self.components:
            if offset <= i < offset + c.rank:
                parts.append(c.generator_nf(i - offset, exponent))
            else:
                parts.append(c.identity_nf())
            offset += c.rank
        return tuple(parts)

    def is_identity_nf(self, x) -> bool:
        return x == self.identity_nf()

    def elements_nf(self) -> Iterator:
        if self.kind == TABLE:
            return iter(range(self.order()))
        if self.kind == PRODUCT:
            return itertools.product(*(list(c.elements_nf()) for c in self.components))
        raise GroupError(f"cannot enumerate the infinite group {self!r}")

    @cached_property
    def _inverse_table(self) -> tuple[int, ...]:
        e = self.identity_index
        inv = [None] * len(self.table)
        for a, row in enumerate(self.table):
            for b, c in enumerate(row):
                if c == e:
                    inv[a] = b
                    break
        if any(v is None for v in inv):
            raise GroupError("table has elements without inverse")
        return tuple(inv)

    # -- words --------------------------------------------------------------

    def word_of(self, x) -> list[tuple[int, int]]:
        """A shortest word for ``x`` as syllables ``(generator index, exponent)``.

        The word ``[(i1, e1), (i2, e2), ...]`` represents ``s_i1^e1 * s_i2^e2 * ...``.
        """
        kind = self.kind
        if kind == ABELIAN:
            return [(i, e) for i, e in enumerate(x) if e]
        if kind == FREE:
            syllables: list[tuple[int, int]] = []
            for letter in x:
                i, e = abs(letter) - 1, (1 if letter > 0 else -1)
                if syllables and syllables[-1][0] == i:
                    syllables[-1] = (i, syllables[-1][1] + e)
                else:
                    syllables.append((i, e))
            return syllables
        if kind == TABLE:
            return list(self._bfs_words[x])
        out = []
        offset = 0
        for c, part in zip(self.components, x):
            out.extend((i + offset, e) for i, e in c.word_of(part))
            offset += c.rank
        return out

    def length_nf(self, x) -> int:
        """Word length with respect to the generators and their inverses."""
        kind = self.kind
        if kind == ABELIAN:
            return sum(abs(a) for a in x)
        if kind == FREE:
            return len(x)
        if kind == TABLE:
            if self.table is None:
                n = self.cyclic_order
                g = self.generator_elements
                if len(g) == 1 and math.gcd(g[0], n) == 1:
                    k = (x * pow(g[0], -1, n)) % n if n > 1 else 0
                    return min(k, n - k)
            return self._bfs_distance[x]
        return sum(c.length_nf(a) for c, a in zip(self.components, x))

    @cached_property
    def _bfs(self) -> tuple[dict, dict]:
        e = self.identity_nf()
        dist = {e: 0}
        words: dict = {e: ()}
        queue = deque([e])
        gens = [(i, s) for i in range(self.rank) for s in (1, -1)]
        while queue:
            x = queue.popleft()
            for i, s in gens:
                y = self.mul_nf(x, self.generator_nf(i, s))
                if y not in dist:
                    dist[y] = dist[x] + 1
                    words[y] = words[x] + ((i, s),)
                    queue.append(y)
        if len(dist) != self.order():
            raise GroupError(f"generators of {self!r} do not generate the group")
        return dist, words

    @property
    def _bfs_distance(self) -> dict:
        return self._bfs[0]

    @property
    def _bfs_words(self) -> dict:
        return self._bfs[1]

    def nf_from_word(self, syllables: Iterable[tuple[int, int]]):
        x = self.identity_nf()
        for i, e in syllables:
            x = self.mul_nf(x, self.generator_nf(i, e))
        return x

    def parse(self, text: str) -> "GroupElement":
        """Parse a word such as ``"t u^-2"``, ``"a*b^-1"``, ``"e"`` or ``"1"``."""
        text = text.strip()
        if text in ("", "e", "1", "id"):
            return GroupElement(self, self.identity_nf())
        index = {name: i for i, name in enumerate(self.generators)}
        syllables = []
        pos = 0
        stripped = text.replace("*", " ")
        for match in _TOKEN.finditer(stripped):
            gap = stripped[pos:match.start()]
            if gap.strip():
                raise GroupError(f"cannot parse {gap.strip()!r} in word {text!r}")
            pos = match.end()
            name, exp = match.group(1), match.group(2)
            if name not in index:
                raise GroupError(f"unknown generator {name!r} in word {text!r}; known: {self.generators}")
            syllables.append((index[name], int(exp) if exp is not None else 1))
        if stripped[pos:].strip():
            raise GroupError(f"cannot parse {stripped[pos:].strip()!r} in word {text!r}")
        return GroupElement(self, self.nf_from_word(syllables))

    def format_nf(self, x) -> str:
        syllables = self.word_of(x)
        if not syllables:
            return "e"
        return " ".join(self.generators[i] if e == 1 else f"{self.generators[i]}^{e}" for i, e in syllables)

    def element(self, nf) -> "GroupElement":
        return GroupElement(self, nf)

    def identity(self) -> "GroupElement":
        return GroupElement(self, self.identity_nf())

    def elements(self) -> list["GroupElement"]:
        return [GroupElement(self, x) for x in self.elements_nf()]

    # -- validation ---------------------------------------------------------

    def validate(self) -> None:
        """Exhaustive check of the group axioms for table groups (recursively for products)."""
        if self.kind == PRODUCT:
            for c in self.components:
                c.validate()
            return
        if self.kind != TABLE or self.table is None:
            return
        n = len(self.table)
        t = self.table
        if any(len(row) != n for row in t):
            raise GroupError("multiplication table must be square")
        if any(not 0 <= c < n for row in t for c in row):
            raise GroupError("multiplication table is not closed")
        e = self.identity_index
        if any(t[e][a] != a or t[a][e] != a for a in range(n)):
            raise GroupError(f"element {e} is not a two-sided identity")
        self._inverse_table  # raises if some element has no inverse
        for a in range(n):
            ta = t[a]
            for b in range(n):
                tab = ta[b]
                for c in range(n):
                    if t[tab][c] != ta[t[b][c]]:
                        raise GroupError(f"table is not associative at ({a}, {b}, {c})")
        self._bfs  # raises if the generators do not generate


@dataclass(frozen=True)
class GroupElement:
    group: GroupDescriptor
    nf: Hashable

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return mul(self, other)

    def inverse(self) -> "GroupElement":
        return GroupElement(self.group, self.group.inv_nf(self.nf))

    def is_identity(self) -> bool:
        return self.group.is_identity_nf(self.nf)

    def __str__(self):
        return self.group.format_nf(self.nf)


def _free_reduce_concat(x: tuple, y: tuple) -> tuple:
    i = 0
    n = min(len(x), len(y))
    while i < n and x[len(x) - 1 - i] == -y[i]:
        i += 1
    return x[: len(x) - i] + y[i:]


# -- constructors ---------------------------------------------------------


def free_abelian(generators: Sequence[str] | int = ("u",)) -> GroupDescriptor:
    if isinstance(generators, int):
        generators = tuple(f"x{i}" for i in range(generators))
    return GroupDescriptor(ABELIAN, tuple(generators), name=f"Z^{len(generators)}")


def free_group(generators: Sequence[str] | int = ("a", "b")) -> GroupDescriptor:
    if isinstance(generators, int):
        generators = tuple("abcdefgh"[i] for i in range(generators))
    return GroupDescriptor(FREE, tuple(generators), name=f"F{len(generators)}")


def cyclic(n: int, generator: str = "u") -> GroupDescriptor:
    if n < 1:
        raise GroupError("cyclic group order must be positive")
    return GroupDescriptor(TABLE, (generator,), generator_elements=(1 % n,), cyclic_order=n, name=f"Z/{n}")


def finite_table(table: Sequence[Sequence[int]], generators: dict[str, int] | Sequence[tuple[str, int]],
                 identity: int = 0, name: str = "", validate: bool = True) -> GroupDescriptor:
    items = list(generators.items()) if isinstance(generators, dict) else list(generators)
    g = GroupDescriptor(
        TABLE,
        tuple(k for k, _ in items),
        table=tuple(tuple(int(c) for c in row) for row in table),
        identity_index=identity,
        generator_elements=tuple(int(v) for _, v in items),
        name=name,
    )
    if validate:
        g.validate()
    return g


def symmetric3(generators: tuple[str, str] = ("s", "r")) -> GroupDescriptor:
    """S3 as permutations of {0,1,2}; ``s`` a transposition, ``r`` a 3-cycle."""
    perms = list(itertools.permutations(range(3)))
    index = {p: i for i, p in enumerate(perms)}
    table = [[index[tuple(p[q[k]] for k in range(3))] for q in perms] for p in perms]
    return finite_table(table, [(generators[0], index[(1, 0, 2)]), (generators[1], index[(1, 2, 0)])],
                        identity=index[(0, 1, 2)], name="S3")


def direct_product(*components: GroupDescriptor) -> GroupDescriptor:
    comps = tuple(components)
    gens = tuple(itertools.chain.from_iterable(c.generators for c in comps))
    return GroupDescriptor(PRODUCT, gens, components=comps, name=" x ".join(c.name or c.kind for c in comps))


def trivial_group(generator: str = "one") -> GroupDescriptor:
    return cyclic(1, generator)


def is_cyclic_product(g: GroupDescriptor) -> bool:
    """True for implicitly stored cyclic groups and direct products of them."""
    if g.kind == TABLE:
        return g.table is None
    if g.kind == PRODUCT:
        return all(c.kind == TABLE and c.table is None for c in g.components)
    return False


def cyclic_orders(g: GroupDescriptor) -> tuple[int, ...]:
    if g.kind == TABLE and g.table is None:
        return (g.cyclic_order,)
    if is_cyclic_product(g):
        return tuple(c.cyclic_order for c in g.components)
    raise GroupError(f"{g!r} is not a product of cyclic groups")


# -- public operations ----------------------------------------------------


def _check_same(x: GroupElement, y: GroupElement) -> None:
    if x.group != y.group:
        raise GroupError(f"descriptor mismatch: {x.group!r} vs {y.group!r}")


def mul(x: GroupElement, y: GroupElement) -> GroupElement:
    _check_same(x, y)
    return GroupElement(x.group, x.group.mul_nf(x.nf, y.nf))


def word_distance(x: GroupElement, y: GroupElement) -> int:
    """Left-invariant word metric: length of a shortest word for x^-1 y."""
    _check_same(x, y)
    g = x.group
    return g.length_nf(g.mul_nf(g.inv_nf(x.nf), y.nf))


class ClassStatus(Enum):
    FINITE = "finite"
    INFINITE = "infinite"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class ConjugacyClassInfo:
    representative: GroupElement
    elements: frozenset | None
    status: ClassStatus

    @property
    def is_finite(self) -> bool:
        return self.status is ClassStatus.FINITE

    @property
    def size(self) -> int:
        if not self.is_finite:
            raise GroupError(f"class of {self.representative} is {self.status.value}")
        return len(self.elements)

    @property
    def group(self) -> GroupDescriptor:
        return self.representative.group

    def element_nfs(self) -> list:
        if not self.is_finite:
            raise GroupError(f"class of {self.representative} is {self.status.value}")
        return sorted(self.elements, key=repr)

    def inverse(self) -> "ConjugacyClassInfo":
        g = self.group
        rep = self.representative.inverse()
        if not self.is_finite:
            return ConjugacyClassInfo(rep, None, self.status)
        return ConjugacyClassInfo(rep, frozenset(g.inv_nf(x) for x in self.elements), self.status)


def _class_nf(g: GroupDescriptor, x, budget: int) -> tuple[ClassStatus, frozenset | None]:
    if g.is_identity_nf(x):
        return ClassStatus.FINITE, frozenset([x])
    if g.kind == ABELIAN or (g.kind == FREE and g.rank == 1):
        return ClassStatus.FINITE, frozenset([x])
    if g.kind == FREE:
        # nontrivial elements of a free group of rank >= 2 have infinite classes
        return ClassStatus.INFINITE, None
    if g.kind == TABLE:
        if g.table is None:
            return ClassStatus.FINITE, frozenset([x])
        if g.order() > budget:
            return ClassStatus.UNDECIDED, None
        return ClassStatus.FINITE, frozenset(g.mul_nf(g.mul_nf(h, x), g.inv_nf(h)) for h in g.elements_nf())
    parts = []
    for c, a in zip(g.components, x):
        status, elems = _class_nf(c, a, budget)
        if status is not ClassStatus.FINITE:
            return status, None
        parts.append(elems)
    if math.prod(len(p) for p in parts) > budget:
        return ClassStatus.UNDECIDED, None
    return ClassStatus.FINITE, frozenset(itertools.product(*parts))


def conjugacy_class(x: GroupElement, budget: int = 100_000) -> ConjugacyClassInfo:
    """Conjugacy class of ``x``; ``budget`` caps the number of elements enumerated."""
    if budget < 1:
        raise ValueError("budget must be positive")
    status, elems = _class_nf(x.group, x.nf, budget)
    return ConjugacyClassInfo(x, elems, status)


def conjugator_witness(info: ConjugacyClassInfo, member) -> Hashable | None:
    """Some h with h x h^-1 = member (finite groups / abelian singletons only)."""
    g = info.group
    x = info.representative.nf
    if member == x:
        return g.identity_nf()
    if not g.is_finite:
        return None
    for h in g.elements_nf():
        if g.mul_nf(g.mul_nf(h, x), g.inv_nf(h)) == member:
            return h
    return None


# -- homomorphisms --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class QuotientMap:
    """Homomorphism determined by the images of the source generators."""

    source: GroupDescriptor
    target: GroupDescriptor
    images: tuple = field(default=())

    def __post_init__(self):
        if len(self.images) != self.source.rank:
            raise GroupError("need one image per source generator")
        self._validate()

    def _validate(self) -> None:
        s, t = self.source, self.target
        if s.kind == FREE:
            return
        if s.kind == ABELIAN:
            for a, b in itertools.combinations(self.images, 2):
                if t.mul_nf(a, b) != t.mul_nf(b, a):
                    raise GroupError("images of commuting generators must commute")
            return
        if s.kind == TABLE:
            words = s._bfs_words
            phi = {x: self._fold(w) for x, w in words.items()}
            for x in words:
                for i in range(s.rank):
                    y = s.mul_nf(x, s.generator_nf(i))
                    if phi[y] != t.mul_nf(phi[x], self.images[i]):
                        raise GroupError("generator images do not respect the relations of the source table")
            return
        offset = 0
        blocks = []
        for c in s.components:
            sub = self.images[offset: offset + c.rank]
            QuotientMap(c, t, tuple(sub))
            blocks.append(sub)
            offset += c.rank
        for b1, b2 in itertools.combinations(blocks, 2):
            for a in b1:
                for b in b2:
                    if t.mul_nf(a, b) != t.mul_nf(b, a):
                        raise GroupError("images of different product factors must commute")

    def _fold(self, syllables) -> Hashable:
        t = self.target
        y = t.identity_nf()
        for i, e in syllables:
            y = t.mul_nf(y, t.pow_nf(self.images[i], e))
        return y

    def apply_nf(self, x):
        return self._fold(self.source.word_of(x))

    def compose(self, other: "QuotientMap") -> "QuotientMap":
        """``other`` after ``self``."""
        if other.source != self.target:
            raise GroupError("cannot compose: target/source mismatch")
        return QuotientMap(self.source, other.target,
                           tuple(other.apply_nf(img) for img in self.images))


def apply_quotient(p: QuotientMap, x: GroupElement) -> GroupElement:
    if x.group != p.source:
        raise GroupError(f"descriptor mismatch: {x.group!r} is not the source {p.source!r}")
    return GroupElement(p.target, p.apply_nf(x.nf))


def reduction_map(source: GroupDescriptor, n: int) -> QuotientMap:
    """Reduce every free abelian factor of ``source`` modulo n.

    Supports Z^r -> (Z/n)^r and U x Z^r -> U x (Z/n)^r (finite factors kept).
    """
    if source.kind == ABELIAN:
        comps = [cyclic(n, name) for name in source.generators]
        target = comps[0] if len(comps) == 1 else direct_product(*comps)
        if len(comps) == 1:
            images = (1 % n,)
        else:
            images = tuple(target.generator_nf(i) for i in range(source.rank))
        return QuotientMap(source, target, images)
    if source.kind == FREE and source.rank == 1:
        target = cyclic(n, source.generators[0])
        return QuotientMap(source, target, (1 % n,))
    if source.kind == PRODUCT:
        new_components = []
        for c in source.components:
            if c.kind == ABELIAN:
                new_components.extend(cyclic(n, name) for name in c.generators)
            elif c.is_finite:
                new_components.append(c)
            else:
                raise GroupError(f"cannot reduce factor {c!r} modulo {n}")
        target = direct_product(*new_components)
        images = tuple(target.generator_nf(i) for i in range(source.rank))
        return QuotientMap(source, target, images)
    raise GroupError(f"no built-in reduction for {source!r}")
