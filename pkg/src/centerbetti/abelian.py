"""Exact kernel Fourier coefficients over finite abelian groups.

For H = Z/n_1 x ... x Z/n_q the group ring splits along characters:
A maps to the family of d x d matrices A(chi) = sum_s A_s chi(s), and the
kernel projection P has coefficients

    tr P_h = (1/|H|) sum_chi nullity(A(chi)) conj(chi(h)).

With rational coefficients, the nullity is constant on Galois orbits of
characters (characters of the same order m, related by chi -> chi^j with
gcd(j, m) = 1), and summing conj(chi(h)) over an orbit gives the Ramanujan
sum c_m(t), where chi(h) = zeta_m^t.  Everything stays in exact rationals.
"""

from __future__ import annotations

import math
from collections import deque
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .cyclotomic import Cyclotomic, euler_phi, ramanujan_sum
from .groups import GroupDescriptor, cyclic_orders, is_cyclic_product
from .ring import RingMatrix


class NotRationalError(ValueError):
    pass


def _as_tuple(nf) -> tuple:
    return nf if isinstance(nf, tuple) else (nf,)


def _from_tuple(H: GroupDescriptor, t: tuple):
    return t[0] if H.kind != "product" else t


def _rational_terms(B: RingMatrix) -> list[list[list[tuple[tuple, Fraction]]]]:
    out = []
    for row in B.entries:
        out_row = []
        for e in row:
            terms = []
            for s, c in e.terms.items():
                if not isinstance(c, Cyclotomic) or not c.is_rational():
                    raise NotRationalError("character-orbit path needs rational coefficients")
                terms.append((_as_tuple(s), c.to_rational()))
            out_row.append(terms)
        out.append(out_row)
    return out


def _vanishing_orbits(terms, orders: tuple[int, ...], orbits) -> list[bool] | None:
    """Exact zero test of the character values of a 1 x 1 matrix, one flag per orbit.

    With denominators cleared each value is an algebraic integer, and a nonzero
    algebraic integer has norm of absolute value >= 1, so some Galois conjugate
    has modulus >= 1.  An orbit therefore vanishes iff all of its values are
    below 1/2; one FFT over the group gives every value with rounding error far
    below 1/2 while the coefficient weight stays under 1e9.
    """
    D = math.lcm(*(c.denominator for _, c in terms)) if terms else 1
    arr = np.zeros(orders)
    for x, c in terms:
        arr[x] += float(c * D)
    if np.abs(arr).sum() > 1e9:
        return None
    vals = np.abs(np.fft.fftn(arr)).ravel()
    if len(orders) == 1:
        # on Z/n the orbits are the classes of gcd(k, n)
        n = orders[0]
        top = np.zeros(n + 1)
        np.maximum.at(top, np.gcd(np.arange(n), n), vals)
        return [bool(top[n // m] < 0.5) for _, m, _, _ in orbits]
    out = []
    for k, m, _, _ in orbits:
        units = _units(m)
        idx = np.ravel_multi_index(tuple((units * kr) % nr for kr, nr in zip(k, orders)), orders)
        out.append(bool(np.max(vals[idx]) < 0.5))
    return out


def _rank_fraction_free(M: list[list]) -> int:
    """Rank of a small dense matrix over Q(zeta_m) using only ring operations."""
    rows = [list(r) for r in M]
    rank = 0
    ncols = len(rows[0]) if rows else 0
    for col in range(ncols):
        piv = next((i for i in range(rank, len(rows)) if rows[i][col]), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        p = rows[rank]
        for i in range(rank + 1, len(rows)):
            f = rows[i][col]
            if f:
                rows[i] = [p[col] * x - f * y for x, y in zip(rows[i], p)]
        rank += 1
    return rank


@lru_cache(maxsize=4096)
def _units(m: int) -> np.ndarray:
    r = np.arange(m, dtype=np.int64)
    return np.flatnonzero(np.gcd(r, m) == 1) if m > 1 else np.ones(1, dtype=np.int64)


def character_orbits(orders: tuple[int, ...]):
    """Yield (representative k, order m, orbit size) over Galois orbits of characters."""
    N = math.lcm(*orders)
    if len(orders) == 1:
        # on Z/n the orbit of k is fixed by m = n / gcd(k, n); it has phi(m) members
        n = orders[0]
        for m in sorted(_divisors(n)):
            yield (n // m % n,), m, euler_phi(m), N
        return
    total = math.prod(orders)
    seen = bytearray(total)

    def flat(k):
        idx = 0
        for kr, nr in zip(k, orders):
            idx = idx * nr + kr
        return idx

    def unflat(idx):
        k = []
        for nr in reversed(orders):
            k.append(idx % nr)
            idx //= nr
        return tuple(reversed(k))

    for idx in range(total):
        if seen[idx]:
            continue
        k = unflat(idx)
        m = math.lcm(*(nr // math.gcd(nr, kr) for kr, nr in zip(k, orders)))
        size = 0
        for j in _units(m):
            jk = flat(tuple((j * kr) % nr for kr, nr in zip(k, orders)))
            if not seen[jk]:
                seen[jk] = 1
                size += 1
        yield k, m, size, N


def _divisors(n: int) -> list[int]:
    small = [a for a in range(1, math.isqrt(n) + 1) if n % a == 0]
    return sorted(set(small + [n // a for a in small]))


def _char_exponent(k: tuple, x: tuple, orders: tuple, N: int) -> int:
    """chi_k(x) = zeta_N^E."""
    return sum(kr * xr * (N // nr) for kr, xr, nr in zip(k, x, orders)) % N


_RECENT: deque = deque(maxlen=8)


def orbit_nullities(B: RingMatrix) -> tuple[tuple[tuple, int, int, int], ...]:
    """(representative character, order m, orbit size, nullity) for every Galois orbit."""
    # several classes of one stage share B; matrices are unhashable, so match by identity
    for key, value in _RECENT:
        if key is B:
            return value
    value = _orbit_nullities(B)
    _RECENT.append((B, value))
    return value


def _orbit_nullities(B: RingMatrix) -> tuple[tuple[tuple, int, int, int], ...]:
    H = B.group
    if not is_cyclic_product(H):
        raise ValueError(f"{H!r} is not a product of cyclic groups")
    orders = cyclic_orders(H)
    terms = _rational_terms(B)
    d = B.d
    out = []
    orbits = list(character_orbits(orders))
    if d == 1:
        flags = _vanishing_orbits(terms[0][0], orders, orbits)
        if flags is not None:
            return tuple((k, m, size, int(z)) for (k, m, size, _), z in zip(orbits, flags))
    for k, m, size, N in orbits:
        step = N // m
        M = []
        for kk in range(d):
            row = []
            for l in range(d):
                acc: dict[int, Fraction] = {}
                for x, c in terms[kk][l]:
                    e = _char_exponent(k, x, orders, N) // step
                    acc[e] = acc.get(e, 0) + c
                row.append(Cyclotomic(m, acc) if m > 1 else Cyclotomic.rational(sum(acc.values(), Fraction(0))))
            M.append(row)
        out.append((k, m, size, d - _rank_fraction_free(M)))
    return tuple(out)


def kernel_coefficients_exact(B: RingMatrix, elements) -> dict:
    """Exact tr(P_h) (summed over the d diagonal blocks) for each requested h."""
    H = B.group
    orders = cyclic_orders(H)
    N = math.lcm(*orders)
    order = math.prod(orders)
    data = orbit_nullities(B)
    out = {}
    for h in elements:
        x = _as_tuple(h)
        total = 0
        for k, m, size, nul in data:
            if nul:
                e = _char_exponent(k, x, orders, N) // (N // m)
                total += nul * ramanujan_sum(m, e)
        out[h] = Fraction(total, order)
    return out


def kernel_dimension_exact(B: RingMatrix) -> Fraction:
    """Normalized kernel dimension (nullity / |H|)."""
    data = orbit_nullities(B)
    return Fraction(sum(size * nul for _, _, size, nul in data), B.group.order())
