"""Exact arithmetic in cyclotomic fields Q(zeta_n).

An element is stored in the power basis 1, z, ..., z^(phi(n)-1) of Q(zeta_n)
with :class:`fractions.Fraction` coefficients.  Elements of different
conductors are combined in the field of the lcm conductor.  Rationals are
elements of conductor 1.
"""

from __future__ import annotations

import cmath
import math
import re
from fractions import Fraction
from functools import lru_cache
from typing import Sequence, Union

Number = Union[int, Fraction, "Cyclotomic"]


@lru_cache(maxsize=None)
def cyclotomic_polynomial(n: int) -> tuple[int, ...]:
    """Integer coefficients of Phi_n, lowest degree first."""
    if n < 1:
        raise ValueError("conductor must be positive")
    num = [-1] + [0] * (n - 1) + [1]  # x^n - 1
    for d in range(1, n):
        if n % d == 0:
            num = _poly_divexact_int(num, list(cyclotomic_polynomial(d)))
    return tuple(num)


def _poly_divexact_int(num: list[int], den: list[int]) -> list[int]:
    num = list(num)
    dn = len(den) - 1
    lead = den[-1]
    out = [0] * (len(num) - dn)
    for k in range(len(num) - 1, dn - 1, -1):
        c = num[k]
        if c:
            q, r = divmod(c, lead)
            if r:
                raise ArithmeticError("inexact integer polynomial division")
            out[k - dn] = q
            for j, dj in enumerate(den):
                num[k - dn + j] -= q * dj
    if any(num[:dn]):
        raise ArithmeticError("inexact integer polynomial division")
    return out


def euler_phi(n: int) -> int:
    result = n
    m = n
    p = 2
    while p * p <= m:
        if m % p == 0:
            while m % p == 0:
                m //= p
            result -= result // p
        p += 1
    if m > 1:
        result -= result // m
    return result


def units_mod(n: int) -> list[int]:
    return [j for j in range(1, max(n, 2)) if math.gcd(j, n) == 1] if n > 1 else [1]


def reduce_mod_cyclotomic(coeffs: dict[int, Fraction] | Sequence[Fraction], n: int) -> tuple[Fraction, ...]:
    """Reduce a polynomial in z (exponents taken mod n) to the power basis of Q(zeta_n)."""
    phi_poly = cyclotomic_polynomial(n)
    deg = len(phi_poly) - 1
    items = coeffs.items() if isinstance(coeffs, dict) else enumerate(coeffs)
    work: dict[int, Fraction] = {}
    for k, c in items:
        if c:
            k %= n
            work[k] = work.get(k, 0) + Fraction(c)
    dense = [Fraction(0)] * max(n, 1)
    for k, c in work.items():
        dense[k] += c
    for k in range(len(dense) - 1, deg - 1, -1):
        c = dense[k]
        if c:
            # z^k = -(sum_{j<deg} phi_j z^(k-deg+j)) since Phi_n is monic
            base = k - deg
            for j in range(deg):
                pj = phi_poly[j]
                if pj:
                    dense[base + j] -= c * pj
            dense[k] = Fraction(0)
    return tuple(dense[:deg])


class Cyclotomic:
    """Element of Q(zeta_n), stored as power-basis coefficients."""

    __slots__ = ("n", "coeffs")

    def __init__(self, n: int, coeffs: Sequence[Fraction] | dict[int, Fraction], reduced: bool = False):
        if n == 2:
            # Q(zeta_2) = Q; zeta_2 = -1
            if not reduced:
                items = coeffs.items() if isinstance(coeffs, dict) else enumerate(coeffs)
                total = Fraction(0)
                for k, c in items:
                    total += Fraction(c) * (-1 if k % 2 else 1)
                coeffs, reduced = (total,), True
            n = 1
        self.n = n
        self.coeffs = tuple(coeffs) if reduced else reduce_mod_cyclotomic(coeffs, n)

    # -- constructors -----------------------------------------------------

    @classmethod
    def rational(cls, value) -> "Cyclotomic":
        return cls(1, (Fraction(value),), reduced=True)

    @classmethod
    def root_of_unity(cls, n: int, k: int = 1, coefficient=1) -> "Cyclotomic":
        return cls(n, {k % n: Fraction(coefficient)})

    @classmethod
    def coerce(cls, value) -> "Cyclotomic":
        if isinstance(value, Cyclotomic):
            return value
        if isinstance(value, (int, Fraction)):
            return cls.rational(value)
        raise TypeError(f"cannot coerce {value!r} to an exact cyclotomic number")

    # -- conversions ------------------------------------------------------

    def lift(self, m: int) -> "Cyclotomic":
        """The same number viewed in Q(zeta_m); requires n | m."""
        if m == self.n:
            return self
        if m % self.n:
            raise ValueError(f"cannot lift conductor {self.n} to {m}")
        step = m // self.n
        return Cyclotomic(m, {k * step: c for k, c in enumerate(self.coeffs) if c})

    def is_rational(self) -> bool:
        return all(c == 0 for c in self.coeffs[1:])

    def to_rational(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self} is not rational")
        return self.coeffs[0] if self.coeffs else Fraction(0)

    def __complex__(self) -> complex:
        if self.n == 1:
            return complex(float(self.coeffs[0]))
        z = cmath.exp(2j * math.pi / self.n)
        total = 0j
        for k, c in enumerate(self.coeffs):
            if c:
                total += float(c) * z ** k
        return total

    def __bool__(self) -> bool:
        return any(self.coeffs)

    def is_integral(self) -> bool:
        """True when all power-basis coefficients are integers (element of Z[zeta_n])."""
        return all(c.denominator == 1 for c in self.coeffs)

    # -- arithmetic -------------------------------------------------------

    @staticmethod
    def _common(a: "Cyclotomic", b: "Cyclotomic") -> tuple["Cyclotomic", "Cyclotomic"]:
        if a.n == b.n:
            return a, b
        m = math.lcm(a.n, b.n)
        return a.lift(m), b.lift(m)

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Cyclotomic.rational(other)
        elif not isinstance(other, Cyclotomic):
            return NotImplemented
        a, b = self._common(self, other)
        return Cyclotomic(a.n, tuple(x + y for x, y in zip(a.coeffs, b.coeffs)), reduced=True)

    __radd__ = __add__

    def __neg__(self):
        return Cyclotomic(self.n, tuple(-x for x in self.coeffs), reduced=True)

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Cyclotomic.rational(other)
        elif not isinstance(other, Cyclotomic):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return Cyclotomic(self.n, tuple(x * other for x in self.coeffs), reduced=True)
        if not isinstance(other, Cyclotomic):
            return NotImplemented
        a, b = self._common(self, other)
        if a.n == 1:
            return Cyclotomic(1, (a.coeffs[0] * b.coeffs[0],), reduced=True)
        prod: dict[int, Fraction] = {}
        for i, x in enumerate(a.coeffs):
            if x:
                for j, y in enumerate(b.coeffs):
                    if y:
                        prod[i + j] = prod.get(i + j, 0) + x * y
        return Cyclotomic(a.n, prod)

    __rmul__ = __mul__

    def inverse(self) -> "Cyclotomic":
        if not self:
            raise ZeroDivisionError("inverse of zero in a cyclotomic field")
        if self.n == 1:
            return Cyclotomic(1, (1 / self.coeffs[0],), reduced=True)
        inv = _poly_inverse_mod([*self.coeffs], [Fraction(c) for c in cyclotomic_polynomial(self.n)])
        return Cyclotomic(self.n, dict(enumerate(inv)))

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if not other:
                raise ZeroDivisionError("division by zero")
            return self * (Fraction(1) / Fraction(other))
        if not isinstance(other, Cyclotomic):
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        return Cyclotomic.coerce(other) * self.inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        result = Cyclotomic.rational(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def galois(self, j: int) -> "Cyclotomic":
        """Apply the automorphism zeta_n -> zeta_n^j (gcd(j, n) = 1)."""
        if math.gcd(j, self.n) != 1:
            raise ValueError(f"gcd({j}, {self.n}) != 1: not a Galois automorphism")
        return Cyclotomic(self.n, {(k * j) % self.n: c for k, c in enumerate(self.coeffs) if c})

    def conjugate(self) -> "Cyclotomic":
        return self.galois(-1 % self.n if self.n > 1 else 1)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Cyclotomic.rational(other)
        if not isinstance(other, Cyclotomic):
            return NotImplemented
        a, b = self._common(self, other)
        return a.coeffs == b.coeffs

    __hash__ = None

    def __repr__(self):
        return f"Cyclotomic({self})"

    def __str__(self):
        return format_cyclotomic(self)


def _poly_trim(p: list[Fraction]) -> list[Fraction]:
    while p and p[-1] == 0:
        p.pop()
    return p


def _poly_divmod(a: list[Fraction], b: list[Fraction]) -> tuple[list[Fraction], list[Fraction]]:
    a = _poly_trim(list(a))
    b = _poly_trim(list(b))
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 0)
    lead = b[-1]
    while len(a) >= len(b) and a:
        c = a[-1] / lead
        shift = len(a) - len(b)
        q[shift] = c
        for i, bi in enumerate(b):
            a[shift + i] -= c * bi
        _poly_trim(a)
    return q, a


def _poly_mul(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
    if not a or not b:
        return []
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def _poly_sub(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
    n = max(len(a), len(b))
    return _poly_trim([(a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0) for i in range(n)])


def _poly_inverse_mod(a: list[Fraction], m: list[Fraction]) -> list[Fraction]:
    """Inverse of a modulo m in Q[x] by the extended Euclidean algorithm."""
    r0, r1 = _poly_trim(list(m)), _poly_trim([Fraction(x) for x in a])
    s0, s1 = [], [Fraction(1)]
    while r1 and len(r1) > 1:
        q, r = _poly_divmod(r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, _poly_sub(s0, _poly_mul(q, s1))
    if not r1:
        raise ZeroDivisionError("element is not invertible")
    c = r1[0]
    return [x / c for x in s1]


def format_cyclotomic(x: Cyclotomic) -> str:
    if x.n == 1 or x.is_rational():
        return str(x.coeffs[0] if x.coeffs else Fraction(0))
    terms = [str(c) if k == 0 else f"{c}*z^{k}@{x.n}" for k, c in enumerate(x.coeffs) if c]
    return " + ".join(terms).replace("+ -", "- ") if terms else "0"


_TERM = re.compile(r"^\s*(?P<coef>[+-]?(?:\d+(?:/\d+)?)?)\s*\*?\s*(?:z(?:\^(?P<k>-?\d+))?@(?P<n>\d+))?\s*$")


def parse_coefficient(text: str | int | float | complex) -> Cyclotomic | complex:
    """Parse ``"p/q"``, ``"p/q*z^k@n"`` (zeta_n^k) or sums of such terms.

    Floats (``"0.5"``, ``"1+2j"``) and Python numbers that are not integers
    give float (complex) coefficients.
    """
    if isinstance(text, bool):
        raise TypeError("boolean is not a coefficient")
    if isinstance(text, int):
        return Cyclotomic.rational(text)
    if isinstance(text, (float, complex)):
        return complex(text)
    s = str(text).strip().replace(" ", "")
    if not s:
        raise ValueError("empty coefficient")
    if "@" not in s and ("." in s or "j" in s or "e" in s.lower()):
        return complex(s)
    # split on + / - that start a new term (not those following ^)
    parts = re.split(r"(?<=[^\^eE])(?=[+-])", s)
    total = Cyclotomic.rational(0)
    for part in parts:
        if not part:
            continue
        m = _TERM.match(part)
        if not m or (not (m.group("coef") or "").strip("+-") and m.group("n") is None):
            raise ValueError(f"cannot parse coefficient term {part!r} in {text!r}")
        coef_text = m.group("coef")
        if coef_text in (None, "", "+", "-"):
            coef = Fraction(-1 if coef_text == "-" else 1)
        else:
            coef = Fraction(coef_text.replace(" ", ""))
        if m.group("n") is not None:
            n = int(m.group("n"))
            k = int(m.group("k")) if m.group("k") is not None else 1
            total = total + Cyclotomic.root_of_unity(n, k, coef)
        else:
            total = total + coef
    return total


def ramanujan_sum(m: int, t: int) -> int:
    """sum over j in (Z/m)^x of zeta_m^(j t); an integer."""
    g = math.gcd(m, t)
    q = m // g
    mu = _mobius(q)
    if mu == 0:
        return 0
    return mu * euler_phi(m) // euler_phi(q)


def _mobius(n: int) -> int:
    if n == 1:
        return 1
    result = 1
    p = 2
    m = n
    while p * p <= m:
        if m % p == 0:
            m //= p
            if m % p == 0:
                return 0
            result = -result
        p += 1
    if m > 1:
        result = -result
    return result
