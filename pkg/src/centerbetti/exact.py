"""Exact linear algebra: sparse Gaussian elimination over Q or Q(zeta_n),
kernel projections, and multimodular characteristic polynomials of integer
matrices.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .cyclotomic import Cyclotomic, euler_phi

SparseRow = dict


def normalize_entry(v):
    """Rational cyclotomic numbers become Fractions (much faster elimination)."""
    if isinstance(v, Cyclotomic) and v.is_rational():
        return v.to_rational()
    if isinstance(v, int):
        return Fraction(v)
    return v


def _conj(v):
    if isinstance(v, Cyclotomic):
        return v.conjugate()
    return v


def row_echelon(rows: Iterable[SparseRow]) -> dict[int, SparseRow]:
    """Incremental sparse echelon form; returns pivot column -> normalized pivot row.

    Each incoming row is reduced by the existing pivots at its leading column
    until it is zero or opens a new pivot.  Banded and circulant-like inputs
    only see bounded fill-in.
    """
    pivots: dict[int, SparseRow] = {}
    for src in rows:
        r = {k: normalize_entry(v) for k, v in src.items() if v}
        while r:
            c = min(r)
            p = pivots.get(c)
            if p is None:
                inv = 1 / r[c] if not isinstance(r[c], Cyclotomic) else r[c].inverse()
                pivots[c] = {k: v * inv for k, v in r.items()}
                break
            f = r[c]
            for k, v in p.items():
                nv = r.get(k, 0) - f * v
                if nv:
                    r[k] = nv
                else:
                    r.pop(k, None)
    return pivots


def rank(rows: Iterable[SparseRow]) -> int:
    return len(row_echelon(rows))


def nullity(rows: Sequence[SparseRow], ncols: int) -> int:
    return ncols - rank(rows)


def reduced_row_echelon(pivots: dict[int, SparseRow]) -> dict[int, SparseRow]:
    """Back-substitute an echelon form to reduced row echelon form."""
    out: dict[int, SparseRow] = {}
    for c in sorted(pivots, reverse=True):
        r = dict(pivots[c])
        others = [k for k in r if k != c and k in out]
        while others:
            k = others.pop()
            f = r.get(k)
            if not f:
                continue
            for kk, v in out[k].items():
                nv = r.get(kk, 0) - f * v
                if nv:
                    r[kk] = nv
                else:
                    r.pop(kk, None)
        out[c] = r
    return out


def nullspace(rows: Sequence[SparseRow], ncols: int) -> list[SparseRow]:
    """Basis of the right kernel {v : M v = 0} as sparse vectors."""
    rref = reduced_row_echelon(row_echelon(rows))
    free = [c for c in range(ncols) if c not in rref]
    basis = []
    for f in free:
        v: SparseRow = {f: Fraction(1)}
        for c, r in rref.items():
            x = r.get(f)
            if x:
                v[c] = -x
        basis.append(v)
    return basis


def solve_dense(M: list[list], b: list) -> list:
    """Solve M y = b exactly for square invertible M (Gauss-Jordan)."""
    n = len(M)
    A = [list(map(normalize_entry, row)) + [normalize_entry(b[i])] for i, row in enumerate(M)]
    for col in range(n):
        piv = next((r for r in range(col, n) if A[r][col]), None)
        if piv is None:
            raise ZeroDivisionError("singular system")
        A[col], A[piv] = A[piv], A[col]
        p = A[col][col]
        inv = p.inverse() if isinstance(p, Cyclotomic) else 1 / p
        A[col] = [x * inv for x in A[col]]
        for r in range(n):
            if r != col and A[r][col]:
                f = A[r][col]
                A[r] = [x - f * y for x, y in zip(A[r], A[col])]
    return [A[r][n] for r in range(n)]


def kernel_projection_columns(rows: Sequence[SparseRow], ncols: int, columns: Sequence[int]) -> dict[int, SparseRow]:
    """Exact columns P e_s of the orthogonal projection onto ker(M), for Hermitian M."""
    basis = nullspace(rows, ncols)
    k = len(basis)
    if k == 0:
        return {s: {} for s in columns}
    gram = [[_dot(basis[a], basis[b]) for b in range(k)] for a in range(k)]
    out = {}
    for s in columns:
        rhs = [_conj(normalize_entry(basis[a].get(s, 0))) for a in range(k)]
        y = solve_dense(gram, rhs)
        col: SparseRow = {}
        for a in range(k):
            if y[a]:
                for idx, val in basis[a].items():
                    nv = col.get(idx, 0) + val * y[a]
                    if nv:
                        col[idx] = nv
                    else:
                        col.pop(idx, None)
        out[s] = col
    return out


def _dot(u: SparseRow, v: SparseRow):
    """<v, u> = sum conj(u_i) v_i  (entry (a, b) of N* N for u = N e_a, v = N e_b)."""
    total = Fraction(0)
    small, large = (u, v) if len(u) <= len(v) else (v, u)
    for i in small:
        if i in large:
            total = total + _conj(u[i]) * v[i]
    return total


# -- multimodular characteristic polynomial --------------------------------

_PRIME_LIMIT = 1 << 24


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def _primes_below(limit: int):
    p = limit - 1
    while p > 2:
        if _is_prime(p):
            yield p
        p -= 1


def charpoly_mod_p(M: np.ndarray, p: int) -> np.ndarray:
    """Coefficients (lowest degree first) of det(xI - M) mod p via Hessenberg reduction."""
    A = np.array(M, dtype=np.int64) % p
    n = A.shape[0]
    for j in range(n - 2):
        nz = np.nonzero(A[j + 1:, j])[0]
        if nz.size == 0:
            continue
        i = j + 1 + nz[0]
        if i != j + 1:
            A[[i, j + 1], :] = A[[j + 1, i], :]
            A[:, [i, j + 1]] = A[:, [j + 1, i]]
        inv = pow(int(A[j + 1, j]), p - 2, p)
        u = (A[j + 2:, j] * inv) % p
        if not u.any():
            continue
        # row ops R_i -= u_i R_{j+1}; column op C_{j+1} += sum_i u_i C_i keeps similarity
        A[j + 2:, :] = (A[j + 2:, :] - (u[:, None] * A[j + 1, :][None, :]) % p) % p
        A[:, j + 1] = (A[:, j + 1] + (A[:, j + 2:] @ u) % p) % p
    polys = np.zeros((n + 1, n + 1), dtype=np.int64)
    polys[0, 0] = 1
    # q[i] = prod_{j=i+1..m} h_{j,j-1} (0-based i < m-1), updated as m grows
    q = np.zeros(n, dtype=np.int64)
    for m in range(1, n + 1):
        prev = polys[m - 1]
        cur = np.zeros(n + 1, dtype=np.int64)
        cur[1:] = prev[:-1]
        cur = (cur - (A[m - 1, m - 1] * prev) % p) % p
        if m > 1:
            q[:m - 2] = (q[:m - 2] * A[m - 1, m - 2]) % p
            q[m - 2] = A[m - 1, m - 2]
            t = (A[:m - 1, m - 1] * q[:m - 1]) % p
            acc = np.zeros(n + 1, dtype=np.int64)
            # chunked so partial sums stay inside int64
            for start in range(0, m - 1, 256):
                stop = min(m - 1, start + 256)
                acc = (acc + (t[start:stop] @ polys[start:stop]) % p) % p
            cur = (cur - acc) % p
        polys[m] = cur
    return polys[n]


def charpoly_integer(M: Sequence[Sequence[int]], psd: bool = False) -> list[int]:
    """Exact integer coefficients of det(xI - M), lowest degree first.

    Residues modulo primes below 2^24 are combined by CRT until the modulus
    exceeds twice a coefficient bound: (1 + rho)^n with rho the largest
    absolute row sum, or prod(1 + M_ii) (Hadamard) when ``psd`` is set.
    A PSD result whose signs fail to alternate is recomputed with the
    general bound.
    """
    A = [[int(x) for x in row] for row in M]
    n = len(A)
    if n == 0:
        return [1]
    if psd:
        bound = math.prod(1 + max(A[i][i], 0) for i in range(n))
    else:
        rho = max(sum(abs(x) for x in row) for row in A)
        bound = (1 + rho) ** n
    residues: list[np.ndarray] = []
    primes: list[int] = []
    modulus = 1
    for p in _primes_below(_PRIME_LIMIT):
        reduced = np.array([[x % p for x in row] for row in A], dtype=np.int64)
        residues.append(charpoly_mod_p(reduced, p))
        primes.append(p)
        modulus *= p
        if modulus > 2 * bound:
            break
    coeffs = []
    for k in range(n + 1):
        x, m = 0, 1
        for r, p in zip(residues, primes):
            t = ((int(r[k]) - x) * pow(m, -1, p)) % p
            x += m * t
            m *= p
        if x > m // 2:
            x -= m
        coeffs.append(x)
    if psd and not _alternating(coeffs):
        return charpoly_integer(A, psd=False)
    return coeffs


def _alternating(coeffs: Sequence[int]) -> bool:
    """Signs of det(xI - M) for PSD M: (-1)^(n-k) c_k >= 0."""
    n = len(coeffs) - 1
    return all(((-1) ** (n - k)) * c >= 0 for k, c in enumerate(coeffs))


def lowest_nonzero(coeffs: Sequence[int]) -> tuple[int, int]:
    """(index, value) of the lowest-degree nonzero coefficient."""
    for k, c in enumerate(coeffs):
        if c:
            return k, c
    raise ValueError("zero polynomial")


def multiplication_matrix(x: Cyclotomic, n: int) -> list[list[int]]:
    """Integer matrix of multiplication by x in the power basis of Z[zeta_n]."""
    x = x.lift(n) if n > 1 else x
    phi = euler_phi(n) if n > 1 else 1
    cols = []
    for j in range(phi):
        y = x * Cyclotomic.root_of_unity(n, j) if n > 1 else x
        coeffs = list(y.lift(n).coeffs) if n > 1 else list(y.coeffs)
        coeffs += [Fraction(0)] * (phi - len(coeffs))
        if any(c.denominator != 1 for c in coeffs):
            raise ValueError(f"{x} is not an algebraic integer in the power basis")
        cols.append([int(c) for c in coeffs])
    return [[cols[j][i] for j in range(phi)] for i in range(phi)]


def realify_integer(rows: Sequence[SparseRow], size: int, conductor: int) -> list[list[int]]:
    """Replace every Z[zeta_n] entry by its multiplication matrix.

    The result is similar to the direct sum of all Galois conjugates of the
    input matrix, so its characteristic polynomial is the product of theirs.
    """
    phi = euler_phi(conductor) if conductor > 1 else 1
    out = [[0] * (size * phi) for _ in range(size * phi)]
    cache: dict = {}
    for i, row in enumerate(rows):
        for j, v in row.items():
            if not v:
                continue
            v = Cyclotomic.coerce(v) if not isinstance(v, Cyclotomic) else v
            key = (tuple(v.lift(conductor).coeffs) if conductor > 1 else v.coeffs)
            block = cache.get(key)
            if block is None:
                block = multiplication_matrix(v, conductor)
                cache[key] = block
            for a in range(phi):
                for b in range(phi):
                    out[i * phi + a][j * phi + b] = block[a][b]
    return out


def integer_rows(rows: Sequence[SparseRow], size: int) -> list[list[int]]:
    out = [[0] * size for _ in range(size)]
    for i, row in enumerate(rows):
        for j, v in row.items():
            v = normalize_entry(v)
            if isinstance(v, Cyclotomic) or v.denominator != 1:
                raise ValueError("matrix entry is not a rational integer")
            out[i][j] = int(v)
    return out


def bits_needed(n: int, rho: int) -> float:
    return n * math.log2(1 + rho) + 1
