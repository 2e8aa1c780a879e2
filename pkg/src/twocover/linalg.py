"""Exact linear algebra over Q (fraction-free) and affine subspace algebra over F2.

F2 vectors are Python ints used as bitsets; bit ``i`` is coordinate ``i``.
Subspaces are kept in reduced row-echelon form where the pivot of a basis
vector is its lowest set bit and no other basis vector has that bit set.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable, Iterator, Sequence

from .errors import DimensionMismatch

# ---------------------------------------------------------------------------
# rational matrices


def _integer_rows(M: Sequence[Sequence]) -> list[list[int]]:
    rows = []
    for row in M:
        row = [Fraction(x) for x in row]
        den = 1
        for x in row:
            den = den * x.denominator // gcd(den, x.denominator)
        rows.append([int(x * den) for x in row])
    return rows


def bareiss_echelon(M: Sequence[Sequence]) -> tuple[list[list[int]], list[int]]:
    """Fraction-free row echelon form.  Returns (rows, pivot columns)."""
    A = _integer_rows(M)
    if not A:
        return [], []
    ncols = len(A[0])
    pivots: list[int] = []
    prev = 1
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(A)) if A[i][c] != 0), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        pr = A[r]
        pc = pr[c]
        for i in range(r + 1, len(A)):
            row = A[i]
            f = row[c]
            if f == 0:
                if pc != prev:
                    A[i] = [(pc * x) // prev for x in row]
                continue
            A[i] = [(pc * x - f * y) // prev for x, y in zip(row, pr)]
        prev = pc
        pivots.append(c)
        r += 1
        if r == len(A):
            break
    return A[: len(pivots)], pivots


def _primitive(v: list[int]) -> list[int]:
    g = 0
    for x in v:
        g = gcd(g, x)
    if g > 1:
        v = [x // g for x in v]
    return v


def rational_nullspace(M: Sequence[Sequence], ncols: int | None = None) -> list[list[Fraction]]:
    """Basis of the right kernel of M, as vectors of Fractions (primitive integral entries).

    One vector per free column: the free coordinate is positive and the other
    free coordinates vanish.
    """
    if ncols is None:
        ncols = len(M[0]) if M else 0
    if not M:
        return [[Fraction(int(i == j)) for i in range(ncols)] for j in range(ncols)]
    rows, pivots = bareiss_echelon(M)
    free = [c for c in range(ncols) if c not in set(pivots)]
    basis = []
    for fc in free:
        # back substitution with a common denominator kept integral
        sol: dict[int, Fraction] = {fc: Fraction(1)}
        for r in range(len(pivots) - 1, -1, -1):
            pc = pivots[r]
            row = rows[r]
            s = sum((row[c] * sol[c] for c in sol if c > pc), Fraction(0))
            sol[pc] = -s / row[pc]
        den = 1
        for x in sol.values():
            den = den * x.denominator // gcd(den, x.denominator)
        vec = [0] * ncols
        for c, x in sol.items():
            vec[c] = int(x * den)
        basis.append([Fraction(x) for x in _primitive(vec)])
    return basis


def rank(M: Sequence[Sequence]) -> int:
    return len(bareiss_echelon(M)[1])


def determinant(M: Sequence[Sequence]) -> Fraction:
    """Exact determinant by fraction-free elimination."""
    n = len(M)
    if n == 0:
        return Fraction(1)
    rows = [[Fraction(x) for x in r] for r in M]
    den = 1
    for r in rows:
        for x in r:
            den = den * x.denominator // gcd(den, x.denominator)
    A = [[int(x * den) for x in r] for r in rows]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if A[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if A[i][k] != 0), None)
            if swap is None:
                return Fraction(0)
            A[k], A[swap] = A[swap], A[k]
            sign = -sign
        akk = A[k][k]
        rk = A[k]
        for i in range(k + 1, n):
            ri = A[i]
            aik = ri[k]
            A[i] = [0] * (k + 1) + [(akk * ri[j] - aik * rk[j]) // prev for j in range(k + 1, n)]
        prev = akk
    return Fraction(sign * A[n - 1][n - 1], den**n)


def solve_unique(M: Sequence[Sequence], b: Sequence) -> list[Fraction] | None:
    """Solve M x = b exactly; None if inconsistent.  Raises ValueError if not unique."""
    aug = [list(r) + [bi] for r, bi in zip(M, b)]
    ncols = len(M[0])
    kernel = rational_nullspace(aug, ncols + 1)
    sols = [v for v in kernel if v[-1] != 0]
    if not sols:
        return None
    if len(kernel) != 1:
        raise ValueError("solution is not unique")
    v = sols[0]
    return [-x / v[-1] for x in v[:-1]]


# ---------------------------------------------------------------------------
# F2


def _low(v: int) -> int:
    return (v & -v).bit_length() - 1


def weight(v: int) -> int:
    return bin(v).count("1")


def reduce_vector(v: int, basis: Sequence[int]) -> int:
    """Reduce v against an RREF basis (clears all pivot bits)."""
    for b in basis:
        if (v >> _low(b)) & 1:
            v ^= b
    return v


@dataclass(frozen=True)
class F2Subspace:
    dim: int  # ambient dimension
    basis: tuple[int, ...]

    @classmethod
    def span(cls, dim: int, vectors: Iterable[int]) -> "F2Subspace":
        basis: list[int] = []
        for v in vectors:
            if v >> dim:
                raise DimensionMismatch(f"vector {v:b} outside F2^{dim}")
            v = reduce_vector(v, basis)
            if not v:
                continue
            piv = 1 << _low(v)
            basis = [b ^ v if b & piv else b for b in basis]
            basis.append(v)
        basis.sort(key=_low)
        return cls(dim, tuple(basis))

    @classmethod
    def full(cls, dim: int) -> "F2Subspace":
        return cls(dim, tuple(1 << i for i in range(dim)))

    @classmethod
    def zero(cls, dim: int) -> "F2Subspace":
        return cls(dim, ())

    @property
    def rank(self) -> int:
        return len(self.basis)

    def __len__(self) -> int:
        return 1 << len(self.basis)

    def __contains__(self, v: int) -> bool:
        return reduce_vector(v, self.basis) == 0

    def reduce(self, v: int) -> int:
        return reduce_vector(v, self.basis)

    def intersect(self, other: "F2Subspace") -> "F2Subspace":
        _check_dims(self.dim, other.dim)
        res = F2Affine(0, self).intersect(F2Affine(0, other))
        return res.direction

    def __iter__(self) -> Iterator[int]:
        yield from _enumerate(0, self.basis)


@dataclass(frozen=True)
class F2Affine:
    """base + direction, or the empty set when base is None."""

    base: int | None
    direction: F2Subspace

    def __post_init__(self):
        if self.base is not None:
            object.__setattr__(self, "base", self.direction.reduce(self.base))

    @classmethod
    def empty(cls, dim: int) -> "F2Affine":
        return cls(None, F2Subspace.zero(dim))

    @property
    def dim(self) -> int:
        return self.direction.dim

    @property
    def is_empty(self) -> bool:
        return self.base is None

    def __len__(self) -> int:
        return 0 if self.base is None else len(self.direction)

    def __contains__(self, v: int) -> bool:
        return self.base is not None and self.direction.reduce(v ^ self.base) == 0

    def __eq__(self, other):
        if not isinstance(other, F2Affine):
            return NotImplemented
        if self.dim != other.dim:
            return False
        if self.base is None or other.base is None:
            return self.base is None and other.base is None
        return self.base == other.base and self.direction == other.direction

    def __hash__(self):
        return hash((self.base, self.direction if self.base is not None else self.dim))

    def __iter__(self) -> Iterator[int]:
        if self.base is not None:
            yield from _enumerate(self.base, self.direction.basis)

    def intersect(self, other: "F2Affine") -> "F2Affine":
        return f2_affine_intersect(self, other)


def _check_dims(a: int, b: int) -> None:
    if a != b:
        raise DimensionMismatch(f"ambient dimensions {a} and {b} differ")


def _enumerate(base: int, basis: Sequence[int]) -> Iterator[int]:
    # Gray code walk
    v = base
    yield v
    for i in range(1, 1 << len(basis)):
        v ^= basis[_low(i)]
        yield v


def f2_solve(columns: Sequence[int], target: int) -> tuple[int | None, list[int]]:
    """All t in F2^n with sum_j t_j * columns[j] == target.

    Returns (particular solution or None, kernel basis); solutions are ints
    whose bit j is t_j.
    """
    echelon: list[tuple[int, int]] = []  # (reduced column, combination)
    kernel: list[int] = []
    for j, col in enumerate(columns):
        comb = 1 << j
        for piv, (vec, c) in echelon:
            if (col >> piv) & 1:
                col ^= vec
                comb ^= c
        if col:
            echelon.append((_low(col), (col, comb)))
        else:
            kernel.append(comb)
    comb = 0
    for piv, (vec, c) in echelon:
        if (target >> piv) & 1:
            target ^= vec
            comb ^= c
    return (comb if target == 0 else None), kernel


def _apply(columns: Sequence[int], t: int) -> int:
    out = 0
    j = 0
    while t:
        if t & 1:
            out ^= columns[j]
        t >>= 1
        j += 1
    return out


def f2_affine_intersect(A: F2Affine, B: F2Affine) -> F2Affine:
    _check_dims(A.dim, B.dim)
    if A.is_empty or B.is_empty:
        return F2Affine.empty(A.dim)
    V = B.direction
    us = A.direction.basis
    cols = [V.reduce(u) for u in us]
    part, ker = f2_solve(cols, V.reduce(A.base ^ B.base))
    if part is None:
        return F2Affine.empty(A.dim)
    base = A.base ^ _apply(us, part)
    direction = F2Subspace.span(A.dim, (_apply(us, k) for k in ker))
    return F2Affine(base, direction)


class F2Map:
    """Linear map F2^n -> F2^m given by the images of the standard basis vectors."""

    def __init__(self, columns: Sequence[int], codomain_dim: int):
        self.columns = list(columns)
        self.codomain_dim = codomain_dim
        for c in self.columns:
            if c >> codomain_dim:
                raise DimensionMismatch("column outside the codomain")

    @property
    def domain_dim(self) -> int:
        return len(self.columns)

    def __call__(self, v: int) -> int:
        if v >> self.domain_dim:
            raise DimensionMismatch("vector outside the domain")
        return _apply(self.columns, v)

    @classmethod
    def identity(cls, n: int) -> "F2Map":
        return cls([1 << i for i in range(n)], n)


def f2_preimage(L: F2Map, B: F2Affine) -> F2Affine:
    """{x : L x in B}."""
    _check_dims(L.codomain_dim, B.dim)
    n = L.domain_dim
    if B.is_empty:
        return F2Affine.empty(n)
    V = B.direction
    cols = [V.reduce(c) for c in L.columns]
    part, ker = f2_solve(cols, V.reduce(B.base))
    if part is None:
        return F2Affine.empty(n)
    return F2Affine(part, F2Subspace.span(n, ker))


def f2_subspace_preimage(L: F2Map, W: F2Subspace) -> F2Subspace:
    return f2_preimage(L, F2Affine(0, W)).direction
