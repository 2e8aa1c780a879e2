"""Homogeneous ternary and binary forms over exact rings."""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Iterable, Mapping, Sequence

import numpy as np
from sympy import factorint, isprime, primerange

from .arith import FiniteField, FiniteFieldElement
from .errors import NotASquare, SingularCurve
from .linalg import determinant

Exponent = tuple[int, int, int]


@lru_cache(maxsize=None)
def monomials(d: int) -> tuple[Exponent, ...]:
    """Exponent triples of degree d in descending lex order (x > y > z)."""
    return tuple((a, b, d - a - b) for a in range(d, -1, -1) for b in range(d - a, -1, -1))


def _is_zero(c) -> bool:
    if isinstance(c, FiniteFieldElement):
        return c.is_zero()
    return c == 0


class TernaryForm:
    """A homogeneous polynomial in x, y, z of fixed degree."""

    __slots__ = ("degree", "coeffs")

    def __init__(self, degree: int, coeffs: Mapping[Exponent, object] | None = None):
        self.degree = degree
        clean = {}
        for e, c in (coeffs or {}).items():
            if sum(e) != degree:
                raise ValueError(f"exponent {e} does not have degree {degree}")
            if not _is_zero(c):
                clean[tuple(e)] = c
        self.coeffs = clean

    # construction helpers -------------------------------------------------
    @classmethod
    def from_vector(cls, degree: int, vec: Sequence) -> "TernaryForm":
        return cls(degree, dict(zip(monomials(degree), vec)))

    @classmethod
    def linear(cls, a, b, c) -> "TernaryForm":
        return cls(1, {(1, 0, 0): a, (0, 1, 0): b, (0, 0, 1): c})

    @classmethod
    def variable(cls, i: int) -> "TernaryForm":
        e = [0, 0, 0]
        e[i] = 1
        return cls(1, {tuple(e): 1})

    def vector(self) -> list:
        return [self.coeffs.get(e, 0) for e in monomials(self.degree)]

    # arithmetic -----------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.coeffs

    def __eq__(self, other):
        if not isinstance(other, TernaryForm):
            return NotImplemented
        if self.is_zero() and other.is_zero():
            return True
        return self.degree == other.degree and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.degree, frozenset(self.coeffs.items())))

    def __add__(self, other: "TernaryForm") -> "TernaryForm":
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        if other.degree != self.degree:
            raise ValueError("adding forms of different degrees")
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = out[e] + c if e in out else c
        return TernaryForm(self.degree, out)

    def __neg__(self):
        return TernaryForm(self.degree, {e: -c for e, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, k) -> "TernaryForm":
        return TernaryForm(self.degree, {e: c * k for e, c in self.coeffs.items()})

    def __mul__(self, other):
        if not isinstance(other, TernaryForm):
            return self.scale(other)
        out: dict = {}
        for e1, c1 in self.coeffs.items():
            for e2, c2 in other.coeffs.items():
                e = (e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2])
                v = c1 * c2
                out[e] = out[e] + v if e in out else v
        return TernaryForm(self.degree + other.degree, out)

    def __rmul__(self, k):
        return self.scale(k)

    def __pow__(self, n: int) -> "TernaryForm":
        result = TernaryForm(0, {(0, 0, 0): 1})
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def partial(self, i: int) -> "TernaryForm":
        out = {}
        for e, c in self.coeffs.items():
            if e[i]:
                f = list(e)
                f[i] -= 1
                out[tuple(f)] = c * e[i]
        return TernaryForm(self.degree - 1, out)

    def gradient(self) -> tuple["TernaryForm", "TernaryForm", "TernaryForm"]:
        return self.partial(0), self.partial(1), self.partial(2)

    def __call__(self, x, y, z):
        total = 0
        for (a, b, c), k in self.coeffs.items():
            total = total + k * (x**a) * (y**b) * (z**c)
        return total

    def evaluate(self, point):
        return self(*point)

    def compose(self, phi: Sequence["TernaryForm"]) -> "TernaryForm":
        """self(phi_0, phi_1, phi_2)."""
        deg = self.degree * phi[0].degree
        powers = [[TernaryForm(0, {(0, 0, 0): 1})] for _ in range(3)]
        for i in range(3):
            for _ in range(self.degree):
                powers[i].append(powers[i][-1] * phi[i])
        total = TernaryForm(deg)
        for (a, b, c), k in self.coeffs.items():
            total = total + (powers[0][a] * powers[1][b] * powers[2][c]).scale(k)
        return total

    def substitute(self, matrix: Sequence[Sequence]) -> "TernaryForm":
        """self(M v): x -> M[0].v, y -> M[1].v, z -> M[2].v."""
        return self.compose([TernaryForm.linear(*row) for row in matrix])

    def map_coefficients(self, fn) -> "TernaryForm":
        return TernaryForm(self.degree, {e: fn(c) for e, c in self.coeffs.items()})

    # integral normalisation ---------------------------------------------
    def content(self) -> Fraction:
        """Positive rational c with self / c primitive integral."""
        num = 0
        den = 1
        for c in self.coeffs.values():
            c = Fraction(c)
            num = gcd(num, c.numerator)
            den = den * c.denominator // gcd(den, c.denominator)
        return Fraction(num, den) if num else Fraction(1)

    def leading_coefficient(self):
        for e in monomials(self.degree):
            if e in self.coeffs:
                return self.coeffs[e]
        return 0

    def primitive(self) -> "TernaryForm":
        """Primitive integral multiple whose leading (lex) coefficient is positive."""
        if self.is_zero():
            return self
        c = self.content()
        if Fraction(self.leading_coefficient()) < 0:
            c = -c
        return TernaryForm(self.degree, {e: int(Fraction(v) / c) for e, v in self.coeffs.items()})

    def is_integral(self) -> bool:
        return all(Fraction(c).denominator == 1 for c in self.coeffs.values())

    def reduce_mod(self, field: FiniteField) -> "TernaryForm":
        return TernaryForm(self.degree, {e: field(c) for e, c in self.coeffs.items()})

    # serialisation --------------------------------------------------------
    def to_json(self) -> list:
        out = []
        for e in monomials(self.degree):
            if e in self.coeffs:
                c = Fraction(self.coeffs[e])
                out.append([e[0], e[1], e[2], str(c.numerator), str(c.denominator)])
        return out

    @classmethod
    def from_json(cls, data: Iterable) -> "TernaryForm":
        coeffs = {}
        degree = None
        for a, b, c, num, den in data:
            a, b, c = int(a), int(b), int(c)
            if degree is None:
                degree = a + b + c
            v = Fraction(int(num), int(den))
            coeffs[(a, b, c)] = int(v) if v.denominator == 1 else v
        if degree is None:
            raise ValueError("cannot infer the degree of an empty form")
        return cls(degree, coeffs)

    def __repr__(self):
        names = "xyz"
        terms = []
        for e in monomials(self.degree):
            if e in self.coeffs:
                mon = "*".join(f"{names[i]}^{k}" if k > 1 else names[i] for i, k in enumerate(e) if k)
                terms.append(f"({self.coeffs[e]})" + (f"*{mon}" if mon else ""))
        return " + ".join(terms) if terms else "0"


def jacobian_determinant(phi1: TernaryForm, phi2: TernaryForm, phi3: TernaryForm) -> TernaryForm:
    (a, b, c), (d, e, f), (g, h, i) = phi1.gradient(), phi2.gradient(), phi3.gradient()
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


def cross(u: Sequence, v: Sequence) -> tuple:
    return (u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0])


def primitive_vector(v: Sequence) -> tuple[int, ...]:
    """Primitive integral multiple with first nonzero entry positive."""
    fr = [Fraction(x) for x in v]
    den = 1
    for x in fr:
        den = den * x.denominator // gcd(den, x.denominator)
    ints = [int(x * den) for x in fr]
    g = 0
    for x in ints:
        g = gcd(g, x)
    if g == 0:
        raise ValueError("zero vector")
    lead = next(x for x in ints if x)
    if lead < 0:
        g = -g
    return tuple(x // g for x in ints)


# ---------------------------------------------------------------------------
# binary forms


@dataclass(frozen=True)
class BinaryForm:
    """coeffs[i] is the coefficient of s^(degree-i) t^i."""

    coeffs: tuple

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return all(_is_zero(c) for c in self.coeffs)

    def __add__(self, other: "BinaryForm") -> "BinaryForm":
        if other.degree != self.degree:
            raise ValueError("degree mismatch")
        return BinaryForm(tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, k) -> "BinaryForm":
        return BinaryForm(tuple(c * k for c in self.coeffs))

    def __mul__(self, other):
        if not isinstance(other, BinaryForm):
            return self.scale(other)
        out = [0] * (self.degree + other.degree + 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] = out[i + j] + a * b
        return BinaryForm(tuple(out))

    def __pow__(self, n: int) -> "BinaryForm":
        r = BinaryForm((1,))
        for _ in range(n):
            r = r * self
        return r

    def __call__(self, s, t):
        d = self.degree
        return sum(c * s ** (d - i) * t**i for i, c in enumerate(self.coeffs))

    def __eq__(self, other):
        if not isinstance(other, BinaryForm):
            return NotImplemented
        return self.degree == other.degree and all(a == b for a, b in zip(self.coeffs, other.coeffs))

    def __hash__(self):
        return hash(self.coeffs)


@dataclass(frozen=True)
class LineParametrization:
    """(s:t) -> s*P + t*Q for two distinct points P, Q of the projective plane."""

    P: tuple
    Q: tuple

    def __post_init__(self):
        if all(c == 0 for c in cross(self.P, self.Q)):
            raise ValueError("the two points coincide in P^2")

    def point(self, s, t) -> tuple:
        return tuple(s * a + t * b for a, b in zip(self.P, self.Q))

    @classmethod
    def of_line(cls, line: Sequence[int]) -> "LineParametrization":
        """Two integral points spanning the line a x + b y + c z = 0."""
        cands = [cross(line, e) for e in ((1, 0, 0), (0, 1, 0), (0, 0, 1))]
        cands = [primitive_vector(c) for c in cands if any(c)]
        for i in range(len(cands)):
            for j in range(i + 1, len(cands)):
                if any(cross(cands[i], cands[j])):
                    return cls(cands[i], cands[j])
        raise ValueError("degenerate line")


def restrict_to_line(F: TernaryForm, L: LineParametrization) -> BinaryForm:
    coords = [BinaryForm((L.P[i], L.Q[i])) for i in range(3)]
    d = F.degree
    pw = []
    for c in coords:
        row = [BinaryForm((1,))]
        for _ in range(d):
            row.append(row[-1] * c)
        pw.append(row)
    total = BinaryForm((0,) * (d + 1))
    for (a, b, c), k in F.coeffs.items():
        total = total + (pw[0][a] * pw[1][b] * pw[2][c]).scale(k)
    return total


# univariate helpers over Q: lists of Fractions, index = power of the variable


def _trim(p: list) -> list:
    while p and p[-1] == 0:
        p = p[:-1]
    return p


def _divmod(a: list, b: list) -> tuple[list, list]:
    a = list(a)
    b = _trim(b)
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 1)
    lb = b[-1]
    while len(_trim(a)) >= len(b):
        a = _trim(a)
        k = len(a) - len(b)
        f = Fraction(a[-1]) / lb
        q[k] = f
        for i, c in enumerate(b):
            a[i + k] -= f * c
        a = _trim(a)
    return _trim(q), _trim(a)


def _monic(p: list) -> list:
    p = _trim(p)
    lc = Fraction(p[-1])
    return [Fraction(c) / lc for c in p]


def _gcd(a: list, b: list) -> list:
    a, b = _trim(list(a)), _trim(list(b))
    while b:
        a, b = b, _divmod(a, b)[1]
    return _monic(a) if a else []


def _deriv(p: list) -> list:
    return [i * c for i, c in enumerate(p)][1:]


def _mul(a: list, b: list) -> list:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def squarefree_decomposition(p: list) -> list[tuple[list, int]]:
    """Yun's algorithm: monic factors a_i with p = lc * prod a_i^i."""
    p = _monic(p)
    if len(p) <= 1:
        return []
    out = []
    dp = _deriv(p)
    a = _gcd(p, dp)
    b = _divmod(p, a)[0]
    c = _divmod(dp, a)[0]
    d = [x - y for x, y in _pad(c, _deriv(b))]
    i = 1
    while len(_trim(b)) > 1:
        a = _gcd(b, d)
        if len(a) > 1:
            out.append((a, i))
        b = _divmod(b, a)[0]
        c = _divmod(d, a)[0]
        d = [x - y for x, y in _pad(c, _deriv(b))]
        i += 1
    return out


def _pad(a: list, b: list) -> list[tuple]:
    n = max(len(a), len(b))
    return list(zip(list(a) + [0] * (n - len(a)), list(b) + [0] * (n - len(b))))


def binary_square_root(b: BinaryForm) -> tuple[Fraction, BinaryForm]:
    """Write b = a * q^2 with q primitive integral (positive leading coefficient)."""
    if b.is_zero():
        raise NotASquare("zero form")
    d = b.degree
    if d % 2:
        raise NotASquare("odd degree")
    coeffs = [Fraction(c) for c in b.coeffs]
    mt = next(i for i, c in enumerate(coeffs) if c != 0)  # multiplicity of t
    if mt % 2:
        raise NotASquare("factor t has odd multiplicity")
    g = [coeffs[d - k] for k in range(d - mt + 1)]  # g(s) = b(s, 1), index = power of s
    h = [Fraction(1)]
    for fac, mult in squarefree_decomposition(g):
        if mult % 2:
            raise NotASquare("a factor has odd multiplicity")
        for _ in range(mult // 2):
            h = _mul(h, fac)
    half = d // 2
    # homogenise h(s) to degree half: coefficient of s^(half-i) t^i
    qc = [Fraction(0)] * (half + 1)
    for k, c in enumerate(h):
        qc[half - k] = c
    den = 1
    for c in qc:
        den = den * c.denominator // gcd(den, c.denominator)
    ints = [int(c * den) for c in qc]
    g_ = 0
    for c in ints:
        g_ = gcd(g_, c)
    lead = next(c for c in ints if c)
    if lead < 0:
        g_ = -g_
    q = BinaryForm(tuple(c // g_ for c in ints))
    q2 = q * q
    i = next(i for i, c in enumerate(q2.coeffs) if c != 0)
    a = coeffs[i] / q2.coeffs[i]
    if any(Fraction(x) != a * y for x, y in zip(coeffs, q2.coeffs)):
        raise NotASquare("square root check failed")
    return a, q


# ---------------------------------------------------------------------------
# discriminant support


def _macaulay_resultant(F: Sequence[TernaryForm]) -> Fraction | None:
    """Resultant of three ternary forms via Macaulay's quotient formula.

    Returns None when the extraneous minor vanishes for this coordinate system.
    """
    degs = [f.degree for f in F]
    D = sum(degs) - 2
    mons = monomials(D)
    index = {m: i for i, m in enumerate(mons)}
    rows = []
    nonreduced = []
    for m in mons:
        i = next(k for k in range(3) if m[k] >= degs[k])
        shift = list(m)
        shift[i] -= degs[i]
        row = [0] * len(mons)
        for e, c in F[i].coeffs.items():
            row[index[(e[0] + shift[0], e[1] + shift[1], e[2] + shift[2])]] = c
        rows.append(row)
        if sum(1 for k in range(3) if m[k] >= degs[k]) >= 2:
            nonreduced.append(index[m])
    minor = [[rows[r][c] for c in nonreduced] for r in nonreduced]
    dm = determinant(minor)
    if dm == 0:
        return None
    return determinant(rows) / dm


def _random_unimodular(rng: random.Random) -> list[list[int]]:
    M = [[int(i == j) for j in range(3)] for i in range(3)]
    for _ in range(6):
        i, j = rng.sample(range(3), 2)
        k = rng.randint(-3, 3)
        M = [[M[r][c] + (k * M[j][c] if r == i else 0) for c in range(3)] for r in range(3)]
    return M


def gradient_resultant(f: TernaryForm, seed: int = 0, attempts: int = 12) -> int:
    """Res(f_x, f_y, f_z) up to sign, an integer multiple of the discriminant support."""
    f = f.primitive()
    if any(g.is_zero() for g in f.gradient()):
        return 0
    rng = random.Random(seed)
    g = f
    for _ in range(attempts):
        r = _macaulay_resultant(g.gradient())
        if r is not None:
            if r.denominator != 1:
                raise ArithmeticError("non-integral resultant")
            return abs(int(r))
        g = f.substitute(_random_unimodular(rng))
    # the extraneous minor is generically nonzero; persistent vanishing means degenerate partials
    raise SingularCurve("Macaulay minor vanished in every coordinate system tried")


def factor_support(n: int, hint_primes: Iterable[int] = (), trial_bound: int = 10_000) -> set[int]:
    """Prime divisors of a nonzero integer, trial dividing by hints and small primes first."""
    n = abs(n)
    if n == 0:
        raise ValueError("support of zero")
    out = set()
    for p in sorted(set(hint_primes)) + list(primerange(2, trial_bound)):
        if n == 1:
            break
        if n % p == 0:
            out.add(p)
            while n % p == 0:
                n //= p
    if n > 1:
        if isprime(n):
            out.add(n)
        else:
            out.update(factorint(n))
    return out


def bad_prime_support(f: TernaryForm, lines: Iterable[TernaryForm] = (),
                      hint_primes: Iterable[int] = ()) -> set[int]:
    """Primes outside of which f and the given lines reduce to a smooth quartic with distinct lines.

    Always contains 2.  May contain extraneous primes.
    """
    res = gradient_resultant(f)
    if res == 0:
        raise SingularCurve("the partial derivatives have a common zero")
    hints = set(hint_primes)
    support = {2} | factor_support(res, hints)
    vecs = []
    for ell in lines:
        v = [Fraction(c) for c in ell.vector()]
        c = ell.content()
        if c != 1:
            support |= factor_support(c.numerator * c.denominator, hints)
        vecs.append(v)
    for i in range(len(vecs)):
        for j in range(i + 1, len(vecs)):
            g = 0
            for x in cross(vecs[i], vecs[j]):
                g = gcd(g, int(x))
            if g == 0:
                raise SingularCurve("two of the lines coincide")
            if g > 1:
                support |= factor_support(g, hints | support)
    return support


# ---------------------------------------------------------------------------
# point counting over small finite fields


def projective_points_indices(q: int) -> np.ndarray:
    """All points of P^2(F_q) as rows of element indices, normalised."""
    pts = [(x, y, 1) for x in range(q) for y in range(q)]
    pts += [(x, 1, 0) for x in range(q)]
    pts.append((1, 0, 0))
    return np.array(pts, dtype=np.int64)


def _field_index(field: FiniteField, c) -> int:
    return field(c).index


def evaluate_on_indices(F: TernaryForm, field: FiniteField, pts: np.ndarray, tables=None) -> np.ndarray:
    """Values (as element indices) of F at points given by element indices."""
    add, mul, _, _ = tables if tables is not None else field.tables()
    powers = []
    for i in range(3):
        row = [np.full(len(pts), field.one.index, dtype=np.int64)]
        for _ in range(F.degree):
            row.append(mul[row[-1], pts[:, i]])
        powers.append(row)
    total = np.full(len(pts), field.zero.index, dtype=np.int64)
    for (a, b, c), k in F.coeffs.items():
        ki = _field_index(field, k)
        term = mul[mul[powers[0][a], powers[1][b]], powers[2][c]]
        term = mul[np.full(len(pts), ki, dtype=np.int64), term]
        total = add[total, term]
    return total


def count_points_Fq(F: TernaryForm, q: int) -> int:
    """Number of points of {F = 0} in P^2(F_q), q = p or p^2 (odd p)."""
    p, deg = _prime_power(q)
    field = FiniteField(p, deg)
    pts = projective_points_indices(q)
    vals = evaluate_on_indices(F, field, pts)
    return int(np.count_nonzero(vals == field.zero.index))


def _prime_power(q: int) -> tuple[int, int]:
    for p in primerange(2, q + 1):
        if q == p:
            return p, 1
        if q == p * p:
            return p, 2
    raise ValueError(f"{q} is not a prime or the square of a prime")
