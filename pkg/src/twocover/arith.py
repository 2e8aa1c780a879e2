"""Exact scalar arithmetic: rationals, F_p and F_{p^2}, bounded-precision p-adics,
real quadratic numbers and square classes at every completion of Q.

Places are encoded as integers: ``REAL`` (= 0) for the archimedean place and the
prime itself for a finite place.  Square classes are F2 vectors packed into ints:

* real place: bit 0 = sign is negative;
* odd p: bit 0 = valuation parity, bit 1 = unit is a non-residue;
* p = 2: bit 0 = valuation parity, bits 1, 2 = coordinates of the unit on {-1, 5}.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import isqrt

from sympy.ntheory.residue_ntheory import sqrt_mod

from .errors import EvenCharacteristic, InsufficientPrecision, ZeroValue

REAL = 0


def place_name(v: int) -> str:
    return "inf" if v == REAL else str(v)


def class_width(v: int) -> int:
    """Number of F2 coordinates of Q_v^x / squares."""
    if v == REAL:
        return 1
    return 3 if v == 2 else 2


def ord4(p: int) -> int:
    return 2 if p == 2 else 0


def valuation(n: int, p: int) -> int:
    if n == 0:
        raise ZeroValue("valuation of zero")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def rational_valuation(x: Fraction, p: int) -> int:
    x = Fraction(x)
    if x == 0:
        raise ZeroValue("valuation of zero")
    return valuation(x.numerator, p) - valuation(x.denominator, p)


def is_square_int(n: int) -> bool:
    return n >= 0 and isqrt(n) ** 2 == n


def legendre(a: int, p: int) -> int:
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


@lru_cache(maxsize=None)
def smallest_nonresidue(p: int) -> int:
    if p == 2:
        raise EvenCharacteristic("no quadratic non-residue defines F_4 here")
    n = 2
    while legendre(n, p) != -1:
        n += 1
    return n


def unit_class_bits(u: int, p: int) -> int:
    """Square class of a p-adic unit known modulo p (odd p) or 8 (p = 2), shifted to bits 1.."""
    if p == 2:
        u %= 8
        if u % 2 == 0:
            raise ZeroValue("not a 2-adic unit")
        return {1: 0, 7: 0b010, 5: 0b100, 3: 0b110}[u]
    s = legendre(u, p)
    if s == 0:
        raise ZeroValue("not a p-adic unit")
    return 0 if s == 1 else 0b10


def rational_class_bits(x, v: int) -> int:
    """Square class of a nonzero rational in Q_v, exactly."""
    x = Fraction(x)
    if x == 0:
        raise ZeroValue("square class of zero")
    if v == REAL:
        return 1 if x < 0 else 0
    num, den = x.numerator, x.denominator
    e = 0
    while num % v == 0:
        num //= v
        e += 1
    while den % v == 0:
        den //= v
        e -= 1
    # num/den and num*den share a square class
    return (e & 1) | unit_class_bits(num * den, v)


@dataclass(frozen=True)
class SquareClass:
    place: int
    bits: int

    @property
    def coordinates(self) -> tuple[int, ...]:
        return tuple((self.bits >> i) & 1 for i in range(class_width(self.place)))

    def __add__(self, other: "SquareClass") -> "SquareClass":
        if other.place != self.place:
            raise ValueError("square classes at different places")
        return SquareClass(self.place, self.bits ^ other.bits)

    @property
    def is_trivial(self) -> bool:
        return self.bits == 0


# ---------------------------------------------------------------------------
# Finite fields F_p and F_{p^2}


class FiniteField:
    """F_p (degree 1) or F_{p^2} = F_p[t]/(t^2 - n) with n the smallest non-residue.

    Elements are encoded as ints ``a + b*p`` for ``a + b*t``; the table helpers
    exist so that enumerations can be vectorised with numpy.
    """

    def __init__(self, p: int, degree: int = 1):
        if degree not in (1, 2):
            raise ValueError("only F_p and F_{p^2} are supported")
        self.p = p
        self.degree = degree
        self.q = p**degree
        self.nonresidue = smallest_nonresidue(p) if degree == 2 else None

    def __repr__(self):
        return f"GF({self.q})"

    def __eq__(self, other):
        return isinstance(other, FiniteField) and (self.p, self.degree) == (other.p, other.degree)

    def __hash__(self):
        return hash((self.p, self.degree))

    def __call__(self, value) -> "FiniteFieldElement":
        if isinstance(value, FiniteFieldElement):
            return value
        if isinstance(value, tuple):
            return FiniteFieldElement(self, value)
        value = Fraction(value)
        n = value.numerator * pow(value.denominator, -1, self.p)
        return FiniteFieldElement(self, (n,) + (0,) * (self.degree - 1))

    def elements(self):
        return [self.from_index(i) for i in range(self.q)]

    def from_index(self, i: int) -> "FiniteFieldElement":
        coords = []
        for _ in range(self.degree):
            coords.append(i % self.p)
            i //= self.p
        return FiniteFieldElement(self, tuple(coords))

    def generator(self) -> "FiniteFieldElement":
        """Smallest (by index) generator of the multiplicative group."""
        order = self.q - 1
        primes = [r for r in range(2, order + 1) if order % r == 0 and all(r % s for s in range(2, r))]
        for i in range(1, self.q):
            g = self.from_index(i)
            if all(g ** (order // r) != self.one for r in primes):
                return g
        raise ArithmeticError("no generator found")

    @property
    def zero(self):
        return self(0)

    @property
    def one(self):
        return self(1)

    def tables(self):
        """(add, mul, neg, is_square) lookup tables over element indices."""
        import numpy as np

        els = self.elements()
        q = self.q
        add = np.empty((q, q), dtype=np.int64)
        mul = np.empty((q, q), dtype=np.int64)
        for i, a in enumerate(els):
            for j, b in enumerate(els):
                add[i, j] = (a + b).index
                mul[i, j] = (a * b).index
        neg = np.array([(-a).index for a in els], dtype=np.int64)
        square = np.zeros(q, dtype=bool)
        for a in els:
            square[(a * a).index] = True
        return add, mul, neg, square


class FiniteFieldElement:
    __slots__ = ("field", "coords")

    def __init__(self, field: FiniteField, coords):
        p = field.p
        self.field = field
        self.coords = tuple(int(c) % p for c in coords)

    @property
    def index(self) -> int:
        i = 0
        for c in reversed(self.coords):
            i = i * self.field.p + c
        return i

    def _coerce(self, other):
        if isinstance(other, FiniteFieldElement):
            return other
        return self.field(other)

    def __add__(self, other):
        other = self._coerce(other)
        return FiniteFieldElement(self.field, tuple(a + b for a, b in zip(self.coords, other.coords)))

    __radd__ = __add__

    def __neg__(self):
        return FiniteFieldElement(self.field, tuple(-a for a in self.coords))

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        if self.field.degree == 1:
            return FiniteFieldElement(self.field, (self.coords[0] * other.coords[0],))
        a, b = self.coords
        c, d = other.coords
        n = self.field.nonresidue
        return FiniteFieldElement(self.field, (a * c + n * b * d, a * d + b * c))

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        result = self.field.one
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def inverse(self):
        if self.is_zero():
            raise ZeroValue("inverse of zero in a finite field")
        return self ** (self.field.q - 2)

    def __truediv__(self, other):
        return self * self._coerce(other).inverse()

    def is_zero(self) -> bool:
        return not any(self.coords)

    def __eq__(self, other):
        if isinstance(other, FiniteFieldElement):
            return self.field == other.field and self.coords == other.coords
        try:
            return self == self.field(other)
        except (TypeError, ValueError):
            return NotImplemented

    def __hash__(self):
        return hash((self.field.q, self.coords))

    def __repr__(self):
        if self.field.degree == 1:
            return f"{self.coords[0]} (mod {self.field.p})"
        return f"{self.coords[0]}+{self.coords[1]}t (GF({self.field.q}))"


def ff_is_square(x: FiniteFieldElement) -> bool:
    if x.field.p == 2:
        raise EvenCharacteristic("square test needs odd characteristic")
    if x.is_zero():
        raise ZeroValue("zero has no square class")
    return x ** ((x.field.q - 1) // 2) == x.field.one


# ---------------------------------------------------------------------------
# p-adic numbers


def default_precision(p: int) -> int:
    return ord4(p) + 12


class PadicNumber:
    """p^valuation * (unit + O(p^precision)), or an exact zero.

    An *indistinct* zero (all known digits vanish) has ``unit == 0``,
    ``precision == 0`` and ``valuation`` equal to the absolute precision.
    """

    __slots__ = ("p", "valuation", "unit", "precision", "exact_zero")

    def __init__(self, p: int, valuation: int, unit: int, precision: int, exact_zero: bool = False):
        self.p = p
        self.valuation = valuation
        self.precision = precision
        self.unit = unit % p**precision if precision > 0 else 0
        self.exact_zero = exact_zero

    @classmethod
    def zero(cls, p: int) -> "PadicNumber":
        return cls(p, 0, 0, 0, exact_zero=True)

    @classmethod
    def from_rational(cls, x, p: int, precision: int | None = None) -> "PadicNumber":
        if precision is None:
            precision = default_precision(p)
        x = Fraction(x)
        if x == 0:
            return cls.zero(p)
        num, den = x.numerator, x.denominator
        v = 0
        while num % p == 0:
            num //= p
            v += 1
        while den % p == 0:
            den //= p
            v -= 1
        mod = p**precision
        return cls(p, v, num * pow(den, -1, mod), precision)

    @property
    def absolute_precision(self) -> int:
        return self.valuation + self.precision

    def is_indistinct_zero(self) -> bool:
        return not self.exact_zero and self.precision == 0

    def _lift(self, other) -> "PadicNumber":
        if isinstance(other, PadicNumber):
            if other.p != self.p:
                raise ValueError("p-adic numbers for different primes")
            return other
        return PadicNumber.from_rational(other, self.p, self.precision + 64)

    def __add__(self, other):
        other = self._lift(other)
        if self.exact_zero:
            return other
        if other.exact_zero:
            return self
        p = self.p
        a_abs = min(self.absolute_precision, other.absolute_precision)
        m = min(self.valuation, other.valuation)
        n = self.unit * p ** (self.valuation - m) + other.unit * p ** (other.valuation - m)
        n %= p ** (a_abs - m)
        if n == 0:
            return PadicNumber(p, a_abs, 0, 0)
        k = 0
        while n % p == 0:
            n //= p
            k += 1
        return PadicNumber(p, m + k, n, a_abs - m - k)

    __radd__ = __add__

    def __neg__(self):
        if self.exact_zero:
            return self
        return PadicNumber(self.p, self.valuation, -self.unit, self.precision)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        other = self._lift(other)
        if self.exact_zero or other.exact_zero:
            return PadicNumber.zero(self.p)
        if self.is_indistinct_zero() or other.is_indistinct_zero():
            return PadicNumber(self.p, self.absolute_precision + other.absolute_precision
                               - self.precision - other.precision, 0, 0)
        prec = min(self.precision, other.precision)
        return PadicNumber(self.p, self.valuation + other.valuation, self.unit * other.unit, prec)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._lift(other)
        if other.exact_zero or other.is_indistinct_zero():
            raise ZeroValue("division by a p-adic zero")
        if self.exact_zero:
            return self
        if self.is_indistinct_zero():
            return PadicNumber(self.p, self.valuation - other.valuation, 0, 0)
        prec = min(self.precision, other.precision)
        inv = pow(other.unit, -1, self.p**prec)
        return PadicNumber(self.p, self.valuation - other.valuation, self.unit * inv, prec)

    def sqrt(self) -> "PadicNumber":
        """A square root, or ValueError if this is not a square."""
        if self.exact_zero:
            return self
        if self.is_indistinct_zero():
            raise InsufficientPrecision("square root of an indistinct zero")
        if self.valuation % 2 or unit_class_bits(self.unit, self.p):
            raise ValueError("not a square in Q_p")
        p, prec = self.p, self.precision
        if p == 2 and prec < 3:
            raise InsufficientPrecision("need the unit modulo 8")
        root = sqrt_mod(self.unit, p**prec)
        return PadicNumber(p, self.valuation // 2, root, prec - 1 if p == 2 else prec)

    def __repr__(self):
        if self.exact_zero:
            return f"0 (exact, {self.p}-adic)"
        return f"{self.p}^{self.valuation}*({self.unit} + O({self.p}^{self.precision}))"


def padic_square_class(x: PadicNumber) -> SquareClass:
    if x.exact_zero:
        raise ZeroValue("square class of zero")
    need = ord4(x.p) + 1
    if x.precision < need:
        raise InsufficientPrecision(f"unit known to {x.precision} digits, need {need}")
    return SquareClass(x.p, (x.valuation & 1) | unit_class_bits(x.unit, x.p))


# ---------------------------------------------------------------------------
# Real quadratic numbers


@dataclass(frozen=True)
class RealQuadratic:
    """a + b*sqrt(d) with a, b rational and d >= 0 a non-square integer (or d = 0, b = 0)."""

    a: Fraction
    b: Fraction = Fraction(0)
    d: int = 0

    def __post_init__(self):
        a, b, d = Fraction(self.a), Fraction(self.b), int(self.d)
        if d < 0:
            raise ValueError("d must be non-negative")
        if d == 0 or b == 0:
            b, d = Fraction(0), 0
        elif is_square_int(d):
            a, b, d = a + b * isqrt(d), Fraction(0), 0
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "d", d)

    def _coerce(self, other) -> "RealQuadratic":
        if isinstance(other, RealQuadratic):
            if other.d and self.d and other.d != self.d:
                raise ValueError("values live in different quadratic fields")
            return other
        return RealQuadratic(Fraction(other))

    def __add__(self, other):
        o = self._coerce(other)
        return RealQuadratic(self.a + o.a, self.b + o.b, self.d or o.d)

    __radd__ = __add__

    def __neg__(self):
        return RealQuadratic(-self.a, -self.b, self.d)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __mul__(self, other):
        o = self._coerce(other)
        d = self.d or o.d
        return RealQuadratic(self.a * o.a + self.b * o.b * d, self.a * o.b + self.b * o.a, d)

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def __float__(self):
        return float(self.a) + float(self.b) * self.d**0.5


def real_sign(x: RealQuadratic) -> int:
    a, b, d = x.a, x.b, x.d
    if b == 0:
        if a == 0:
            raise ZeroValue("sign of zero")
        return 1 if a > 0 else -1
    sb = 1 if b > 0 else -1
    if a == 0 or (a > 0) == (b > 0):
        return sb
    # opposite signs: the larger magnitude wins
    return (1 if a > 0 else -1) if a * a > b * b * d else sb


def real_square_class(x: RealQuadratic) -> SquareClass:
    return SquareClass(REAL, 1 if real_sign(x) < 0 else 0)
