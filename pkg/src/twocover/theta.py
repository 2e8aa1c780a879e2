"""Bitangent label combinatorics, syzygetic data and the twist maps gamma, gamma-tilde.

A twist vector in L'(2, Q_v) is an int: slot k (k = 0..5, bitangent l_{0,k+1})
holds the class of l_{0,k+1}(P) * l_{07}(P) in bits [w*k, w*k + w), where w is
the class width at v.  The extended vector used for divisors puts the degree
parity in bit 0 and the twist vector above it.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Sequence

from .arith import (
    REAL,
    FiniteFieldElement,
    PadicNumber,
    RealQuadratic,
    class_width,
    default_precision,
    ff_is_square,
    padic_square_class,
    rational_class_bits,
    real_sign,
)
from .errors import (
    DegenerateIdentity,
    InsufficientPrecision,
    NotASquare,
    NotSyzygetic,
    NoUsableQuadruple,
    ZeroValue,
)
from .forms import BinaryForm, TernaryForm, monomials, restrict_to_line
from .linalg import rational_nullspace, solve_unique
from .moduli import ARONHOLD, LABELS, Label, LabelledQuartic, label_str, parse_label

Quadruple = tuple[Label, Label, Label, Label]

# ---------------------------------------------------------------------------
# combinatorics


def _degrees(labels: Iterable[Label]) -> dict[int, int]:
    deg: dict[int, int] = {}
    for a, b in labels:
        deg[a] = deg.get(a, 0) + 1
        deg[b] = deg.get(b, 0) + 1
    return deg


def syzygetic_type(quad: Sequence[Label]) -> str | None:
    """"cycle", "matching" or None."""
    if len(set(quad)) != 4:
        return None
    deg = _degrees(quad)
    if len(deg) == 8:
        return "matching"
    if len(deg) == 4 and all(d == 2 for d in deg.values()):
        # four edges, four vertices, all of degree 2: a 4-cycle (no triangles possible)
        return "cycle"
    return None


def is_syzygetic(quad: Sequence[Label]) -> bool:
    return syzygetic_type(quad) is not None


def is_syzygetic_triple(triple: Sequence[Label]) -> bool:
    """A triple is syzygetic when it extends to a syzygetic quadruple: a 3-path or 3 disjoint pairs."""
    deg = _degrees(triple)
    if len(deg) == 6:
        return True
    return len(deg) == 4 and sorted(deg.values()) == [1, 1, 2, 2]


@lru_cache(maxsize=None)
def enumerate_syzygetic() -> tuple[Quadruple, ...]:
    return tuple(q for q in combinations(LABELS, 4) if is_syzygetic(q))


@lru_cache(maxsize=None)
def aronhold_sets() -> tuple[tuple[Label, ...], ...]:
    """All 7-sets of labels with no syzygetic triple (backtracking)."""
    found = []

    def extend(chosen: list[Label], start: int):
        if len(chosen) == 7:
            found.append(tuple(chosen))
            return
        for k in range(start, len(LABELS)):
            lab = LABELS[k]
            if any(is_syzygetic_triple((a, b, lab)) for a, b in combinations(chosen, 2)):
                continue
            chosen.append(lab)
            extend(chosen, k + 1)
            chosen.pop()

    extend([], 0)
    return tuple(found)


@lru_cache(maxsize=None)
def quadruples_through(lab: Label) -> tuple[Quadruple, ...]:
    return tuple(q for q in enumerate_syzygetic() if lab in q)


# ---------------------------------------------------------------------------
# syzygetic data


@dataclass(frozen=True)
class SyzygeticData:
    quadruple: Quadruple
    delta: Fraction
    Q: TernaryForm
    c: Fraction

    def to_json(self) -> dict:
        return {
            "quadruple": [label_str(l) for l in self.quadruple],
            "delta": str(self.delta),
            "c": str(self.c),
            "Q": self.Q.to_json(),
        }

    @classmethod
    def from_json(cls, d: dict) -> "SyzygeticData":
        return cls(tuple(parse_label(s) for s in d["quadruple"]), Fraction(d["delta"]),
                   TernaryForm.from_json(d["Q"]), Fraction(d["c"]))


def _conic_restrictions(curve: LabelledQuartic, lab: Label) -> list[tuple]:
    param = curve.contacts[lab].param
    return [restrict_to_line(TernaryForm(2, {m: 1}), param).coeffs for m in monomials(2)]


def contact_conic(curve: LabelledQuartic, quad: Sequence[Label]) -> list[list[Fraction]]:
    """Kernel of the system Q|_l = lambda_l q_l over the four lines (6 + 4 unknowns)."""
    rows = []
    for k, lab in enumerate(quad):
        restr = _conic_restrictions(curve, lab)
        q = curve.contacts[lab].q.coeffs
        for r in range(3):
            row = [restr[m][r] for m in range(6)] + [0] * 4
            row[6 + k] = -q[r]
            rows.append(row)
    return rational_nullspace(rows, 10)


def syzygy_data(curve: LabelledQuartic, quad: Sequence[Label]) -> SyzygeticData:
    quad = tuple(quad)
    kernel = contact_conic(curve, quad)
    if len(kernel) != 1:
        raise NotSyzygetic(f"contact conic space has dimension {len(kernel)}")
    Q = TernaryForm.from_vector(2, kernel[0][:6]).primitive()
    prod = curve.bitangents[quad[0]]
    for lab in quad[1:]:
        prod = prod * curve.bitangents[lab]
    Q2 = (Q * Q).vector()
    fv = curve.f.vector()
    sol = solve_unique([[a, b] for a, b in zip(Q2, fv)], prod.vector())
    if sol is None:
        raise NotSyzygetic("product of the lines is not in the span of Q^2 and f")
    delta, c = sol
    if delta == 0 or c == 0:
        raise DegenerateIdentity("delta or c vanishes")
    return SyzygeticData(quad, delta, Q, c)


def compute_syzygies(curve: LabelledQuartic) -> dict:
    curve.syzygies = {q: syzygy_data(curve, q) for q in enumerate_syzygetic()}
    curve._cache.clear()
    return curve.syzygies


def syzygy_residual(curve: LabelledQuartic, data: SyzygeticData) -> TernaryForm:
    prod = curve.bitangents[data.quadruple[0]]
    for lab in data.quadruple[1:]:
        prod = prod * curve.bitangents[lab]
    return prod - (data.Q * data.Q).scale(data.delta) - curve.f.scale(data.c)


def fallback_table(curve: LabelledQuartic) -> dict[int, list[tuple[tuple[Label, Label, Label], Fraction]]]:
    """For slot i = 1..7: (other three labels, delta) of each stored quadruple through l_{0i}."""
    table = curve._cache.get("fallback")
    if table is None:
        table = {}
        for i in range(1, 8):
            lab = (0, i)
            table[i] = [(tuple(l for l in q if l != lab), curve.syzygies[q].delta)
                        for q in quadruples_through(lab) if q in curve.syzygies]
        curve._cache["fallback"] = table
    return table


# ---------------------------------------------------------------------------
# twist vectors


def twist_vector(classes: Sequence[int], v: int) -> int:
    """Pack the classes of gamma_1..gamma_7 at v modulo the diagonal."""
    w = class_width(v)
    c7 = classes[6]
    out = 0
    for k in range(6):
        out |= (classes[k] ^ c7) << (w * k)
    return out


def twist_classes(vec: int, v: int) -> list[int]:
    """Canonical representative: seven classes with the last one trivial."""
    w = class_width(v)
    mask = (1 << w) - 1
    return [(vec >> (w * k)) & mask for k in range(6)] + [0]


def twist_dimension(v: int) -> int:
    return 6 * class_width(v)


@dataclass(frozen=True)
class TwistCoordinates:
    place: int
    vector: int

    @property
    def classes(self) -> list[int]:
        return twist_classes(self.vector, self.place)

    def __add__(self, other: "TwistCoordinates") -> "TwistCoordinates":
        if other.place != self.place:
            raise ValueError("twist coordinates at different places")
        return TwistCoordinates(self.place, self.vector ^ other.vector)


# ---------------------------------------------------------------------------
# field adapters: the square class of l(P), or None when it cannot be decided


class RationalPlace:
    """Rational points, classes taken at the place v (REAL or a prime)."""

    def __init__(self, v: int):
        self.place = v

    def line_class(self, line: TernaryForm, P) -> int | None:
        val = line(*P)
        return None if val == 0 else rational_class_bits(val, self.place)

    def rational_class(self, x) -> int:
        return rational_class_bits(x, self.place)


class RealQuadraticPlace:
    """Points with coordinates in Q(sqrt d) embedded in R."""

    place = REAL

    def line_class(self, line: TernaryForm, P) -> int | None:
        a, b, c = line.vector()
        val = P[0] * a + P[1] * b + P[2] * c
        val = val if isinstance(val, RealQuadratic) else RealQuadratic(Fraction(val))
        return None if val.is_zero() else (1 if real_sign(val) < 0 else 0)

    def rational_class(self, x) -> int:
        return rational_class_bits(x, REAL)


class PadicPlace:
    """Points with PadicNumber coordinates; undecidable classes count as unusable."""

    def __init__(self, p: int):
        self.place = p
        self.imprecise = False

    def line_class(self, line: TernaryForm, P) -> int | None:
        a, b, c = line.vector()
        val = P[0] * a + P[1] * b + P[2] * c
        if not isinstance(val, PadicNumber):
            val = PadicNumber.from_rational(val, self.place)
        try:
            return padic_square_class(val).bits
        except ZeroValue:
            return None
        except InsufficientPrecision:
            self.imprecise = True
            return None

    def rational_class(self, x) -> int:
        return rational_class_bits(x, self.place)


class ResidueField:
    """Points over F_p (odd p): the class of a unit lift, bit 1 = non-residue."""

    def __init__(self, p: int):
        self.place = p

    def line_class(self, line: TernaryForm, P: Sequence[FiniteFieldElement]) -> int | None:
        field = P[0].field
        a, b, c = (field(int(x)) for x in line.vector())
        val = a * P[0] + b * P[1] + c * P[2]
        if val.is_zero():
            return None
        return 0 if ff_is_square(val) else 0b10

    def rational_class(self, x) -> int:
        return rational_class_bits(x, self.place)


def gamma_classes(curve: LabelledQuartic, P, adapter) -> list[int]:
    """The seven square classes of gamma(P), using syzygetic fallbacks for vanishing slots."""
    table = fallback_table(curve)
    cache: dict[Label, int | None] = {}

    def cls(lab: Label) -> int | None:
        if lab not in cache:
            cache[lab] = adapter.line_class(curve.bitangents[lab], P)
        return cache[lab]

    out = []
    for i in range(1, 8):
        c = cls((0, i))
        if c is None:
            for others, delta in table[i]:
                cs = [cls(l) for l in others]
                if None not in cs:
                    c = adapter.rational_class(delta) ^ cs[0] ^ cs[1] ^ cs[2]
                    break
            else:
                if getattr(adapter, "imprecise", False):
                    raise InsufficientPrecision(f"no decidable description of slot {i}")
                raise NoUsableQuadruple(f"slot {i}: every stored quadruple has another vanishing line")
        out.append(c)
    return out


def gamma(curve: LabelledQuartic, P, adapter) -> TwistCoordinates:
    return TwistCoordinates(adapter.place, twist_vector(gamma_classes(curve, P, adapter), adapter.place))


def gamma_all_fallbacks(curve: LabelledQuartic, P, adapter, slot: int) -> set[int]:
    """Class of slot ``slot`` from every usable description (direct and all quadruples)."""
    out = set()
    c = adapter.line_class(curve.bitangents[(0, slot)], P)
    if c is not None:
        out.add(c)
    for others, delta in fallback_table(curve)[slot]:
        cs = [adapter.line_class(curve.bitangents[l], P) for l in others]
        if None not in cs:
            out.add(adapter.rational_class(delta) ^ cs[0] ^ cs[1] ^ cs[2])
    return out


def gamma_tilde(curve: LabelledQuartic, divisor: Iterable[tuple[object, int]], adapter) -> tuple[int, TwistCoordinates]:
    """(degree parity, sum of n_P * gamma(P)) for a divisor given as (point, multiplicity) pairs."""
    parity = 0
    vec = 0
    for P, n in divisor:
        parity ^= n & 1
        if n & 1:
            vec ^= gamma(curve, P, adapter).vector
    return parity, TwistCoordinates(adapter.place, vec)


def extended_vector(parity: int, twist: int) -> int:
    return parity | (twist << 1)


# ---------------------------------------------------------------------------
# contact points as field elements


def contact_roots_real(q: BinaryForm) -> list[tuple[RealQuadratic, RealQuadratic]]:
    """Real roots (s, t) of a binary quadratic, in Q(sqrt disc)."""
    A, B, C = (Fraction(c) for c in q.coeffs)
    disc = B * B - 4 * A * C
    if disc < 0:
        return []
    den = disc.denominator
    d = int(disc * den * den)  # disc = d / den^2
    if A == 0:
        return [(RealQuadratic(1), RealQuadratic(0)), (RealQuadratic(-C), RealQuadratic(B))]
    roots = []
    for sign in (1, -1):
        s = RealQuadratic(-B, Fraction(sign, den), d)
        t = RealQuadratic(2 * A)
        if (s, t) not in roots:
            roots.append((s, t))
    return roots


def real_contact_points(curve: LabelledQuartic, lab: Label) -> list[tuple]:
    contact = curve.contacts[lab]
    return [contact.param.point(s, t) for s, t in contact_roots_real(contact.q)]


def padic_contact_points(curve: LabelledQuartic, lab: Label, p: int, precision: int | None = None) -> list[tuple]:
    """Q_p-rational contact points of a bitangent, as PadicNumber triples."""
    if precision is None:
        precision = default_precision(p)
    contact = curve.contacts[lab]
    A, B, C = contact.q.coeffs
    disc = B * B - 4 * A * C
    P, Qp = contact.param.P, contact.param.Q
    if A == 0:
        roots = [(1, 0), (-C, B)]
        return [contact.param.point(s, t) for s, t in roots]
    if disc == 0:
        return [contact.param.point(-B, 2 * A)]
    r = PadicNumber.from_rational(disc, p, precision)
    try:
        root = r.sqrt()
    except ValueError:
        return []
    out = []
    for sign in (1, -1):
        s = root * sign + (-B)
        out.append(tuple(s * a + b * (2 * A) for a, b in zip(P, Qp)))
    return out


# ---------------------------------------------------------------------------
# contact divisors


def theta_values(curve: LabelledQuartic, lab: Label) -> list[Fraction]:
    """Seven rationals representing gamma of the degree-2 contact divisor of a bitangent.

    For a line l_k restricting to alpha s + beta t, the norm of l_k over the two
    contact points is q(beta, -alpha), up to a factor common to all slots.
    """
    contact = curve.contacts[lab]
    A, B, C = contact.q.coeffs

    def norm(other: Label) -> Fraction:
        alpha, beta = restrict_to_line(curve.bitangents[other], contact.param).coeffs
        return Fraction(A * beta * beta - B * alpha * beta + C * alpha * alpha)

    norms: dict[Label, Fraction] = {}

    def cached(l: Label) -> Fraction:
        if l not in norms:
            norms[l] = norm(l)
        return norms[l]

    out = []
    for i in range(1, 8):
        x = cached((0, i))
        if x == 0:
            for others, _ in fallback_table(curve)[i]:
                prod = cached(others[0]) * cached(others[1]) * cached(others[2])
                if prod != 0:
                    x = prod
                    break
            else:
                raise NoUsableQuadruple(f"contact divisor of {label_str(lab)}: slot {i}")
        out.append(x)
    return out
