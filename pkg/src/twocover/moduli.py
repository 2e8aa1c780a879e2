"""Smooth plane quartics with 28 labelled rational bitangents from 7 points in general position."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np

from .arith import FiniteField
from .errors import (
    BasePointHit,
    DegenerateConfiguration,
    NotASquare,
    NotBitangent,
    ReconstructionFailed,
    SingularBranch,
    SingularCurve,
)
from .forms import (
    BinaryForm,
    LineParametrization,
    TernaryForm,
    binary_square_root,
    cross,
    gradient_resultant,
    jacobian_determinant,
    monomials,
    primitive_vector,
    restrict_to_line,
)
from .linalg import determinant, rational_nullspace

Label = tuple[int, int]

LABELS: tuple[Label, ...] = tuple((i, j) for i in range(8) for j in range(i + 1, 8))
ARONHOLD: tuple[Label, ...] = tuple((0, i) for i in range(1, 8))


def label(i: int, j: int) -> Label:
    if i == j:
        raise ValueError("a bitangent label needs two distinct indices")
    return (i, j) if i < j else (j, i)


def label_str(lab: Label) -> str:
    return f"{lab[0]}{lab[1]}"


def parse_label(s: str) -> Label:
    return label(int(s[0]), int(s[1]))


SIMPLEX = ((1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1))


@dataclass(frozen=True)
class PointConfiguration:
    """p1..p4 the standard simplex, p5, p6, p7 = (u_k : v_k : 1)."""

    moduli: tuple[tuple[int, int], tuple[int, int], tuple[int, int]]

    @classmethod
    def from_flat(cls, coords: Sequence[int]) -> "PointConfiguration":
        u1, v1, u2, v2, u3, v3 = coords
        return cls(((u1, v1), (u2, v2), (u3, v3)))

    @property
    def points(self) -> tuple[tuple, ...]:
        return SIMPLEX + tuple((u, v, 1) for u, v in self.moduli)


def conic_row(p) -> list:
    x, y, z = p
    return [x * x, y * y, z * z, x * y, x * z, y * z]


def vanishing_minors(points: Sequence[Sequence]) -> list[str]:
    """Names of the vanishing 3x3 (collinear triples) and 6x6 (six on a conic) minors."""
    bad = []
    for idx in combinations(range(len(points)), 3):
        if determinant([points[i] for i in idx]) == 0:
            bad.append("collinear p" + ",p".join(str(i + 1) for i in idx))
    for idx in combinations(range(len(points)), 6):
        if determinant([conic_row(points[i]) for i in idx]) == 0:
            bad.append("conic through p" + ",p".join(str(i + 1) for i in idx))
    return bad


def general_position(cfg: PointConfiguration) -> bool:
    pts = cfg.points
    if any(determinant([pts[i] for i in idx]) == 0 for idx in combinations(range(7), 3)):
        return False
    return all(determinant([conic_row(pts[i]) for i in idx]) != 0 for idx in combinations(range(7), 6))


def configuration_minors(cfg: PointConfiguration) -> list[int]:
    """All 35 + 7 minors; their prime factors are the expected bad primes."""
    pts = cfg.points
    out = [int(determinant([pts[i] for i in idx])) for idx in combinations(range(7), 3)]
    out += [int(determinant([conic_row(pts[i]) for i in idx])) for idx in combinations(range(7), 6)]
    return out


@dataclass(frozen=True)
class CubicNet:
    phi: tuple[TernaryForm, TernaryForm, TernaryForm]

    def __call__(self, point) -> tuple:
        return tuple(p(*point) for p in self.phi)

    def differential(self, point) -> list[list]:
        """Rows are the gradients of phi_1, phi_2, phi_3 at the point."""
        return [[g(*point) for g in p.gradient()] for p in self.phi]


def cubic_net(cfg: PointConfiguration) -> CubicNet:
    mons = monomials(3)
    M = [[x**a * y**b * z**c for (a, b, c) in mons] for (x, y, z) in cfg.points]
    kernel = rational_nullspace(M)
    if len(kernel) != 3:
        raise DegenerateConfiguration(f"cubics through the points form a space of dimension {len(kernel)}")
    return CubicNet(tuple(TernaryForm.from_vector(3, [int(c) for c in v]) for v in kernel))


def branch_quartic(net: CubicNet) -> TernaryForm:
    """The quartic f with f(phi) = lambda * J^2, J the Jacobian sextic of the net."""
    J = jacobian_determinant(*net.phi)
    if J.is_zero():
        raise ReconstructionFailed("the cubics are dependent")
    columns = [TernaryForm(4, {e: 1}).compose(net.phi).vector() for e in monomials(4)]
    columns.append((J * J).vector())
    system = [[col[i] for col in columns] for i in range(len(columns[0]))]
    kernel = rational_nullspace(system)
    if len(kernel) != 1:
        raise ReconstructionFailed(f"solution space has dimension {len(kernel)}")
    sol = kernel[0]
    if sol[15] == 0:
        raise ReconstructionFailed("lambda vanishes")
    f = TernaryForm.from_vector(4, sol[:15]).primitive()
    if gradient_resultant(f) == 0:
        raise SingularBranch("branch quartic is singular")
    return f


def _image_line(a: Sequence, b: Sequence) -> TernaryForm:
    c = cross(a, b)
    if not any(c):
        raise BasePointHit("sample images coincide")
    return TernaryForm.linear(*primitive_vector(c))


def bitangent_lines(net: CubicNet, cfg: PointConfiguration) -> dict[Label, TernaryForm]:
    pts = cfg.points
    lines: dict[Label, TernaryForm] = {}
    for i in range(1, 8):
        # image of the exceptional curve over p_i: column space of the differential
        D = net.differential(pts[i - 1])
        cols = [tuple(D[r][c] for r in range(3)) for c in range(3)]
        for a, b in combinations(cols, 2):
            if any(cross(a, b)):
                lines[(0, i)] = _image_line(a, b)
                break
        else:
            raise DegenerateConfiguration(f"differential at p{i} has rank < 2")
    for i, j in combinations(range(1, 8), 2):
        p, q = pts[i - 1], pts[j - 1]
        images = []
        t = 1
        while len(images) < 2:
            sample = tuple(a + t * b for a, b in zip(p, q))
            img = net(sample)
            t += 1
            if not any(img):
                continue  # base point, resample
            if images and not any(cross(images[0], img)):
                continue
            images.append(img)
        lines[(i, j)] = _image_line(*images)
    return lines


@dataclass(frozen=True)
class Contact:
    """f restricted to the line via ``param`` equals a * q^2."""

    a: Fraction
    q: BinaryForm
    param: LineParametrization

    @property
    def discriminant(self) -> int:
        A, B, C = self.q.coeffs
        return B * B - 4 * A * C

    def points(self) -> list[tuple]:
        """Rational contact points (one point for a hyperflex)."""
        from math import isqrt

        A, B, C = self.q.coeffs
        disc = self.discriminant
        if disc < 0 or isqrt(disc) ** 2 != disc:
            return []
        r = isqrt(disc)
        if A == 0:
            roots = [(1, 0), (-C, B)]
        else:
            roots = [(-B + r, 2 * A), (-B - r, 2 * A)]
        out = []
        for s, t in roots:
            P = primitive_vector(self.param.point(s, t))
            if P not in out:
                out.append(P)
        return out


def contact_data(f: TernaryForm, line: TernaryForm) -> Contact:
    param = LineParametrization.of_line(line.vector())
    b = restrict_to_line(f, param)
    if b.is_zero():
        raise NotBitangent("line is a component of the quartic")
    try:
        a, q = binary_square_root(b)
    except NotASquare as exc:
        raise NotBitangent(f"restriction is not a square: {exc}") from exc
    return Contact(a, q, param)


@dataclass
class LabelledQuartic:
    f: TernaryForm
    bitangents: dict[Label, TernaryForm]
    contacts: dict[Label, Contact]
    moduli: tuple | None = None
    syzygies: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def line(self, lab: Label) -> TernaryForm:
        return self.bitangents[lab]

    def line_vector(self, lab: Label) -> tuple:
        return tuple(self.bitangents[lab].vector())

    def rational_contact_points(self) -> list[tuple]:
        pts = []
        for lab in LABELS:
            for P in self.contacts[lab].points():
                if P not in pts:
                    pts.append(P)
        return pts


def check_concurrency(lines: Sequence[Sequence[int]]) -> int:
    """Largest number of the given lines through a single point."""
    best = 1
    n = len(lines)
    for i in range(n):
        for j in range(i + 1, n):
            P = cross(lines[i], lines[j])
            if not any(P):
                return n  # coincident lines
            k = sum(1 for L in lines if sum(a * b for a, b in zip(L, P)) == 0)
            best = max(best, k)
    return best


def build_quartic(cfg: PointConfiguration, with_syzygies: bool = True) -> LabelledQuartic:
    if not general_position(cfg):
        raise DegenerateConfiguration("; ".join(vanishing_minors(cfg.points)))
    net = cubic_net(cfg)
    f = branch_quartic(net)
    lines = bitangent_lines(net, cfg)
    vecs = [tuple(lines[lab].vector()) for lab in LABELS]
    if len(set(vecs)) != 28:
        raise NotBitangent("bitangent lines are not distinct")
    contacts = {lab: contact_data(f, lines[lab]) for lab in LABELS}
    curve = LabelledQuartic(f, lines, contacts, moduli=cfg.moduli)
    if with_syzygies:
        from .theta import compute_syzygies

        compute_syzygies(curve)
    return curve


def quartic_from_forms(f: TernaryForm, lines: dict[Label, TernaryForm], with_syzygies: bool = True,
                       moduli=None) -> LabelledQuartic:
    """Labelled quartic from explicitly given (possibly non-primitive) integral forms."""
    if gradient_resultant(f) == 0:
        raise SingularCurve("quartic is singular")
    contacts = {lab: contact_data(f, lines[lab]) for lab in LABELS}
    curve = LabelledQuartic(f, dict(lines), contacts, moduli=moduli)
    if with_syzygies:
        from .theta import compute_syzygies

        compute_syzygies(curve)
    return curve


# ---------------------------------------------------------------------------
# small finite fields


def count_general_position_completions(q: int) -> int:
    """Unordered triples {p5, p6, p7} of affine F_q-points completing the simplex to general position."""
    from .forms import _prime_power

    p, deg = _prime_power(q)
    F = FiniteField(p, deg)
    add, mul, neg, _ = F.tables()
    one = F.one.index
    zero = F.zero.index
    # all affine points (u : v : 1) as index arrays
    us = np.repeat(np.arange(q), q)
    vs = np.tile(np.arange(q), q)
    ones = np.full(q * q, one, dtype=np.int64)
    all_pts = np.stack([us, vs, ones], axis=1)
    elements = F.elements()

    def sub(a, b):
        return add[a, neg[b]]

    def line_through(P, Q):
        return (sub(mul[P[1], Q[2]], mul[P[2], Q[1]]),
                sub(mul[P[2], Q[0]], mul[P[0], Q[2]]),
                sub(mul[P[0], Q[1]], mul[P[1], Q[0]]))

    def on_line(L):
        v = add[add[mul[L[0], all_pts[:, 0]], mul[L[1], all_pts[:, 1]]], mul[L[2], all_pts[:, 2]]]
        return v == zero

    def conic_rows(P):
        x, y, z = P
        return [mul[x, x], mul[y, y], mul[z, z], mul[x, y], mul[x, z], mul[y, z]]

    def conic_through(pts5):
        """Coefficients of the unique conic through 5 points (none collinear by 3)."""
        rows = [[elements[c] for c in conic_rows(P)] for P in pts5]
        # Gaussian elimination over F
        m = [r[:] for r in rows]
        piv_cols = []
        r = 0
        for c in range(6):
            pr = next((i for i in range(r, 5) if not m[i][c].is_zero()), None)
            if pr is None:
                continue
            m[r], m[pr] = m[pr], m[r]
            inv = m[r][c].inverse()
            m[r] = [x * inv for x in m[r]]
            for i in range(5):
                if i != r and not m[i][c].is_zero():
                    fct = m[i][c]
                    m[i] = [x - fct * y for x, y in zip(m[i], m[r])]
            piv_cols.append(c)
            r += 1
        free = next(c for c in range(6) if c not in piv_cols)
        coef = [F.zero] * 6
        coef[free] = F.one
        for row, c in zip(m, piv_cols):
            coef[c] = -row[free]
        return [x.index for x in coef]

    def on_conic(C):
        x, y, z = all_pts[:, 0], all_pts[:, 1], all_pts[:, 2]
        terms = [mul[x, x], mul[y, y], mul[z, z], mul[x, y], mul[x, z], mul[y, z]]
        tot = np.full(len(all_pts), zero, dtype=np.int64)
        for c, t in zip(C, terms):
            tot = add[tot, mul[np.full(len(all_pts), c, dtype=np.int64), t]]
        return tot == zero

    simplex = [tuple(F(c).index for c in P) for P in SIMPLEX]

    def forbidden(base):
        """Affine points collinear with two of ``base`` or on a conic through five of them."""
        bad = np.zeros(len(all_pts), dtype=bool)
        for P, Q in combinations(base, 2):
            bad |= on_line(line_through(P, Q))
        if len(base) >= 5:
            for five in combinations(base, 5):
                bad |= on_conic(conic_through(five))
        return bad

    total = 0
    bad4 = forbidden(simplex)
    for i5 in np.flatnonzero(~bad4):
        p5 = tuple(int(c) for c in all_pts[i5])
        bad5 = bad4 | forbidden(simplex + [p5]) | (np.arange(len(all_pts)) <= i5)
        for i6 in np.flatnonzero(~bad5):
            p6 = tuple(int(c) for c in all_pts[i6])
            base6 = simplex + [p5, p6]
            bad6 = bad5 | (np.arange(len(all_pts)) <= i6)
            for P in base6[:-1]:
                bad6 |= on_line(line_through(P, p6))
            for five in combinations(base6, 5):
                if p6 in five:
                    bad6 |= on_conic(conic_through(five))
            total += int(np.count_nonzero(~bad6))
    return total


# fixed curves whose point counts accompany the completion counts
SMALL_FIELD_CURVES = {
    9: TernaryForm(4, {(4, 0, 0): 1, (0, 4, 0): 1, (0, 0, 4): 1}),
    11: TernaryForm(4, {(4, 0, 0): 1, (0, 4, 0): 1, (0, 0, 4): 1,
                        (2, 2, 0): 1, (2, 0, 2): 1, (0, 2, 2): 1}),
}


def small_field_report(q: int) -> dict:
    from .forms import count_points_Fq

    if q not in (3, 5, 7, 9, 11):
        raise ValueError("q must be one of 3, 5, 7, 9, 11")
    out = {"q": q, "completions": count_general_position_completions(q)}
    if q in SMALL_FIELD_CURVES:
        out["curve"] = SMALL_FIELD_CURVES[q].to_json()
        out["points"] = count_points_Fq(SMALL_FIELD_CURVES[q], q)
    return out
