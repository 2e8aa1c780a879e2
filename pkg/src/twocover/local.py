"""Local images of gamma and the local spans W_v used by the descent.

Affine patches are integer bivariate polynomials stored as ``{(i, j): c}`` for
``c * x^i * y^j``.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from math import comb
from pathlib import Path
from typing import Iterable

import numpy as np

from .arith import REAL, class_width, default_precision, ord4, rational_class_bits, valuation
from .errors import BadReduction, ComponentDeficit, DepthExceeded, InsufficientPrecision, NoUsableQuadruple
from .forms import TernaryForm
from .linalg import F2Affine, F2Subspace
from .moduli import LABELS, Label, LabelledQuartic
from .theta import (
    PadicPlace,
    RealQuadraticPlace,
    extended_vector,
    fallback_table,
    gamma,
    padic_contact_points,
    real_contact_points,
    theta_values,
    twist_vector,
)

DEFAULT_DEPTH_CAP = 40
DEFAULT_SCAN_BOUND = 997
MAX_PADIC_PRECISION = 400


def span_threshold(v: int) -> int:
    """dim of J(Q_v)/2J(Q_v) when all 2-torsion is rational."""
    if v == REAL:
        return 3
    return 9 if v == 2 else 6


def extended_dimension(v: int) -> int:
    return 1 + 6 * class_width(v)


# ---------------------------------------------------------------------------
# bivariate integer polynomials


Poly = dict


def patch_polynomial(F: TernaryForm, patch: int, p: int) -> Poly:
    """F(x, y, 1), F(x, 1, p y) or F(1, p x, p y) as an integer polynomial."""
    out: Poly = {}
    for (a, b, c), k in F.coeffs.items():
        k = int(k)
        if patch == 0:
            key, coef = (a, b), k
        elif patch == 1:
            key, coef = (a, c), k * p**c
        else:
            key, coef = (b, c), k * p ** (b + c)
        out[key] = out.get(key, 0) + coef
    return {m: c for m, c in out.items() if c}


def evaluate(poly: Poly, x: int, y: int) -> int:
    return sum(c * x**i * y**j for (i, j), c in poly.items())


def shift(poly: Poly, x0: int, y0: int, s: int) -> Poly:
    """poly(x0 + s x, y0 + s y)."""
    out: Poly = {}
    for (i, j), c in poly.items():
        for a in range(i + 1):
            ca = c * comb(i, a) * x0 ** (i - a) * s**a
            for b in range(j + 1):
                key = (a, b)
                out[key] = out.get(key, 0) + ca * comb(j, b) * y0 ** (j - b) * s**b
    return {m: c for m, c in out.items() if c}


def p_content(poly: Poly, p: int) -> int:
    """Largest power of p dividing every coefficient."""
    if not poly:
        raise ValueError("zero polynomial has no content")
    return min(valuation(c, p) for c in poly.values())


def divide_content(poly: Poly, p: int) -> Poly:
    k = p_content(poly, p)
    d = p**k
    return {m: c // d for m, c in poly.items()}


def residue_zeros(poly: Poly, p: int) -> list[tuple[int, int]]:
    """All (x, y) in F_p^2 with poly(x, y) = 0 mod p."""
    r = np.arange(p, dtype=np.int64)
    deg = max((max(i, j) for i, j in poly), default=0)
    powers = [np.ones(p, dtype=np.int64)]
    for _ in range(deg):
        powers.append(powers[-1] * r % p)
    total = np.zeros((p, p), dtype=np.int64)
    for (i, j), c in poly.items():
        c %= p
        if c:
            total = (total + (c * powers[i] % p)[:, None] * powers[j][None, :]) % p
    xs, ys = np.nonzero(total == 0)
    return list(zip(xs.tolist(), ys.tolist()))


def _gradient_unit(poly: Poly, x: int, y: int, p: int) -> bool:
    gx = sum(c * i * x ** (i - 1) * y**j for (i, j), c in poly.items() if i)
    gy = sum(c * j * x**i * y ** (j - 1) for (i, j), c in poly.items() if j)
    return gx % p != 0 or gy % p != 0


# ---------------------------------------------------------------------------
# Hensel-liftable balls


@dataclass(frozen=True)
class HenselBall:
    """(x0 + p^e Z_p) x (y0 + p^e Z_p)."""

    x0: int
    y0: int
    e: int

    def contains(self, x: int, y: int, p: int) -> bool:
        m = p**self.e
        return (x - self.x0) % m == 0 and (y - self.y0) % m == 0


def hensel_balls(poly: Poly, p: int, depth_cap: int = DEFAULT_DEPTH_CAP) -> list[HenselBall]:
    """Disjoint Hensel-liftable balls covering the Z_p-points of poly = 0."""

    def recurse(g: Poly, depth: int) -> list[HenselBall]:
        if depth > depth_cap:
            raise DepthExceeded(f"Hensel ball recursion passed depth {depth_cap}")
        out = []
        for x0, y0 in residue_zeros(g, p):
            if _gradient_unit(g, x0, y0, p):
                out.append(HenselBall(x0, y0, 1))
                continue
            h = divide_content(shift(g, x0, y0, p), p)
            for b in recurse(h, depth + 1):
                out.append(HenselBall(x0 + p * b.x0, y0 + p * b.y0, b.e + 1))
        return out

    return recurse(divide_content(poly, p), 1)


def newton_lift(poly: Poly, ball: HenselBall, p: int, target: int, max_steps: int = 200) -> tuple[int, int]:
    """A point of the ball with poly = 0 mod p^target.

    In local coordinates (x0 + p^e X, y0 + p^e Y) the primitive polynomial is
    linear mod p, so Newton iteration in a variable with unit slope converges.
    """
    pe = p**ball.e
    h = divide_content(shift(poly, ball.x0, ball.y0, pe), p)
    a, b = h.get((1, 0), 0), h.get((0, 1), 0)
    use_x = a % p != 0
    if not use_x and b % p == 0:
        raise ValueError("not a Hensel-liftable ball")
    # restrict h to the axis of the chosen variable
    g = {}
    for (i, j), c in h.items():
        if (j if use_x else i) == 0:
            k = i if use_x else j
            g[k] = g.get(k, 0) + c
    mod = p ** max(target, 1)
    t = 0
    for _ in range(max_steps):
        val = sum(c * t**k for k, c in g.items())
        if val % mod == 0:
            break
        der = sum(c * k * t ** (k - 1) for k, c in g.items() if k)
        t = (t - val * pow(der, -1, mod)) % mod
    else:
        raise DepthExceeded("Newton iteration did not converge")
    return (ball.x0 + pe * t, ball.y0) if use_x else (ball.x0, ball.y0 + pe * t)


# ---------------------------------------------------------------------------
# local image sets


@dataclass(frozen=True)
class LocalImageSet:
    place: int
    values: frozenset
    complete: bool = True

    def __contains__(self, vec: int) -> bool:
        return vec in self.values

    def __len__(self) -> int:
        return len(self.values)


def _class_and_ord(n: int, p: int) -> tuple[int, int]:
    return rational_class_bits(n, p), valuation(n, p)


def _patch_lines(curve: LabelledQuartic, patch: int, p: int) -> dict[Label, Poly]:
    return {lab: patch_polynomial(curve.bitangents[lab], patch, p) for lab in LABELS}


def _ball_value(curve: LabelledQuartic, lines: dict[Label, Poly], ball: HenselBall, p: int,
                delta_classes: dict) -> int | None:
    """gamma on the ball if some description is constant on it, else None."""
    bound = ball.e - ord4(p)
    info: dict[Label, tuple[int, int] | None] = {}

    def stable(lab: Label):
        if lab not in info:
            val = evaluate(lines[lab], ball.x0, ball.y0)
            if val == 0:
                info[lab] = None
            else:
                c, o = _class_and_ord(val, p)
                info[lab] = c if o < bound else None
        return info[lab]

    table = fallback_table(curve)
    classes = []
    for i in range(1, 8):
        c = stable((0, i))
        if c is None:
            for others, delta in table[i]:
                cs = [stable(l) for l in others]
                if None not in cs:
                    c = delta_classes[delta] ^ cs[0] ^ cs[1] ^ cs[2]
                    break
            else:
                return None
        classes.append(c)
    return twist_vector(classes, p)


def local_image_patch(curve: LabelledQuartic, p: int, patch: int,
                      depth_cap: int = DEFAULT_DEPTH_CAP) -> set[int]:
    fpatch = patch_polynomial(curve.f, patch, p)
    lines = _patch_lines(curve, patch, p)
    delta_classes = {delta: rational_class_bits(delta, p)
                     for rows in fallback_table(curve).values() for _, delta in rows}
    work = hensel_balls(fpatch, p, depth_cap)
    out: set[int] = set()
    while work:
        ball = work.pop()
        value = _ball_value(curve, lines, ball, p, delta_classes)
        if value is not None:
            out.add(value)
            continue
        if ball.e >= depth_cap:
            raise DepthExceeded(f"gamma not constant on balls of depth {depth_cap}")
        pe = p**ball.e
        h = divide_content(shift(fpatch, ball.x0, ball.y0, pe), p)
        for x1, y1 in residue_zeros(h, p):
            work.append(HenselBall(ball.x0 + pe * x1, ball.y0 + pe * y1, ball.e + 1))
    return out


def local_image_padic(curve: LabelledQuartic, p: int, depth_cap: int = DEFAULT_DEPTH_CAP) -> LocalImageSet:
    values: set[int] = set()
    for patch in range(3):
        values |= local_image_patch(curve, p, patch, depth_cap)
    return LocalImageSet(p, frozenset(values), True)


def _legendre_table(p: int) -> np.ndarray:
    """0b10 for non-residues, 0 for squares, -1 at zero."""
    r = np.arange(p, dtype=np.int64)
    squares = np.zeros(p, dtype=bool)
    squares[(r * r) % p] = True
    out = np.where(squares, 0, 0b10).astype(np.int64)
    out[0] = -1
    return out


def _residue_points(f: TernaryForm, p: int) -> np.ndarray:
    """Projective points of f = 0 over F_p as rows (x, y, z)."""
    r = np.arange(p, dtype=np.int64)
    pts = [np.stack([np.repeat(r, p), np.tile(r, p), np.ones(p * p, dtype=np.int64)], axis=1),
           np.stack([r, np.ones(p, dtype=np.int64), np.zeros(p, dtype=np.int64)], axis=1),
           np.array([[1, 0, 0]], dtype=np.int64)]
    P = np.concatenate(pts)
    total = np.zeros(len(P), dtype=np.int64)
    for (a, b, c), k in f.coeffs.items():
        k = int(k) % p
        if k:
            term = k * pow_mod(P[:, 0], a, p) % p * pow_mod(P[:, 1], b, p) % p * pow_mod(P[:, 2], c, p) % p
            total = (total + term) % p
    return P[total == 0]


def pow_mod(x: np.ndarray, e: int, p: int) -> np.ndarray:
    out = np.ones_like(x)
    for _ in range(e):
        out = out * x % p
    return out


def local_image_good_odd(curve: LabelledQuartic, p: int, bad_primes: Iterable[int] | None = None) -> LocalImageSet:
    """Image of gamma at a prime of good odd reduction, from the points of C(F_p)."""
    if p == 2:
        raise BadReduction("residue scan needs odd p")
    if bad_primes is None:
        from .descent import bad_places

        bad_primes = bad_places(curve).primes
    if p in set(bad_primes):
        raise BadReduction(f"{p} is a prime of bad reduction")
    chi = _legendre_table(p)
    pts = _residue_points(curve.f, p)
    if len(pts) == 0:
        return LocalImageSet(p, frozenset(), True)
    cls = {}
    for lab in LABELS:
        a, b, c = (int(t) % p for t in curve.bitangents[lab].vector())
        cls[lab] = chi[(a * pts[:, 0] + b * pts[:, 1] + c * pts[:, 2]) % p]
    table = fallback_table(curve)
    slots = np.stack([cls[(0, i)] for i in range(1, 8)], axis=1)
    for i in range(1, 8):
        for row in np.flatnonzero(slots[:, i - 1] < 0):
            for others, delta in table[i]:
                if delta.numerator % p == 0 or delta.denominator % p == 0:
                    continue
                cs = [int(cls[l][row]) for l in others]
                if min(cs) >= 0:
                    slots[row, i - 1] = rational_class_bits(delta, p) ^ cs[0] ^ cs[1] ^ cs[2]
                    break
            else:
                raise NoUsableQuadruple(f"residue point {pts[row].tolist()} slot {i}")
    diff = slots[:, :6] ^ slots[:, 6:7]
    weights = 1 << (2 * np.arange(6, dtype=np.int64))
    vecs = (diff * weights).sum(axis=1)
    return LocalImageSet(p, frozenset(int(v) for v in vecs), True)


def local_image_real(curve: LabelledQuartic) -> LocalImageSet:
    values: set[int] = set()
    adapter = RealQuadraticPlace()
    for lab in LABELS:
        for P in real_contact_points(curve, lab):
            values.add(gamma(curve, P, adapter).vector)
            if len(values) == 4:
                return LocalImageSet(REAL, frozenset(values), True)
    raise ComponentDeficit(f"only {len(values)} real components found")


def unramified_subgroup(p: int) -> F2Subspace:
    """Classes in L'(2, Q_p) whose seven valuations share a parity."""
    if p == 2:
        raise BadReduction("the unramified subgroup is defined for odd p")
    return F2Subspace.span(12, (1 << (2 * k + 1) for k in range(6)))


# ---------------------------------------------------------------------------
# local spans


@dataclass(frozen=True)
class LocalSpan:
    place: int
    W: F2Subspace
    exact: bool
    source: str  # "contact", "image" or "bound"
    # lower bound for the image of the Jacobian, parity-0 vectors only
    jacobian: F2Subspace | None = None

    @property
    def jac_exact(self) -> bool:
        return self.jacobian is not None and self.jacobian.rank == span_threshold(self.place)

    @property
    def W0(self) -> F2Subspace:
        ambient = F2Subspace.span(self.W.dim, (1 << i for i in range(1, self.W.dim)))
        return self.W.intersect(ambient)

    @property
    def W1(self) -> F2Affine:
        odd = next((b for b in self.W.basis if b & 1), None)
        if odd is None:
            return F2Affine.empty(self.W.dim)
        return F2Affine(odd, self.W0)


def span_of_points(v: int, twist_vectors: Iterable[int]) -> F2Subspace:
    return F2Subspace.span(extended_dimension(v), (extended_vector(1, t) for t in twist_vectors))


def difference_rank(twist_vectors: Iterable[int]) -> int:
    vecs = list(twist_vectors)
    if not vecs:
        return 0
    base = vecs[0]
    return F2Subspace.span(max(1, max(vecs).bit_length()), (t ^ base for t in vecs[1:])).rank


def contact_images(curve: LabelledQuartic, v: int, precision_cap: int = MAX_PADIC_PRECISION) -> set[int]:
    """gamma at the Q_v-rational bitangent contact points."""
    if v == REAL:
        adapter = RealQuadraticPlace()
        return {gamma(curve, P, adapter).vector for lab in LABELS for P in real_contact_points(curve, lab)}
    precision = default_precision(v)
    while True:
        try:
            out = set()
            for lab in LABELS:
                for P in padic_contact_points(curve, lab, v, precision):
                    out.add(gamma(curve, P, PadicPlace(v)).vector)
            return out
        except InsufficientPrecision:
            precision *= 2
            if precision > precision_cap:
                raise


@dataclass
class LocalConfig:
    scan_bound: int = DEFAULT_SCAN_BOUND
    depth_cap: int = DEFAULT_DEPTH_CAP
    cache: "ImageCache | None" = None
    precision_cap: int = MAX_PADIC_PRECISION


def local_image(curve: LabelledQuartic, p: int, bad_primes: Iterable[int], config: LocalConfig | None = None) -> LocalImageSet:
    """Full image at a finite prime, by the cheapest applicable method."""
    config = config or LocalConfig()
    if config.cache is not None:
        hit = config.cache.get(curve, p)
        if hit is not None:
            return hit
    bad = set(bad_primes)
    if p != 2 and p not in bad:
        image = local_image_good_odd(curve, p, bad)
    else:
        image = local_image_padic(curve, p, config.depth_cap)
    if config.cache is not None:
        config.cache.put(curve, image)
    return image


def theta_images(curve: LabelledQuartic, v: int) -> set[int]:
    """Twist vectors of the 28 contact divisors at v; unusable bitangents are skipped."""
    out = set()
    for lab in LABELS:
        try:
            values = theta_values(curve, lab)
        except NoUsableQuadruple:
            continue
        out.add(twist_vector([rational_class_bits(x, v) for x in values], v))
    return out


def _even_part(W: F2Subspace) -> tuple[int, ...]:
    ambient = F2Subspace.span(W.dim, (1 << i for i in range(1, W.dim)))
    return W.intersect(ambient).basis


def jacobian_part(v: int, W: F2Subspace, thetas: set[int]) -> F2Subspace:
    dim = extended_dimension(v)
    if any(b & 1 for b in W.basis):
        # theta - 2P has degree 0, so theta itself counts once a local point exists
        vectors = list(_even_part(W)) + [extended_vector(0, t) for t in thetas]
    else:
        base = next(iter(thetas), 0)
        vectors = [extended_vector(0, t ^ base) for t in thetas]
    return F2Subspace.span(dim, vectors)


def local_span(curve: LabelledQuartic, v: int, config: LocalConfig | None = None,
               bad_primes: Iterable[int] = ()) -> LocalSpan:
    config = config or LocalConfig()
    threshold = span_threshold(v)
    dim = extended_dimension(v)
    thetas = theta_images(curve, v)
    contacts = contact_images(curve, v, config.precision_cap)
    if difference_rank(contacts) == threshold:
        W = span_of_points(v, contacts)
        return LocalSpan(v, W, True, "contact", jacobian_part(v, W, thetas))
    image = None
    if v == REAL:
        image = local_image_real(curve).values
    elif v <= config.scan_bound:
        try:
            image = local_image(curve, v, bad_primes or [v], config).values
        except DepthExceeded:
            pass
    if image is None:
        # image out of reach: no constraint at this place
        full = F2Subspace.full(dim)
        return LocalSpan(v, full, False, "bound", F2Subspace.span(dim, _even_part(full)))
    W = span_of_points(v, set(image) | contacts)
    exact = difference_rank(set(image) | contacts) == threshold
    return LocalSpan(v, W, exact, "image", jacobian_part(v, W, thetas))


# ---------------------------------------------------------------------------
# cache


def curve_digest(curve: LabelledQuartic) -> str:
    payload = json.dumps({"f": curve.f.to_json(),
                          "lines": [curve.bitangents[l].vector() for l in LABELS]},
                         default=str, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:24]


@dataclass
class ImageCache:
    """Local images as JSON files keyed by (curve digest, place)."""

    directory: Path
    _memo: dict = field(default_factory=dict)

    @classmethod
    def from_env(cls, var: str = "TWOCOVER_CACHE_DIR") -> "ImageCache | None":
        d = os.environ.get(var)
        return cls(Path(d)) if d else None

    def _path(self, curve: LabelledQuartic, p: int) -> Path:
        return Path(self.directory) / f"{curve_digest(curve)}-{p}.json"

    def get(self, curve: LabelledQuartic, p: int) -> LocalImageSet | None:
        path = self._path(curve, p)
        if path in self._memo:
            return self._memo[path]
        if not path.exists():
            return None
        data = json.loads(path.read_text())
        image = LocalImageSet(data["place"], frozenset(data["values"]), data["complete"])
        self._memo[path] = image
        return image

    def put(self, curve: LabelledQuartic, image: LocalImageSet) -> None:
        path = self._path(curve, image.place)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps({"place": image.place, "values": sorted(image.values),
                                   "complete": image.complete}))
        tmp.replace(path)
        self._memo[path] = image
