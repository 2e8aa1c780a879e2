"""Global F2 bookkeeping, two-cover descent and rational point search.

A vector of F2 x L'(2, Q; S) is an int: bit 0 is the degree parity and bit
``1 + k*m + g`` is the coordinate of slot k (k = 0..5) on generator g, where the
generators are -1 followed by the finite primes of S in ascending order and
``m = #S``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, isqrt
from typing import Iterable, Sequence

import numpy as np
from sympy import primerange

from .arith import REAL, class_width, place_name, rational_class_bits
from .errors import DepthExceeded, EnumerationCapExceeded, NotASquare, TwoCoverError
from .forms import TernaryForm, bad_prime_support, factor_support, primitive_vector
from .linalg import F2Affine, F2Map, F2Subspace, f2_subspace_preimage
from .local import LocalConfig, LocalSpan, extended_dimension, local_image, local_span
from .moduli import LABELS, LabelledQuartic, PointConfiguration, configuration_minors
from .theta import fallback_table

log = logging.getLogger(__name__)

DEFAULT_FILTER_BOUND = 50
DEFAULT_ENUMERATION_CAP = 1 << 20
REPORT_SCHEMA_VERSION = 1

# residue sizes beyond which the image at every good odd place is the whole
# unramified subgroup (two values are in circulation for the same bound)
UNRAMIFIED_SURJECTIVITY_BOUND = 66562
UNRAMIFIED_SURJECTIVITY_BOUND_ALT = 66569


# ---------------------------------------------------------------------------
# bad places


@dataclass(frozen=True)
class BadPlaceSet:
    places: tuple[int, ...]  # REAL first, then primes ascending

    @property
    def primes(self) -> tuple[int, ...]:
        return self.places[1:]

    def __len__(self) -> int:
        return len(self.places)

    def __iter__(self):
        return iter(self.places)

    def names(self) -> list[str]:
        return [place_name(v) for v in self.places]


def _strip(n: int, primes: Iterable[int]) -> int:
    n = abs(n)
    for p in primes:
        while n % p == 0:
            n //= p
    return n


def bad_places(curve: LabelledQuartic) -> BadPlaceSet:
    cached = curve._cache.get("bad_places")
    if cached is not None:
        return cached
    hints: set[int] = set()
    if curve.moduli is not None:
        cfg = PointConfiguration(tuple(tuple(m) for m in curve.moduli))
        for m in configuration_minors(cfg):
            hints |= factor_support(m)
    primes = bad_prime_support(curve.f, [curve.bitangents[l] for l in LABELS], hints)
    # delta is a unit at good primes; anything left over is added rather than trusted
    for data in curve.syzygies.values():
        for part in (data.delta.numerator, data.delta.denominator):
            rest = _strip(part, primes)
            if rest > 1:
                primes |= factor_support(rest)
    result = BadPlaceSet((REAL,) + tuple(sorted(primes)))
    curve._cache["bad_places"] = result
    return result


# ---------------------------------------------------------------------------
# the global group and restriction maps


@dataclass(frozen=True)
class GlobalGroup:
    S: BadPlaceSet

    @property
    def generators(self) -> tuple[int, ...]:
        return (-1,) + self.S.primes

    @property
    def m(self) -> int:
        return len(self.generators)

    @property
    def dim_L(self) -> int:
        return 6 * self.m

    @property
    def dim(self) -> int:
        return 1 + self.dim_L

    def bit(self, slot: int, gen: int) -> int:
        return 1 + slot * self.m + gen

    def basis_labels(self) -> list[str]:
        out = ["parity"]
        for k in range(6):
            out += [f"slot{k + 1}:{g}" for g in self.generators]
        return out

    def class_vector(self, x) -> int:
        """Coordinates of a nonzero rational on the generators; NotASquare if not an S-unit mod squares."""
        x = Fraction(x)
        if x == 0:
            raise ZeroDivisionError("class of zero")
        out = 1 if x < 0 else 0
        num, den = abs(x.numerator), x.denominator
        for g, p in enumerate(self.S.primes, start=1):
            e = 0
            while num % p == 0:
                num //= p
                e += 1
            while den % p == 0:
                den //= p
                e += 1
            out |= (e & 1) << g
        rest = num * den
        if isqrt(rest) ** 2 != rest:
            raise NotASquare(f"{x} is not an S-unit up to squares")
        return out

    def twist_from_values(self, values: Sequence) -> int:
        """L'(2, Q; S) part (unshifted) from seven rational representatives."""
        out = 0
        for k in range(6):
            cv = self.class_vector(Fraction(values[k]) * Fraction(values[6]))
            for g in range(self.m):
                if (cv >> g) & 1:
                    out |= 1 << (k * self.m + g)
        return out

    def element(self, parity: int, twist: int) -> int:
        return parity | (twist << 1)


def global_group(S: BadPlaceSet) -> GlobalGroup:
    return GlobalGroup(S)


def rho(G: GlobalGroup, v: int) -> F2Map:
    """F2 x L'(2, Q; S) -> F2 x L'(2, Q_v), parity passed through."""
    w = class_width(v)
    gen_classes = [rational_class_bits(g, v) for g in G.generators]
    cols = [1]
    for k in range(6):
        for g in range(G.m):
            cols.append(gen_classes[g] << (1 + w * k))
    return F2Map(cols, extended_dimension(v))


# ---------------------------------------------------------------------------
# gamma of rational points


def gamma_values(curve: LabelledQuartic, P: Sequence[int]) -> list[Fraction]:
    """Seven nonzero rationals representing gamma(P) for a rational point P."""
    table = fallback_table(curve)
    vals = {lab: Fraction(curve.bitangents[lab](*P)) for lab in LABELS}
    out = []
    for i in range(1, 8):
        x = vals[(0, i)]
        if x == 0:
            for others, delta in table[i]:
                prod = delta * vals[others[0]] * vals[others[1]] * vals[others[2]]
                if prod != 0:
                    x = prod
                    break
        out.append(x)
    return out


def global_gamma(curve: LabelledQuartic, P: Sequence[int], G: GlobalGroup | None = None) -> int:
    """(1, gamma(P)) in F2 x L'(2, Q; S)."""
    G = G or global_group(bad_places(curve))
    return G.element(1, G.twist_from_values(gamma_values(curve, P)))


# ---------------------------------------------------------------------------
# point search


def normalize_point(P: Sequence[int]) -> tuple[int, int, int]:
    v = primitive_vector(P)
    lead = next(c for c in v if c)
    return tuple(-c for c in v) if lead < 0 else tuple(v)


def _root_table(f: TernaryForm, p: int) -> np.ndarray:
    """table[a, b] is True when f(a, b, z) = 0 mod p has a solution z."""
    r = np.arange(p, dtype=np.int64)
    powers = [np.ones(p, dtype=np.int64)]
    for _ in range(4):
        powers.append(powers[-1] * r % p)
    # coefficient of z^c as a function of (a, b)
    coeff = [np.zeros((p, p), dtype=np.int64) for _ in range(5)]
    for (a, b, c), k in f.coeffs.items():
        k = int(k) % p
        if k:
            coeff[c] = (coeff[c] + (k * powers[a] % p)[:, None] * powers[b][None, :]) % p
    table = np.zeros((p, p), dtype=bool)
    for z in range(p):
        val = coeff[4]
        for c in (3, 2, 1, 0):
            val = (val * z + coeff[c]) % p
        table |= val == 0
    return table


def _z_coefficients(f: TernaryForm, x: int, y: int) -> list[int]:
    """Coefficients of f(x, y, z) in z, highest power first."""
    coeffs = [0] * 5
    for (a, b, c), k in f.coeffs.items():
        coeffs[4 - c] += int(k) * x**a * y**b
    return coeffs


def _integer_roots(coeffs: list[int], bound: int) -> list[int]:
    while coeffs and coeffs[0] == 0:
        coeffs = coeffs[1:]
    if len(coeffs) <= 1:
        return []
    cands = set()
    if coeffs[-1] == 0:
        cands.add(0)
    scale = max(abs(c) for c in coeffs)
    roots = np.roots([c / scale for c in coeffs])
    for r in roots:
        if abs(r.imag) <= 1e-3 * max(1.0, abs(r.real)) and abs(r.real) <= bound + 1:
            z0 = int(round(r.real))
            cands.update((z0 - 1, z0, z0 + 1))
    out = []
    for z in cands:
        if abs(z) <= bound and sum(c * z ** (len(coeffs) - 1 - i) for i, c in enumerate(coeffs)) == 0:
            out.append(z)
    return out


def contact_point_list(curve: LabelledQuartic) -> list[tuple[int, int, int]]:
    return [normalize_point(P) for P in curve.rational_contact_points()]


def search_points(f: TernaryForm, H: int, sieve_primes: Sequence[int] | None = None,
                  block: int = 256) -> list[tuple[int, int, int]]:
    """All points of f = 0 with coprime integer coordinates of absolute value at most H."""
    if sieve_primes is None:
        sieve_primes = list(primerange(3, 114))
    found: set[tuple[int, int, int]] = set()
    if f(0, 0, 1) == 0:
        found.add((0, 0, 1))
    ys = np.arange(-H, H + 1, dtype=np.int64)
    masks = []
    for p in sieve_primes:
        table = _root_table(f, p)
        masks.append((p, np.packbits(table[:, ys % p], axis=1)))
    for x_start in range(0, H + 1, block):
        xs = np.arange(x_start, min(H + 1, x_start + block), dtype=np.int64)
        keep = np.full((len(xs), masks[0][1].shape[1] if masks else (2 * H + 8) // 8), 0xFF, dtype=np.uint8)
        for p, m in masks:
            keep &= m[xs % p]
        alive = np.unpackbits(keep, axis=1)[:, : len(ys)].astype(bool)
        for xi, yi in zip(*np.nonzero(alive)):
            x, y = int(xs[xi]), int(ys[yi])
            if x == 0 and y == 0:
                continue
            if gcd(x, y) > H:
                continue
            for z in _integer_roots(_z_coefficients(f, x, y), H):
                if gcd(gcd(x, y), z) == 1:
                    found.add(normalize_point((x, y, z)))
    return sorted(found)


def point_search(curve: LabelledQuartic, H: int) -> list[tuple[int, int, int]]:
    """Rational points of height at most H together with all rational contact points.

    H = 0 returns the contact points alone.
    """
    pts = set(search_points(curve.f, H)) if H > 0 else set()
    pts.update(contact_point_list(curve))
    for P in pts:
        if curve.f(*P) != 0:
            raise TwoCoverError(f"point search returned {P}, which is not on the curve")
    return sorted(pts)


# ---------------------------------------------------------------------------
# descent


@dataclass
class DescentConfig:
    filter_bound: int = DEFAULT_FILTER_BOUND
    filter_primes: tuple[int, ...] | None = None
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP
    search_height: int = 100
    local: LocalConfig = field(default_factory=LocalConfig)


@dataclass
class FilterRecord:
    p: int
    image_size: int | None
    survivors: int | None
    skipped: bool = False

    def to_json(self) -> dict:
        d = {"p": self.p, "imageSize": self.image_size, "survivors": self.survivors}
        if self.skipped:
            d["skipped"] = True
        return d


@dataclass
class SelmerReport:
    S: BadPlaceSet
    dim_L: int
    dim_W: int
    W1_dim: int | None
    survivors: list[int] | None
    filters: list[FilterRecord]
    jac_selmer_dim: int
    jac_selmer_exact: bool
    points: list[tuple[int, int, int]]
    conclusion: str
    spans: dict[int, LocalSpan] = field(default_factory=dict)
    local_obstructions: list[int] = field(default_factory=list)
    W1: F2Affine | None = None

    @property
    def W1_empty(self) -> bool:
        return self.W1_dim is None

    def to_json(self) -> dict:
        return {
            "schemaVersion": REPORT_SCHEMA_VERSION,
            "S": self.S.names(),
            "dimL": self.dim_L,
            "dimW": self.dim_W,
            "W1": "empty" if self.W1_dim is None else {"dim": self.W1_dim},
            "survivors": None if self.survivors is None else len(self.survivors),
            "filters": [f.to_json() for f in self.filters],
            "jacSelmer": {"dim": self.jac_selmer_dim, "exact": self.jac_selmer_exact},
            "points": [list(P) for P in self.points],
            "localObstructions": [place_name(v) for v in self.local_obstructions],
            "localSpans": {place_name(v): {"dim": s.W.rank, "exact": s.exact, "source": s.source,
                                            "jacobianDim": s.jacobian.rank if s.jacobian is not None else None,
                                            "jacobianExact": s.jac_exact}
                           for v, s in self.spans.items()},
            "conclusion": self.conclusion,
        }


HAS_POINT = "HasRationalPoint"
NO_POINT = "NoRationalPoint"
UNDETERMINED = "Undetermined"


def selmer_affine(curve: LabelledQuartic, config: DescentConfig | None = None
                  ) -> tuple[GlobalGroup, F2Subspace, dict[int, LocalSpan]]:
    """W = intersection over v in S of the preimages of the local spans."""
    config = config or DescentConfig()
    S = bad_places(curve)
    G = global_group(S)
    W = F2Subspace.full(G.dim)
    spans = {}
    for v in S:
        span = local_span(curve, v, config.local, S.primes)
        spans[v] = span
        W = W.intersect(f2_subspace_preimage(rho(G, v), span.W))
    return G, W, spans


def parity_slices(W: F2Subspace) -> tuple[F2Subspace, F2Affine]:
    even = W.intersect(F2Subspace.span(W.dim, (1 << i for i in range(1, W.dim))))
    odd = next((b for b in W.basis if b & 1), None)
    return even, (F2Affine.empty(W.dim) if odd is None else F2Affine(odd, even))


def jacobian_subspace(G: GlobalGroup, spans: dict[int, LocalSpan]) -> tuple[F2Subspace, bool]:
    """Lower bound for the Jacobian Selmer group, exact when every local part is complete."""
    J = F2Subspace.span(G.dim, (1 << i for i in range(1, G.dim)))
    for v, span in spans.items():
        J = J.intersect(f2_subspace_preimage(rho(G, v), span.jacobian))
    return J, all(s.jac_exact for s in spans.values())


def jacobian_selmer(curve: LabelledQuartic, config: DescentConfig | None = None) -> tuple[int, bool]:
    G, _, spans = selmer_affine(curve, config)
    J, exact = jacobian_subspace(G, spans)
    return J.rank, exact


def filter_primes_for(config: DescentConfig) -> list[int]:
    if config.filter_primes is not None:
        return sorted(set(config.filter_primes))
    return list(primerange(2, config.filter_bound + 1))


def two_cover_descent(curve: LabelledQuartic, config: DescentConfig | None = None) -> SelmerReport:
    config = config or DescentConfig()
    G, W, spans = selmer_affine(curve, config)
    S = G.S
    even, W1 = parity_slices(W)
    J, jac_exact = jacobian_subspace(G, spans)
    obstructions = [v for v, s in spans.items() if s.source == "image" and not any(b & 1 for b in s.W.basis)]

    filters: list[FilterRecord] = []
    survivors: list[int] | None
    capped = False
    if W1.is_empty:
        survivors = []
    elif len(W1) > config.enumeration_cap:
        survivors = None
        capped = True
    else:
        survivors = list(W1)
    if survivors:
        for p in filter_primes_for(config):
            try:
                image = local_image(curve, p, S.primes, config.local)
            except (DepthExceeded, TwoCoverError) as exc:
                log.warning("filter at %d skipped: %s", p, exc)
                filters.append(FilterRecord(p, None, None, skipped=True))
                continue
            if not image.complete:
                filters.append(FilterRecord(p, len(image), None, skipped=True))
                continue
            if len(image) == 0:
                obstructions.append(p)
            r = rho(G, p)
            survivors = [w for w in survivors if (r(w) >> 1) in image]
            filters.append(FilterRecord(p, len(image), len(survivors)))
            if not survivors:
                break

    pts = contact_point_list(curve)
    if survivors is None or survivors:
        pts = point_search(curve, config.search_height)
    pts = sorted(set(pts))
    for P in pts:
        g = global_gamma(curve, P, G)
        if g not in W or (survivors is not None and g not in survivors):
            raise TwoCoverError(f"rational point {P} is missing from the Selmer set")
    if pts:
        conclusion = HAS_POINT
    elif survivors == []:
        conclusion = NO_POINT
    else:
        conclusion = UNDETERMINED
    if capped:
        log.info("W1 has %d elements, above the enumeration cap", len(W1))
    return SelmerReport(
        S=S,
        dim_L=G.dim_L,
        dim_W=W.rank,
        W1_dim=None if W1.is_empty else W1.direction.rank,
        survivors=survivors,
        filters=filters,
        jac_selmer_dim=J.rank,
        jac_selmer_exact=jac_exact,
        points=pts,
        conclusion=conclusion,
        spans=spans,
        local_obstructions=sorted(set(obstructions)),
        W1=W1,
    )


def enumerate_bounded(W1: F2Affine, cap: int) -> list[int]:
    if len(W1) > cap:
        raise EnumerationCapExceeded(f"{len(W1)} elements exceed the cap {cap}")
    return list(W1)
