import time
from collections import Counter
from itertools import combinations

import pytest

from twocover.arith import REAL, rational_class_bits
from twocover.errors import NotSyzygetic
from twocover.linalg import rational_nullspace
from twocover.moduli import ARONHOLD, LABELS, label
from twocover.theta import (
    PadicPlace,
    RationalPlace,
    RealQuadraticPlace,
    SyzygeticData,
    TwistCoordinates,
    aronhold_sets,
    contact_conic,
    enumerate_syzygetic,
    gamma,
    gamma_all_fallbacks,
    gamma_tilde,
    is_syzygetic,
    padic_contact_points,
    quadruples_through,
    real_contact_points,
    syzygetic_type,
    syzygy_data,
    syzygy_residual,
    theta_values,
    twist_classes,
    twist_vector,
)

L = lambda s: label(int(s[0]), int(s[1]))


def test_syzygetic_examples():
    assert is_syzygetic([L("01"), L("12"), L("23"), L("03")])
    assert is_syzygetic([L("01"), L("23"), L("45"), L("67")])
    assert not is_syzygetic([L("01"), L("02"), L("03"), L("04")])


def test_syzygetic_census():
    quads = enumerate_syzygetic()
    assert len(quads) == 315
    assert Counter(syzygetic_type(q) for q in quads) == {"cycle": 210, "matching": 105}
    assert {len(quadruples_through(l)) for l in LABELS} == {45}


def test_aronhold_census_is_fast():
    aronhold_sets.cache_clear()
    t = time.perf_counter()
    sets = aronhold_sets()
    assert time.perf_counter() - t < 1.0
    assert len(sets) == 288
    assert ARONHOLD in sets


def test_aronhold_sets_have_no_syzygetic_triple():
    from twocover.theta import is_syzygetic_triple

    for s in aronhold_sets()[:40]:
        assert not any(is_syzygetic_triple(t) for t in combinations(s, 3))


def test_twist_vector_round_trip():
    classes = [3, 1, 0, 2, 2, 1, 3]
    vec = twist_vector(classes, 7)
    assert twist_vector(twist_classes(vec, 7), 7) == vec
    # adding the diagonal does not change the vector
    assert twist_vector([c ^ 1 for c in classes], 7) == vec


def test_all_syzygies_hold_on_worked_example(worked):
    assert len(worked.syzygies) == 315
    assert all(syzygy_residual(worked, d).is_zero() for d in worked.syzygies.values())


def test_syzygy_json_round_trip(worked):
    d = next(iter(worked.syzygies.values()))
    assert SyzygeticData.from_json(d.to_json()) == d


def test_azygetic_quadruple_has_no_contact_conic(worked):
    quad = [L("01"), L("02"), L("03"), L("04")]
    assert contact_conic(worked, quad) == []
    with pytest.raises(NotSyzygetic):
        syzygy_data(worked, quad)


def test_gamma_at_generic_rational_point(worked):
    P = (1, 2, 3)
    assert all(worked.bitangents[(0, i)](*P) != 0 for i in range(1, 8))
    for v in (REAL, 2, 3, 101):
        direct = [rational_class_bits(worked.bitangents[(0, i)](*P), v) for i in range(1, 8)]
        assert gamma(worked, P, RationalPlace(v)).vector == twist_vector(direct, v)


def test_gamma_tilde_conventions(worked):
    P = (1, 2, 3)
    ad = RationalPlace(5)
    assert gamma_tilde(worked, [], ad) == (0, TwistCoordinates(5, 0))
    par, tw = gamma_tilde(worked, [(P, 1)], ad)
    assert par == 1 and tw == gamma(worked, P, ad)
    par, tw = gamma_tilde(worked, [(P, 2)], ad)
    assert par == 0 and tw.vector == 0


def test_fallback_descriptions_agree_at_real_contact_points(worked):
    ad = RealQuadraticPlace()
    checked = 0
    for lab in LABELS:
        for P in real_contact_points(worked, lab):
            for slot in range(1, 8):
                assert len(gamma_all_fallbacks(worked, P, ad, slot)) == 1
            checked += 1
    assert checked > 0


@pytest.mark.parametrize("p", [3, 5, 7])
def test_fallback_descriptions_agree_at_padic_contact_points(worked, p):
    checked = 0
    for lab in LABELS:
        for P in padic_contact_points(worked, lab, p, 40):
            ad = PadicPlace(p)
            for slot in range(1, 8):
                assert len(gamma_all_fallbacks(worked, P, ad, slot)) <= 1
            checked += 1
    assert checked > 0


@pytest.mark.parametrize("p", [3, 5, 7, 11])
def test_contact_divisor_matches_its_two_points(worked, p):
    """theta_values agrees with gamma(P1) + gamma(P2) when both contact points are p-adic."""
    seen = 0
    for lab in LABELS:
        pts = padic_contact_points(worked, lab, p, 40)
        if len(pts) != 2:
            continue
        ad = PadicPlace(p)
        total = gamma(worked, pts[0], ad).vector ^ gamma(worked, pts[1], ad).vector
        theta = twist_vector([rational_class_bits(x, p) for x in theta_values(worked, lab)], p)
        assert theta == total
        seen += 1
    assert seen > 0
