from itertools import product

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from twocover.arith import REAL
from twocover.descent import bad_places
from twocover.errors import BadReduction, DepthExceeded
from twocover.forms import TernaryForm
from twocover.local import (
    HenselBall,
    ImageCache,
    LocalConfig,
    evaluate,
    extended_dimension,
    hensel_balls,
    span_threshold,
    local_image,
    local_image_good_odd,
    local_image_padic,
    local_image_real,
    local_span,
    newton_lift,
    unramified_subgroup,
)
from twocover.moduli import PointConfiguration, build_quartic

# good reduction at 11, found by scanning small configurations that stay in general position mod 11
GOOD_AT_11 = (-5, -4, -4, -2, 2, 3)


def balls_set(poly, p):
    return {(b.x0, b.y0, b.e) for b in hensel_balls(poly, p)}


def test_hensel_balls_examples():
    assert balls_set({(1, 0): 1, (0, 1): -1}, 3) == {(0, 0, 1), (1, 1, 1), (2, 2, 1)}
    circle = {(2, 0): 1, (0, 2): 1, (0, 0): -1}
    assert balls_set(circle, 3) == {(0, 1, 1), (0, 2, 1), (1, 0, 1), (2, 0, 1)}
    assert balls_set({(2, 0): 1, (0, 2): 1, (0, 0): -3}, 3) == set()
    # brute force: x^2 + y^2 = 3 has no solutions mod 27
    assert not any((x * x + y * y - 3) % 27 == 0 for x in range(27) for y in range(27))


polys = st.dictionaries(
    st.tuples(st.integers(0, 3), st.integers(0, 3)).filter(lambda e: sum(e) <= 3),
    st.integers(-6, 6).filter(bool),
    min_size=2,
    max_size=6,
)


def _derivs(poly, x, y):
    gx = sum(c * i * x ** (i - 1) * y**j for (i, j), c in poly.items() if i)
    gy = sum(c * j * x**i * y ** (j - 1) for (i, j), c in poly.items() if j)
    return gx, gy


def _val(n, p, cap):
    if n == 0:
        return cap
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(polys, st.sampled_from([2, 3, 5]))
def test_hensel_balls_cover_liftable_residues(poly, p):
    k = {2: 6, 3: 4, 5: 3}[p]
    try:
        balls = hensel_balls(poly, p, depth_cap=12)
    except DepthExceeded:
        return
    m = p**k
    # pairwise disjoint
    for a in balls:
        for b in balls:
            if a is not b:
                e = min(a.e, b.e)
                assert (a.x0 - b.x0) % p**e or (a.y0 - b.y0) % p**e
    for x, y in product(range(m), repeat=2):
        val = evaluate(poly, x, y)
        if val % m:
            continue
        gv = min(_val(g, p, k) for g in _derivs(poly, x, y))
        if 2 * gv < k:
            # Hensel: (x, y) is the reduction of a Z_p-point, so some ball must contain it
            assert any(b.contains(x, y, p) if b.e <= k else
                       ((x - b.x0) % m == 0 and (y - b.y0) % m == 0) for b in balls), (x, y)


@settings(max_examples=40, deadline=None)
@given(polys, st.sampled_from([2, 3, 5, 7]))
def test_newton_lift_lands_in_ball(poly, p):
    try:
        balls = hensel_balls(poly, p, depth_cap=10)
    except DepthExceeded:
        return
    for ball in balls[:4]:
        x, y = newton_lift(poly, ball, p, 20)
        assert ball.contains(x, y, p)
        assert evaluate(poly, x, y) % p**20 == 0


def test_thresholds_and_dimensions():
    assert [span_threshold(v) for v in (REAL, 2, 3, 97)] == [3, 9, 6, 6]
    assert [extended_dimension(v) for v in (REAL, 2, 3)] == [7, 19, 13]


def test_unramified_subgroup():
    U = unramified_subgroup(13)
    assert U.rank == 6 and len(U) == 64
    with pytest.raises(BadReduction):
        unramified_subgroup(2)


def test_real_image_has_four_classes(worked, small_curves):
    for curve in (worked,) + small_curves:
        assert len(local_image_real(curve)) == 4


def test_worked_example_has_two_adic_points(worked):
    assert len(local_image_padic(worked, 2)) > 0


@pytest.mark.parametrize("p", [23, 31])
def test_padic_matches_residue_scan_on_worked_example(worked, p):
    S = bad_places(worked).primes
    assert p not in S
    assert local_image_padic(worked, p).values == local_image_good_odd(worked, p, S).values


def test_residue_scan_rejects_bad_primes(worked):
    with pytest.raises(BadReduction):
        local_image_good_odd(worked, 13)
    with pytest.raises(BadReduction):
        local_image_good_odd(worked, 2)


def test_good_reduction_at_eleven_forces_empty_image():
    curve = build_quartic(PointConfiguration.from_flat(GOOD_AT_11))
    S = bad_places(curve).primes
    assert 11 not in S
    assert len(local_image_good_odd(curve, 11, S)) == 0
    assert len(local_image_padic(curve, 11)) == 0


def test_images_at_small_good_primes_are_proper_unramified_subsets(worked):
    S = bad_places(worked).primes
    U = unramified_subgroup(23)
    for p in (23,):
        image = local_image_good_odd(worked, p, S)
        assert all(v in U for v in image.values)
        assert 0 < len(image) < 64


def test_worked_example_spans_are_exact_from_contact_points(worked):
    S = bad_places(worked)
    for v in S:
        span = local_span(worked, v, bad_primes=S.primes)
        assert span.exact and span.source == "contact"
        assert span.jac_exact
        assert span.jacobian.rank == span_threshold(v)
        assert span.W0.rank == span_threshold(v)


def test_exact_spans_have_threshold_dimension(small_curves):
    for curve in small_curves:
        S = bad_places(curve)
        for v in S:
            span = local_span(curve, v, bad_primes=S.primes)
            if span.exact:
                assert span.W0.rank == span_threshold(v)
            if span.jac_exact:
                assert span.W0.rank <= span.jacobian.rank


def test_span_contains_full_image(worked):
    S = bad_places(worked)
    for p in (2, 3, 5):
        span = local_span(worked, p, bad_primes=S.primes)
        image = local_image_padic(worked, p)
        assert all((1 | (t << 1)) in span.W for t in image.values)


def test_image_cache_round_trip(worked, tmp_path):
    cache = ImageCache(tmp_path)
    config = LocalConfig(cache=cache)
    S = bad_places(worked).primes
    first = local_image(worked, 3, S, config)
    assert list(tmp_path.iterdir())
    again = local_image(worked, 3, S, LocalConfig(cache=ImageCache(tmp_path)))
    assert again == first


def test_depth_cap_is_enforced():
    # a node at the origin never becomes Hensel-liftable
    with pytest.raises(DepthExceeded):
        hensel_balls({(2, 0): 1, (0, 2): -1}, 3, depth_cap=5)
