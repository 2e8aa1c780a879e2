from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twocover.arith import (
    REAL,
    FiniteField,
    PadicNumber,
    RealQuadratic,
    SquareClass,
    class_width,
    ff_is_square,
    ord4,
    padic_square_class,
    rational_class_bits,
    real_sign,
    real_square_class,
)
from twocover.errors import EvenCharacteristic, InsufficientPrecision, ZeroValue

PRIMES = [2, 3, 5, 7, 11, 13]
nonzero = st.integers(-10**6, 10**6).filter(bool)


def unit_squares_mod(p: int, k: int) -> set[int]:
    m = p**k
    return {u * u % m for u in range(m) if u % p}


def test_padic_class_of_nine_is_trivial():
    assert padic_square_class(PadicNumber.from_rational(9, 3)).bits == 0


def test_padic_class_of_eighteen():
    # 18 = 3^2 * 2 and 2 is not a unit square mod 27
    assert 2 not in unit_squares_mod(3, 3)
    assert padic_square_class(PadicNumber.from_rational(18, 3)).bits == 0b10


def test_two_adic_class_of_five():
    assert 5 not in unit_squares_mod(2, 3)
    assert padic_square_class(PadicNumber.from_rational(5, 2)).bits == 0b100


def test_two_adic_basis():
    cls = lambda x: padic_square_class(PadicNumber.from_rational(x, 2)).bits
    assert [cls(x) for x in (1, -1, 5, -5, 2, -2, 10, -10)] == [0, 2, 4, 6, 1, 3, 5, 7]


def test_real_signs():
    assert real_sign(RealQuadratic(1, 1, 2)) == 1
    assert real_sign(RealQuadratic(1, -1, 2)) == -1
    assert real_sign(RealQuadratic(-3, 0, 5)) == -1
    assert real_square_class(RealQuadratic(-3)).bits == 1


def test_real_quadratic_collapses_square_radicands():
    assert RealQuadratic(1, 2, 9) == RealQuadratic(7)


def test_real_sign_of_zero_raises():
    with pytest.raises(ZeroValue):
        real_sign(RealQuadratic(0))


def test_finite_field_squares():
    F7 = FiniteField(7)
    assert 2 in {x * x % 7 for x in range(7)}
    assert ff_is_square(F7(2))
    F9 = FiniteField(3, 2)
    assert not ff_is_square(F9.generator())
    for q_field in (F7, F9, FiniteField(11)):
        assert ff_is_square(q_field.one)


def test_finite_field_generator_has_full_order():
    F = FiniteField(3, 2)
    g = F.generator()
    seen = {(g**k).index for k in range(8)}
    assert len(seen) == 8 and F.zero.index not in seen


def test_even_characteristic_rejected():
    with pytest.raises(EvenCharacteristic):
        ff_is_square(FiniteField(2)(1))


def test_square_class_addition_checks_places():
    with pytest.raises(ValueError):
        SquareClass(3, 1) + SquareClass(5, 1)


def test_indistinct_zero_has_no_class():
    x = PadicNumber.from_rational(3**20, 3, precision=4) - PadicNumber.from_rational(3**20, 3, precision=4)
    with pytest.raises((InsufficientPrecision, ZeroValue)):
        padic_square_class(x)


def test_class_widths():
    assert [class_width(v) for v in (REAL, 2, 3, 101)] == [1, 3, 2, 2]
    assert ord4(2) == 2 and ord4(3) == 0


@settings(max_examples=200, deadline=None)
@given(nonzero, nonzero, st.sampled_from([REAL] + PRIMES))
def test_square_class_is_a_homomorphism(a, b, v):
    assert rational_class_bits(a * b, v) == rational_class_bits(a, v) ^ rational_class_bits(b, v)


@settings(max_examples=200, deadline=None)
@given(nonzero, st.sampled_from(PRIMES))
def test_padic_class_agrees_with_rational_class(a, p):
    assert padic_square_class(PadicNumber.from_rational(a, p)).bits == rational_class_bits(a, p)


@settings(max_examples=200, deadline=None)
@given(nonzero, st.integers(-10**4, 10**4), st.sampled_from(PRIMES))
def test_class_is_stable_on_small_balls(x0, y, p):
    # x0 + p^(ord(x0) + ord4(p) + 1) * y lies in the square class of x0
    e = 0
    n = abs(x0)
    while n % p == 0:
        n //= p
        e += 1
    x = x0 + p ** (e + ord4(p) + 1) * y
    assert rational_class_bits(x, p) == rational_class_bits(x0, p)


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 10**6), st.sampled_from(PRIMES))
def test_unit_class_matches_enumeration(u, p):
    if u % p == 0:
        u += 1
    k = 3 if p == 2 else 1
    expect_square = u % p**k in unit_squares_mod(p, k)
    assert (rational_class_bits(u, p) == 0) == expect_square


@settings(max_examples=100, deadline=None)
@given(nonzero, nonzero, st.sampled_from(PRIMES))
def test_padic_field_operations(a, b, p):
    x, y = PadicNumber.from_rational(a, p, 30), PadicNumber.from_rational(b, p, 30)
    for got, want in ((x * y, Fraction(a * b)), (x / y, Fraction(a, b))):
        assert padic_square_class(got).bits == rational_class_bits(want, p)


@settings(max_examples=100, deadline=None)
@given(nonzero, st.sampled_from(PRIMES))
def test_padic_sqrt_squares_back(a, p):
    x = PadicNumber.from_rational(a * a, p, 20)
    r = x.sqrt()
    diff = r * r - x
    assert diff.exact_zero or diff.is_indistinct_zero() or diff.valuation >= x.valuation + r.precision - 1
