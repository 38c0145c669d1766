from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from burgerscap.errors import DomainError, PreconditionError, SingularOrIllConditioned
from burgerscap.interval import (ComplexInterval, Interval, interval_matrix_exp_integral,
                                 ipow, krawczyk_inverse, mid_rest)
from oracles import exact_inverse, expm1_over, mp_in

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)


@st.composite
def intervals(draw):
    a, b = draw(finite), draw(finite)
    return Interval(min(a, b), max(a, b))


def _pick(draw, iv):
    lo, hi = float(iv.lo), float(iv.hi)
    t = draw(st.floats(min_value=0.0, max_value=1.0))
    return min(max(lo + t * (hi - lo), lo), hi)


def _within_one_ulp(iv, lo, hi):
    return (np.nextafter(lo, -np.inf) <= iv.lo <= lo) and (hi <= iv.hi <= np.nextafter(hi, np.inf))


def test_add_exact_endpoints():
    r = Interval(1.0, 2.0) + Interval(3.0, 4.0)
    assert _within_one_ulp(r, 4.0, 6.0)


def test_symmetric_product():
    r = Interval(-1.0, 1.0) * Interval(-1.0, 1.0)
    assert _within_one_ulp(r, -1.0, 1.0)


def test_third_is_tight():
    r = Interval.point(1.0) / Interval.point(3.0)
    third = mpmath.mpf(1) / 3
    assert mp_in(r.lo, r.hi, third)
    assert np.nextafter(np.nextafter(r.lo, np.inf), np.inf) >= r.hi


def test_division_by_zero_interval():
    with pytest.raises(DomainError):
        Interval(1.0, 2.0) / Interval(-1.0, 1.0)


def test_rejects_reversed_and_unbounded():
    with pytest.raises(DomainError):
        Interval(2.0, 1.0)
    with pytest.raises(DomainError):
        Interval(0.0, np.inf)


def test_mid_rest_examples():
    m, r = mid_rest(Interval(1.0, 3.0))
    assert m == 2.0 and r.contains(Interval(-1.0, 1.0))
    m, r = mid_rest(Interval(0.0, 0.0))
    assert m == 0.0 and float(r.lo) <= 0.0 <= float(r.hi)
    m, r = mid_rest(Interval(np.array([-2.0, 1.0]), np.array([6.0, 1.0])))
    assert np.array_equal(m, [2.0, 1.0])
    assert r.contains(Interval(np.array([-4.0, 0.0]), np.array([4.0, 0.0]))).all()
    assert r.contains_zero().all()


def test_from_decimal_encloses_exact_value():
    iv = Interval.from_decimal("0.1")
    assert Fraction(float(iv.lo)) <= Fraction("0.1") <= Fraction(float(iv.hi))
    assert float(iv.hi) == np.nextafter(float(iv.lo), np.inf)
    exact = Interval.from_decimal("0.5")
    assert float(exact.lo) == float(exact.hi) == 0.5


def test_krawczyk_identity():
    inv = krawczyk_inverse(np.eye(3))
    assert inv.contains(np.eye(3)).all()


def test_krawczyk_diagonal():
    inv = krawczyk_inverse(np.diag([2.0, 4.0]))
    assert inv.contains(np.diag([0.5, 0.25])).all()


def test_krawczyk_random_six():
    rng = np.random.default_rng(11)
    A = rng.normal(size=(6, 6)) + 6.0 * np.eye(6)
    inv = krawczyk_inverse(A)
    prod = Interval.point(A) @ inv
    assert prod.contains(np.eye(6)).all()
    off = prod.mag() * (1 - np.eye(6))
    assert off.max() < 1e-12
    exact = exact_inverse(A)
    for i in range(6):
        for j in range(6):
            assert mp_in(inv.lo[i, j], inv.hi[i, j], exact[i, j])


def test_krawczyk_singular():
    with pytest.raises(SingularOrIllConditioned):
        krawczyk_inverse(np.array([[1.0, 2.0], [2.0, 4.0]]))


def test_exp_integral_zero_matrix():
    D = interval_matrix_exp_integral(np.zeros((3, 3)), np.ones(3), 0.5)
    assert np.all(D >= 0.5) and np.all(D <= 0.5 + 1e-14)


def test_exp_integral_scalar_decay():
    D = interval_matrix_exp_integral(np.array([[-2.0]]), np.array([1.0]), 1.0)
    exact = -mpmath.expm1(-2) / 2
    assert mpmath.mpf(float(D[0])) >= exact
    assert float(D[0]) - float(exact) < 1e-12


@pytest.mark.parametrize("lam,h", [(0.7, 1.0), (3.0, 0.25), (40.0, 0.1)])
def test_exp_integral_scalar_growth(lam, h):
    D = interval_matrix_exp_integral(np.array([[lam]]), np.array([1.0]), h)
    exact = expm1_over(lam, h)
    assert mpmath.mpf(float(D[0])) >= exact
    assert float(D[0]) <= float(exact) * (1 + 1e-9)


def test_exp_integral_rejects_negative_coupling():
    with pytest.raises(PreconditionError):
        interval_matrix_exp_integral(np.array([[0.0, -1.0], [0.0, 0.0]]), np.ones(2), 0.1)


def test_complex_multiplication_encloses():
    a = ComplexInterval(Interval(1.0, 1.5), Interval(-0.5, 0.25))
    b = ComplexInterval(Interval(-2.0, -1.0), Interval(0.5, 0.75))
    c = a * b
    for z in (1.2 - 0.1j, 1.5 + 0.25j, 1.0 - 0.5j):
        for w in (-1.5 + 0.6j, -2.0 + 0.75j):
            assert c.contains(z * w)


def test_real_round_trip_layout():
    z = ComplexInterval.point(np.array([1 + 2j, 3 - 4j]))
    x = z.to_real()
    assert np.array_equal(x.lo, [1.0, 2.0, 3.0, -4.0])
    back = ComplexInterval.from_real(x)
    assert np.array_equal(back.mid(), [1 + 2j, 3 - 4j])


# properties -----------------------------------------------------------------

@given(st.data(), intervals(), intervals())
def test_inclusion_monotone_four_ops(data, a, b):
    x = _pick(data.draw, a)
    y = _pick(data.draw, b)
    X, Y = Fraction(x), Fraction(y)
    for op, exact in (("add", X + Y), ("sub", X - Y), ("mul", X * Y)):
        r = {"add": a + b, "sub": a - b, "mul": a * b}[op]
        assert Fraction(float(r.lo)) <= exact <= Fraction(float(r.hi)), op
    if not b.contains_zero():
        r = a / b
        assert Fraction(float(r.lo)) <= X / Y <= Fraction(float(r.hi))


@given(intervals(), intervals(), intervals())
def test_subdistributive(a, b, c):
    # exact interval arithmetic is subdistributive; outward rounding of b + c
    # may widen the left side by a few ulps
    left = a * (b + c)
    right = a * b + a * c
    slack = 4 * np.spacing(max(float(left.mag()), float(right.mag()), 1e-300))
    assert float(right.lo) - slack <= float(left.lo)
    assert float(left.hi) <= float(right.hi) + slack


@given(st.floats(min_value=1e-3, max_value=50.0), st.floats(min_value=-3.0, max_value=3.0))
def test_real_power_encloses(x, s):
    r = ipow(Interval.point(x), s)
    exact = mpmath.power(mpmath.mpf(x), mpmath.mpf(s))
    assert mp_in(r.lo, r.hi, exact)


@given(st.floats(min_value=-30.0, max_value=30.0))
def test_exp_log_enclose(x):
    e = Interval.point(x).exp()
    assert mp_in(e.lo, e.hi, mpmath.exp(mpmath.mpf(x)))
    if x > 0:
        g = Interval.point(x).log()
        assert mp_in(g.lo, g.hi, mpmath.log(mpmath.mpf(x)))


@given(st.integers(min_value=1, max_value=8), st.integers(min_value=0, max_value=2**31))
def test_krawczyk_contains_identity(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n)) + n * np.eye(n)
    inv = krawczyk_inverse(A)
    assert (Interval.point(A) @ inv).contains(np.eye(n)).all()


@given(st.floats(min_value=-20.0, max_value=5.0), st.floats(min_value=1e-3, max_value=2.0))
def test_exp_integral_scalar_closed_form(lam, h):
    D = interval_matrix_exp_integral(np.array([[lam]]), np.array([1.0]), h)
    exact = expm1_over(lam, h) if lam != 0 else mpmath.mpf(h)
    assert mpmath.mpf(float(D[0])) >= exact
    assert float(D[0]) <= float(exact) * (1 + 1e-9) + 1e-15
