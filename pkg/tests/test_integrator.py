import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from burgerscap.bounds import PolyBd, b_from_n, g_from_b, nk_bound_sharp
from burgerscap.errors import ConfigurationError, StepFailure, ValidationException
from burgerscap.integrator import (Doubleton, IntegratorConfig, TailValidationState, combine,
                                   cover_from, far_tail_covers, inclusion_step, lohner_step,
                                   predict_m, rough_enclosure, taylor_coefficients, validate_tail,
                                   _tighten_with_g)
from burgerscap.fixedpoint import rhs_float
from burgerscap.interval import ComplexInterval, Interval
from burgerscap.spectral import BurgersParams, ForcingSet
from oracles import ReferenceBurgers, galerkin_rhs, rk4_galerkin, sample_disc


def _box(mid, rad):
    mid = np.asarray(mid, dtype=float)
    return Interval(mid - rad, mid + rad)


def _cbox(mid, rad):
    mid = np.asarray(mid, dtype=complex)
    return ComplexInterval(Interval(mid.real - rad, mid.real + rad),
                           Interval(mid.imag - rad, mid.imag + rad))


def _to_complex(x):
    return x[0::2] + 1j * x[1::2]


def _sample_box(rng, box, n):
    u = rng.uniform(size=(n, len(box.lo)))
    return box.lo + u * (box.hi - box.lo)


def _contains_points(iv, pts, tol=0.0):
    return bool(np.all(iv.lo - tol <= pts) and np.all(pts <= iv.hi + tol))


# rough enclosure -------------------------------------------------------------------

def test_rough_enclosure_scalar_decay():
    p = BurgersParams(Interval.point(1.0), 0.0, 1)
    x0 = _cbox([1.05], 0.05)
    W = rough_enclosure(x0, None, 0.1, p, ComplexInterval.zeros(1))
    # x0 e^{-t} for t in [0, 0.1] sweeps [e^{-0.1}, 1.1]
    assert W.re.contains(Interval(math.exp(-0.1), 1.1)).all()
    assert float(W.re.lo[0]) > 0.85 and float(W.re.hi[0]) < 1.2


def test_rough_enclosure_contains_galerkin_paths():
    rng = np.random.default_rng(0)
    m, nu, alpha, h = 3, 1.0, 0.5, 0.01
    forcing = np.array([0.3, -0.2j, 0.0])
    p = BurgersParams(Interval.point(nu), alpha, m)
    x0 = _cbox([0.2 - 0.1j, 0.05j, 0.01], 1e-3)
    W = rough_enclosure(x0, None, h, p, ComplexInterval.point(forcing))
    X = x0.to_real()
    for x in _sample_box(rng, X, 8):
        a = _to_complex(x)
        for t in (0.0025, 0.005, 0.0075, 0.01):
            b = rk4_galerkin(a, nu, alpha, forcing, t, substeps=20)
            assert _contains_points(W.to_real(), np.stack([b.real, b.imag], -1).ravel())


def test_rough_enclosure_fails_on_huge_sets():
    p = BurgersParams(Interval.point(0.01), 0.0, 4)
    x0 = _cbox([50.0, 50.0, 50.0, 50.0], 10.0)
    with pytest.raises(StepFailure):
        rough_enclosure(x0, None, 1.0, p, ComplexInterval.zeros(4), retries=3)


# Taylor and Lohner ---------------------------------------------------------------------

def test_first_taylor_coefficient_is_the_field():
    rng = np.random.default_rng(1)
    m, nu, alpha = 4, 1.3, 0.2
    a = rng.normal(size=m) + 1j * rng.normal(size=m)
    forcing = np.array([0.1, 0.2j, 0.0, -0.3])
    p = BurgersParams(Interval.point(nu), alpha, m)
    c = taylor_coefficients(ComplexInterval.point(a), alpha, p.eigenvalues(m),
                            ComplexInterval.point(forcing), 3)
    F = galerkin_rhs(a, nu, alpha, forcing)
    assert c[0].contains(a).all() and c[1].contains(F).all()
    # second coefficient: (1/2) DF(a) F(a), checked by a central difference
    eps = 1e-6
    x = np.stack([a.real, a.imag], -1).ravel()
    Fx = rhs_float(x, nu, alpha, forcing)
    dF = (rhs_float(x + eps * Fx, nu, alpha, forcing) - rhs_float(x - eps * Fx, nu, alpha, forcing)) / (2 * eps)
    assert np.allclose(c[2].to_real().mid(), 0.5 * dF, atol=1e-6)


def test_lohner_linear_scalar():
    p = BurgersParams(Interval.point(1.0), 0.0, 1)
    f = ForcingSet.from_modes({}, 1)
    x0 = Doubleton.from_box(Interval.point(np.array([1.0, 0.0])))
    new, _ = lohner_step(x0, None, 0.01, 8, p, f)
    H = new.hull()
    assert H.contains(np.array([math.exp(-0.01), 0.0])).all()
    assert float(np.max(H.width())) < 1e-13


def test_lohner_rejects_bad_order():
    p = BurgersParams(Interval.point(1.0), 0.0, 1)
    f = ForcingSet.from_modes({}, 1)
    x0 = Doubleton.from_box(Interval.point(np.array([1.0, 0.0])))
    with pytest.raises(StepFailure):
        lohner_step(x0, None, 0.01, 0, p, f)


@settings(max_examples=10)
@given(st.integers(min_value=0, max_value=2 ** 31))
def test_lohner_contains_galerkin_flow(seed):
    rng = np.random.default_rng(seed)
    m, nu, alpha, h = 3, float(rng.uniform(0.5, 2.0)), float(rng.uniform(-1, 1)), 0.01
    forcing = rng.normal(size=m) + 1j * rng.normal(size=m)
    p = BurgersParams(Interval.point(nu), alpha, m)
    f = ForcingSet(ComplexInterval.point(forcing))
    box = _box(rng.normal(size=2 * m) * 0.3, 1e-3)
    x0 = Doubleton.from_box(box)
    new, _ = lohner_step(x0, None, h, 6, p, f)
    H = new.hull()
    pts = _sample_box(rng, box, 6)
    pts[0], pts[1] = box.lo, box.hi
    for x in pts:
        b = rk4_galerkin(_to_complex(x), nu, alpha, forcing, h, substeps=40)
        assert _contains_points(H, np.stack([b.real, b.imag], -1).ravel(), tol=1e-12)
    # the doubleton stays close to the linearized image of the box
    assert float(np.max(H.width())) < 5e-3


# tail validation -------------------------------------------------------------------------

def test_predict_m_examples():
    T = PolyBd(ComplexInterval.zeros(3), 1.0, 4.0)
    g = PolyBd(ComplexInterval.zeros(3), 16.0, 8.0)
    assert abs(predict_m(T, g) - 2.0) < 1e-12
    assert predict_m(T, PolyBd(ComplexInterval.zeros(3), 0.0, 8.0)) == 1.0
    assert predict_m(T, PolyBd(ComplexInterval.zeros(3), 2.0, 4.0)) == math.inf


def test_cover_from():
    T = PolyBd(ComplexInterval.zeros(2), 1.0, 3.0)
    X = PolyBd(ComplexInterval.zeros(2), 2.0, 4.0)
    # need C >= 2 * 3^(3 - 4)
    same, changed = cover_from(T, X, 3)
    assert not changed and same.C == 1.0
    big = PolyBd(ComplexInterval.zeros(2), 9.0, 4.0)
    T2, changed = cover_from(T, big, 3, 0.1)
    assert changed and T2.C >= 3.0 * 1.1 * (1 - 1e-12)
    with pytest.raises(ValidationException):
        cover_from(PolyBd(ComplexInterval.zeros(2), 1.0, 5.0), X, 3)


def test_far_tail_covers_crossing():
    T = PolyBd(ComplexInterval.zeros(4), 1.0, 4.0)
    T0 = PolyBd(ComplexInterval.zeros(4), 1.0, 4.0)
    g = PolyBd(ComplexInterval.zeros(4), 0.5, 5.0)
    assert far_tail_covers(T, T0, g)
    assert not far_tail_covers(T, PolyBd(ComplexInterval.zeros(4), 2.0, 4.0), g)


def test_validate_tail_fixed_point():
    m, M = 2, 5
    p = BurgersParams(Interval.point(1.0), 0.0, m)
    f = ForcingSet.from_modes({1: 0.1}, m)
    T0 = PolyBd(ComplexInterval.concatenate([ComplexInterval.zeros(m), _cbox(np.zeros(M - m), 1e-3)]), 1e-3, 4.0)
    Xc = _cbox([0.1, 0.0], 1e-3)
    N = nk_bound_sharp(combine(Xc, T0), 0.0)
    b = b_from_n(N, f, p.nu)
    g = g_from_b(combine(Xc, T0), b, 0.01, p.nu)
    big = PolyBd(T0.finite.hull(g.finite).inflate(1.0, 1e-6), 10 * max(T0.C, g.C), 4.0)
    state = TailValidationState(big, T0, m)
    assert validate_tail(T0, state, b, g)
    assert state.T == big
    small = TailValidationState(PolyBd.zeros(M), T0, m)
    assert not validate_tail(T0, small, b, g)
    assert small.T.C > 0


def test_validation_state_rejects_bad_config():
    with pytest.raises(ConfigurationError):
        TailValidationState(PolyBd.zeros(3), PolyBd.zeros(3), 2, c_inflate=0.0)


def test_tighten_rejects_disjoint():
    dbl = Doubleton.from_box(_box([0.0, 0.0], 0.1))
    with pytest.raises(StepFailure):
        _tighten_with_g(dbl, _box([1.0, 1.0], 0.1), 0.05)
    kept = _tighten_with_g(dbl, _box([0.0, 0.0], 1.0), 0.05)
    assert kept is dbl


# the full step -----------------------------------------------------------------------------------

def _full_step_case(tail_C=0.0):
    m, nu, alpha = 3, 1.0, 0.5
    p = BurgersParams(Interval.point(nu), alpha, m)
    f = ForcingSet.from_modes({1: 0.3 + 0.1j, 2: -0.2j}, m)
    box = _box(np.array([0.2, -0.05, 0.01, 0.04, 0.0, 0.01]), 1e-3)
    x0 = Doubleton.from_box(box)
    M = 8
    if tail_C:
        k = np.arange(m + 1, M + 1)
        near = _cbox(np.zeros(M - m), tail_C / k ** 4)
        T0 = PolyBd(ComplexInterval.concatenate([ComplexInterval.zeros(m), near]), tail_C, 4.0)
    else:
        T0 = PolyBd.zeros(M)
    return p, f, x0, box, T0


@pytest.mark.parametrize("tail_C", [0.0, 0.01])
def test_inclusion_step_contains_reference_flow(tail_C):
    p, f, x0, box, T0 = _full_step_case(tail_C)
    h = 0.005
    res = inclusion_step(x0, T0, h, p, f, IntegratorConfig(h=h))
    assert res.s_T is not None and res.s_g > res.s_T - 1e-12
    fc = f.center.mid()
    K = 200
    ref = ReferenceBurgers(1.0, 0.5, K, fc, h / 10)
    rng = np.random.default_rng(2)
    pts = _sample_box(rng, box, 6)
    a0 = np.zeros((len(pts), K), dtype=complex)
    a0[:, :3] = pts[:, 0::2] + 1j * pts[:, 1::2]
    if tail_C:
        k = np.arange(4, K + 1, dtype=float)
        a0[:, 3:] = sample_disc(rng, tail_C / k ** 4 * (1 - 1e-9), size=len(pts))
    a = ref.advance(a0, h)
    H = res.finite.hull()
    tail = res.tail
    kk = np.arange(tail.M + 1, K + 1, dtype=float)
    for row in a:
        assert _contains_points(H, np.stack([row[:3].real, row[:3].imag], -1).ravel(), tol=1e-10)
        near = tail.finite[3:]
        seg = row[3:tail.M]
        assert np.all(near.re.lo - 1e-10 <= seg.real) and np.all(seg.real <= near.re.hi + 1e-10)
        assert np.all(near.im.lo - 1e-10 <= seg.imag) and np.all(seg.imag <= near.im.hi + 1e-10)
        assert np.all(np.abs(row[tail.M:]) <= tail.C / kk ** tail.s + 1e-10)
