import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from burgerscap.errors import IllConditionedSpectrum
from burgerscap.fixedpoint import (BlockDecomposition, block_diagonalize, check_region,
                                   jacobian_float, log_norm_bound, newton_refine, rhs_float)
from burgerscap.interval import ComplexInterval, Interval
from burgerscap.spectral import BurgersParams, ForcingSet
from oracles import ReferenceBurgers

# reference values for the row-3 problem (nu = 2, alpha = 1/2)
REFERENCE_EIGENVALUES = [("-2.00088", "0.489685"), ("-17.9982", "1.50012"), ("-8.00096", "0.999759")]
REFERENCE_L = -0.162445


def _block_norms(region, y):
    d = y - region.center
    return np.array([np.linalg.norm(d[list(b)]) for b in region.blocks.blocks])


def _inside_region(loc, region, a, tol=1e-12):
    """Full state a_1..a_K (complex) against a BlockRegion."""
    m = region.m
    x = np.stack([a[:m].real, a[:m].imag], -1).ravel()
    y = loc.change.A.mid() @ x
    if np.any(_block_norms(region, y) > region.radii * (1 + 1e-9) + tol):
        return False
    T = region.tail
    near = T.finite[m:]
    seg = a[m:T.M]
    ok = (np.all(near.re.lo - tol <= seg.real) and np.all(seg.real <= near.re.hi + tol)
          and np.all(near.im.lo - tol <= seg.imag) and np.all(seg.imag <= near.im.hi + tol))
    k = np.arange(T.M + 1, len(a) + 1, dtype=float)
    return ok and np.all(np.abs(a[T.M:]) <= T.C / k ** T.s + tol)


def _sample_region(rng, loc, region, K, n):
    """States in the region: uniform directions in each block ball, random tail."""
    m = region.m
    Ainv = loc.change.Ainv.mid()
    out = np.zeros((n, K), dtype=complex)
    T = region.tail
    for i in range(n):
        y = region.center.copy()
        for b, r in zip(region.blocks.blocks, region.radii):
            v = rng.normal(size=len(b))
            y[list(b)] += 0.98 * r * rng.uniform() ** 0.5 * v / np.linalg.norm(v)
        x = Ainv @ y
        out[i, :m] = x[0::2] + 1j * x[1::2]
        near = T.finite[m:]
        u = rng.uniform(size=(2, T.M - m))
        out[i, m:T.M] = (near.re.lo + u[0] * (near.re.hi - near.re.lo)) \
            + 1j * (near.im.lo + u[1] * (near.im.hi - near.im.lo))
        k = np.arange(T.M + 1, K + 1, dtype=float)
        out[i, T.M:] = 0.9 * T.C / k ** T.s * np.exp(2j * np.pi * rng.uniform(size=len(k)))
    return out


# Newton ------------------------------------------------------------------------------

def test_newton_zero_forcing():
    p = BurgersParams(Interval.point(1.0), 0.5, 3)
    f = ForcingSet.from_modes({}, 3)
    x = newton_refine(np.full(6, 1e-3), p, f)
    assert np.max(np.abs(x)) < 1e-12


def test_newton_row3(row3_local, row3_problem):
    p, f = row3_problem
    x = row3_local.xbar
    assert abs(x[2] - 0.0985) < 5e-4 and abs(x[3] + 0.0123) < 5e-4
    assert np.max(np.abs(rhs_float(x, 2.0, 0.5, f.center.mid()))) < 1e-12


# block diagonalization ------------------------------------------------------------------

def test_diagonal_matrix():
    change, blocks, D = block_diagonalize(np.diag([-1.0, -4.0, -9.0]))
    assert blocks.dims() == [1, 1, 1]
    assert change.identity_enclosed()
    assert np.allclose(np.abs(D.mid()), np.diag([1.0, 4.0, 9.0]), atol=1e-12)


def test_rotation_block():
    J = np.array([[-1.0, 2.0], [-2.0, -1.0]])
    change, blocks, D = block_diagonalize(J)
    assert blocks.dims() == [2]
    assert change.identity_enclosed()
    assert np.allclose(sorted(change.eigenvalues, key=lambda z: z.imag), [-1 - 2j, -1 + 2j])


def _half_unit(text):
    digits = len(text.split(".")[1])
    return 0.5 * 10.0 ** -digits * (1 + 1e-9)


def test_repeated_eigenvalue_gets_an_orthonormal_block():
    rng = np.random.default_rng(0)
    S = rng.normal(size=(3, 3))
    J = S @ np.diag([-2.0, -2.0, -5.0]) @ np.linalg.inv(S)
    change, blocks, D = block_diagonalize(J)
    # the double eigenvalue shares one 2-dimensional block
    assert sorted(blocks.dims()) == [1, 2]
    assert change.identity_enclosed()
    mask = np.zeros((3, 3), dtype=bool)
    for b in blocks.blocks:
        mask[np.ix_(list(b), list(b))] = True
    assert D.mag()[~mask].max() < 1e-8


def test_spurious_pair_is_resolved():
    # a real double eigenvalue perturbed into a pair with tiny imaginary part
    J = np.array([[-3.0, 1e-14], [-1e-14, -3.0]])
    change, blocks, _ = block_diagonalize(J)
    assert blocks.n == 2 and change.identity_enclosed()


def test_defective_matrix_rejected():
    with pytest.raises(IllConditionedSpectrum):
        block_diagonalize(np.array([[-1.0, 1.0], [0.0, -1.0]]))


def test_block_partition_validation():
    with pytest.raises(ValueError):
        BlockDecomposition(((0, 1, 2),))
    with pytest.raises(ValueError):
        BlockDecomposition(((0,), (2,)))


@settings(max_examples=30)
@given(st.integers(min_value=0, max_value=2 ** 31), st.integers(min_value=1, max_value=6))
def test_random_spectra(seed, m):
    rng = np.random.default_rng(seed)
    J = rng.normal(size=(2 * m, 2 * m)) - 3.0 * np.eye(2 * m)
    change, blocks, D = block_diagonalize(J)
    assert blocks.n == 2 * m and change.identity_enclosed()
    mask = np.zeros((2 * m, 2 * m), dtype=bool)
    for b in blocks.blocks:
        mask[np.ix_(list(b), list(b))] = True
    assert np.max(D.mag()[~mask], initial=0.0) < 1e-8 * max(1.0, np.max(np.abs(J)))


def test_row3_eigenvalues(row3_local):
    eig = row3_local.change.eigenvalues
    upper = sorted([z for z in eig if z.imag > 0], key=lambda z: z.real)
    for re_text, im_text in REFERENCE_EIGENVALUES:
        ref = complex(float(re_text), float(im_text))
        best = min(upper, key=lambda z: abs(z - ref))
        assert abs(best.real - ref.real) <= _half_unit(re_text)
        assert abs(best.imag - ref.imag) <= _half_unit(im_text)


# trapping region and log norm ------------------------------------------------------------------

def test_row3_log_norm(row3_local):
    l = float(row3_local.l_enlarged.hi)
    assert l < 0
    assert abs(l - REFERENCE_L) <= 0.25 * abs(REFERENCE_L)
    assert float(row3_local.l.hi) <= l


def test_row3_regions(row3_local, row3_problem):
    p, f = row3_problem
    loc = row3_local
    W, E = loc.W_T, loc.enlarged
    assert np.all(E.radii >= W.radii)
    assert W.tail.subset(E.tail)
    assert check_region(E, loc.change, loc.xbar, p, f)
    assert float(log_norm_bound(E, loc.blocks, loc.change, p, f).hi) < 0


def test_region_contains_parameter_family(row3_local, row3_problem):
    """The fixed points for nu in [2, 2.1] and forcing in the ball lie in the region."""
    p, f = row3_problem
    loc = row3_local
    rng = np.random.default_rng(3)
    fc = f.center.mid()
    for nu in (2.0, 2.05, 2.1):
        for _ in range(3):
            pert = rng.uniform(-0.03, 0.03, size=(2, 3))
            fv = fc + pert[0] + 1j * pert[1]
            q = BurgersParams(Interval.point(nu), 0.5, 3)
            x = loc.xbar.copy()
            for _ in range(30):
                x = x - np.linalg.solve(jacobian_float(x, q), rhs_float(x, nu, 0.5, fv))
            y = loc.change.A.mid() @ x
            assert np.all(_block_norms(loc.W_T, y) <= loc.W_T.radii)


def test_region_is_forward_invariant(row3_local, row3_problem):
    p, f = row3_problem
    loc = row3_local
    region = loc.enlarged
    rng = np.random.default_rng(4)
    K = 48
    a0 = _sample_region(rng, loc, region, K, 6)
    assert all(_inside_region(loc, region, row) for row in a0)
    fc = f.center.mid()
    for nu in (2.0, 2.1):
        ref = ReferenceBurgers(nu, 0.5, K, fc, 0.002)
        a = a0
        for _ in range(5):
            a = ref.advance(a, 0.1)
            assert all(_inside_region(loc, region, row, tol=1e-10) for row in a)
