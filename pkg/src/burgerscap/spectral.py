"""Forced viscous Burgers equation in Fourier modes.

Modes are stored for k >= 1 only; a_{-k} = conj(a_k) and a_0 = alpha are
expanded where needed.  The real flattening used for every matrix is
(re a_1, im a_1, re a_2, im a_2, ...).
"""
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError
from .interval import ComplexInterval, Interval, as_interval
from .interval import _iv as _mk


@dataclass(frozen=True)
class BurgersParams:
    nu: Interval
    alpha: float
    m: int
    d: int = 1
    r: int = 1
    p: int = 2

    def __post_init__(self):
        object.__setattr__(self, "nu", as_interval(self.nu))
        if not float(self.nu.lo) > 0:
            raise DomainError("viscosity must be positive")
        if self.m < 1:
            raise DomainError("Galerkin dimension must be >= 1")
        if not self.p > self.r:
            raise DomainError("need p > r")

    def eigenvalues(self, kmax, kmin=1):
        k = np.arange(kmin, kmax + 1, dtype=float)
        return -(self.nu * (k * k))


class ForcingSet:
    """Forcing modes f_k for 1 <= k <= m with a uniform perturbation ball.

    ``center`` is a thin ComplexInterval of length m (it may carry the
    rounding width of decimal input).  ``boxes`` adds [-eps, eps]^2.
    """

    def __init__(self, center, epsilon=0.0):
        if not isinstance(center, ComplexInterval):
            center = ComplexInterval.point(center)
        if epsilon < 0:
            raise DomainError("epsilon must be non-negative")
        self.center = center
        self.epsilon = float(epsilon)

    @classmethod
    def from_modes(cls, modes, m, epsilon=0.0):
        """Build from a mapping k -> complex value or (re, im) pair."""
        re = Interval.zeros(m)
        im = Interval.zeros(m)
        for k, v in modes.items():
            if k == 0:
                raise DomainError("f_0 must vanish")
            if not 0 < k <= m:
                raise DomainError(f"forcing mode {k} outside 1..{m}")
            if isinstance(v, tuple):
                vr, vi = v
            else:
                vr, vi = complex(v).real, complex(v).imag
            re = re.replace(k - 1, as_interval(vr))
            im = im.replace(k - 1, as_interval(vi))
        return cls(ComplexInterval(re, im), epsilon)

    @property
    def m(self):
        return len(self.center)

    @property
    def boxes(self):
        if self.epsilon == 0.0:
            return self.center
        ball = Interval.symmetric(np.full(self.m, self.epsilon))
        return ComplexInterval(self.center.re + ball, self.center.im + ball)

    @property
    def modes(self):
        b = self.boxes
        return {k: b[k - 1] for k in range(1, self.m + 1)}

    def center_only(self):
        return ForcingSet(self.center, 0.0)

    def perturbation(self):
        """The box [-eps, eps]^2 on every forced mode."""
        ball = Interval.symmetric(np.full(self.m, self.epsilon))
        return ComplexInterval(ball, ball.copy())

    def padded(self, n, boxes=True):
        """Forcing for modes 1..n (zero beyond m, truncated below m)."""
        src = self.boxes if boxes else self.center
        if n <= self.m:
            return src[:n]
        return ComplexInterval.concatenate([src, ComplexInterval.zeros(n - self.m)])

    def energy_sup(self):
        """Upper bound of E({f_k}) = sum over k in Z of |f_k|^2 on the ball."""
        mags = Interval.point(self.boxes.mag())
        return float((2.0 * (mags * mags).sum()).hi)


@dataclass(frozen=True)
class ModeVector:
    a: ComplexInterval
    alpha: float = 0.0

    @property
    def n(self):
        return len(self.a)

    def to_real(self):
        return self.a.to_real()

    @staticmethod
    def from_real(x, alpha=0.0):
        return ModeVector(ComplexInterval.from_real(x), alpha)

    @staticmethod
    def point(values, alpha=0.0):
        return ModeVector(ComplexInterval.point(np.asarray(values, dtype=complex)), alpha)


def eigenvalue(k, nu):
    if k == 0:
        raise DomainError("no eigenvalue for the fixed zero mode")
    return -(as_interval(nu) * float(k * k))


def _pack(z):
    return (z.re.lo, z.re.hi, z.im.lo, z.im.hi)


def _a0(alpha):
    a = as_interval(alpha)
    return (a.lo, a.hi)


def cauchy_conv(a, alpha_a, b, alpha_b, kmax):
    """c_k = sum_j a_j b_{k-j}, k = 1..kmax, indices beyond storage are 0."""
    crl, crh, cil, cih = _kernels.cconv(_pack(a), _a0(alpha_a), _pack(b), _a0(alpha_b), kmax)
    return ComplexInterval(_mk(crl, crh), _mk(cil, cih))


def apply_minus_i_half_k(c, kmin=1):
    """Map c_k to -i (k/2) c_k for k = kmin, kmin+1, ..."""
    half_k = np.arange(kmin, kmin + c.shape[-1], dtype=float) / 2.0
    return ComplexInterval(c.im * half_k, -(c.re * half_k))


def nonlinear_galerkin(a, alpha, kmax=None):
    """N_k for k = 1..kmax with the convolution truncated to stored modes."""
    kmax = len(a) if kmax is None else kmax
    c = cauchy_conv(a, alpha, a, alpha, kmax)
    return apply_minus_i_half_k(c)


def convolution(x, k):
    """Galerkin nonlinear term N_k = -i (k/2) sum a_{k1} a_{k-k1} for one k."""
    if k == 0:
        return ComplexInterval.zeros(())
    n = nonlinear_galerkin(x.a, x.alpha, abs(k))[abs(k) - 1]
    return n.conj() if k < 0 else n


def rhs(x, p, f):
    """Galerkin vector field F_k = N_k + lambda_k a_k + f_k for k = 1..m."""
    m = x.n
    lam = p.eigenvalues(m)
    out = nonlinear_galerkin(x.a, x.alpha, m) + x.a * lam + f.padded(m)
    return ModeVector(out, x.alpha)


def _full_modes(a, alpha, lo_index, hi_index):
    """Interval arrays (re, im) for indices lo_index..hi_index of the sequence."""
    n = len(a)
    idx = np.arange(lo_index, hi_index + 1)
    absidx = np.abs(idx)
    inside = (absidx >= 1) & (absidx <= n)
    pos = np.clip(absidx - 1, 0, max(n - 1, 0))
    al = as_interval(alpha)
    if n:
        rlo = np.where(inside, a.re.lo[pos], 0.0)
        rhi = np.where(inside, a.re.hi[pos], 0.0)
        ilo = np.where(inside, np.where(idx > 0, a.im.lo[pos], -a.im.hi[pos]), 0.0)
        ihi = np.where(inside, np.where(idx > 0, a.im.hi[pos], -a.im.lo[pos]), 0.0)
    else:
        rlo = rhi = ilo = ihi = np.zeros(len(idx))
    rlo = np.where(idx == 0, al.lo, rlo)
    rhi = np.where(idx == 0, al.hi, rhi)
    return ComplexInterval(_mk(rlo, rhi), _mk(ilo, ihi)), lo_index


def coupling_entries(a, alpha, rows, cols):
    """Partial derivatives of N_k with respect to (re a_j, im a_j).

    ``a`` holds the sequence a_1..a_L (zero beyond L).  Returns four interval
    matrices of shape (len(rows), len(cols)):
    d re N_k / d re a_j, d re N_k / d im a_j, d im N_k / d re a_j, d im N_k / d im a_j.
    """
    rows = np.asarray(rows)
    cols = np.asarray(cols)
    lo = int(rows.min() - cols.max())
    hi = int(rows.max() + cols.max())
    full, off = _full_modes(a, alpha, lo, hi)
    minus = rows[:, None] - cols[None, :] - off
    plus = rows[:, None] + cols[None, :] - off
    a1 = full[minus]
    a2 = full[plus]
    P = a1 + a2
    Q = a1 - a2
    k = rows[:, None].astype(float) * np.ones((1, len(cols)))
    return (P.im * k, Q.re * k, -(P.re * k), Q.im * k)


def interleave_blocks(rr, ri, ir, ii):
    """Assemble a real matrix from 2x2 block entries."""
    n, m = rr.shape
    lo = np.empty((2 * n, 2 * m))
    hi = np.empty((2 * n, 2 * m))
    for (r, c), e in (((0, 0), rr), ((0, 1), ri), ((1, 0), ir), ((1, 1), ii)):
        lo[r::2, c::2] = e.lo
        hi[r::2, c::2] = e.hi
    return _mk(lo, hi)


def jacobian(x, p, f=None):
    """Interval Jacobian of the m-th Galerkin projection over the set ``x``."""
    m = x.n
    ks = np.arange(1, m + 1)
    rr, ri, ir, ii = coupling_entries(x.a, x.alpha, ks, ks)
    # Galerkin truncation: a_{k+j} with k + j > m does not enter
    J = interleave_blocks(rr, ri, ir, ii)
    lam = p.eigenvalues(m)
    diag = np.arange(2 * m)
    lam2 = Interval(np.repeat(lam.lo, 2), np.repeat(lam.hi, 2))
    return J.replace((diag, diag), J[diag, diag] + lam2)


def energy(a, alpha=0.0):
    """E = sum over k in Z of |a_k|^2 including a_0^2."""
    a = ComplexInterval.point(a) if not isinstance(a, ComplexInterval) else a
    s = (a.re.sqr() + a.im.sqr()).sum()
    return 2.0 * s + as_interval(alpha).sqr()
