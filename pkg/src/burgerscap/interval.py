"""Outward-rounded interval arithmetic on numpy arrays.

An :class:`Interval` holds two float64 arrays ``lo`` and ``hi`` of the same
shape, so a single object is a scalar interval, an interval vector or an
interval matrix.  Every operation returns a new object whose endpoints are
stepped one ulp outward after each hardware operation, which encloses the
exact result under round-to-nearest.
"""
from fractions import Fraction

import numpy as np

from . import _kernels
from ._fallback import down, up, imul, isum
from .errors import DomainError, PreconditionError, SingularOrIllConditioned


def _down_n(x, n):
    for _ in range(n):
        x = down(x)
    return x


def _up_n(x, n):
    for _ in range(n):
        x = up(x)
    return x


# libm exp/log are faithful but not correctly rounded; step two ulps.
_TRANSCENDENTAL_ULPS = 2


def _iv(lo, hi):
    obj = object.__new__(Interval)
    obj.lo = lo
    obj.hi = hi
    return obj


class Interval:
    """Closed interval (or array of intervals) with float64 endpoints."""

    __slots__ = ("lo", "hi")
    __array_ufunc__ = None

    def __init__(self, lo, hi=None):
        lo = np.array(lo, dtype=float)
        hi = lo.copy() if hi is None else np.array(hi, dtype=float)
        if lo.shape != hi.shape:
            lo, hi = np.broadcast_arrays(lo, hi)
            lo, hi = lo.copy(), hi.copy()
        if not np.all(lo <= hi):
            raise DomainError("interval with lo > hi or NaN endpoint")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise DomainError("unbounded interval")
        self.lo = lo
        self.hi = hi

    # construction helpers
    @staticmethod
    def point(x):
        x = np.array(x, dtype=float)
        return _iv(x, x.copy())

    @staticmethod
    def zeros(shape):
        return _iv(np.zeros(shape), np.zeros(shape))

    @staticmethod
    def symmetric(r):
        """The interval [-r, r]."""
        r = np.asarray(r, dtype=float)
        return _iv(-r, r.copy())

    @staticmethod
    def from_decimal(text):
        """Smallest float interval containing the exact decimal ``text``."""
        exact = Fraction(text.strip())
        f = float(exact)
        fr = Fraction(f)
        if fr == exact:
            return _iv(np.array(f), np.array(f))
        if fr < exact:
            return _iv(np.array(f), up(np.array(f)))
        return _iv(down(np.array(f)), np.array(f))

    @staticmethod
    def concatenate(items, axis=0):
        items = [as_interval(x) for x in items]
        return _iv(np.concatenate([x.lo for x in items], axis=axis),
                   np.concatenate([x.hi for x in items], axis=axis))

    @staticmethod
    def stack(items, axis=0):
        items = [as_interval(x) for x in items]
        return _iv(np.stack([x.lo for x in items], axis=axis),
                   np.stack([x.hi for x in items], axis=axis))

    @staticmethod
    def where(cond, a, b):
        a = as_interval(a)
        b = as_interval(b)
        return _iv(np.where(cond, a.lo, b.lo), np.where(cond, a.hi, b.hi))

    # array protocol
    @property
    def shape(self):
        return self.lo.shape

    @property
    def ndim(self):
        return self.lo.ndim

    @property
    def size(self):
        return self.lo.size

    @property
    def T(self):
        return _iv(self.lo.T, self.hi.T)

    def __len__(self):
        return len(self.lo)

    def __getitem__(self, idx):
        return _iv(self.lo[idx], self.hi[idx])

    def reshape(self, *shape):
        return _iv(self.lo.reshape(*shape), self.hi.reshape(*shape))

    def copy(self):
        return _iv(self.lo.copy(), self.hi.copy())

    def replace(self, idx, value):
        """Return a copy with ``self[idx]`` replaced by ``value``."""
        value = as_interval(value)
        lo = self.lo.copy()
        hi = self.hi.copy()
        lo[idx] = value.lo
        hi[idx] = value.hi
        return _iv(lo, hi)

    def __repr__(self):
        if self.ndim == 0:
            return f"Interval([{float(self.lo)!r}, {float(self.hi)!r}])"
        return f"Interval(lo={self.lo!r}, hi={self.hi!r})"

    # set operations
    def mid(self):
        return 0.5 * self.lo + 0.5 * self.hi

    def rad(self):
        m = self.mid()
        return up(np.maximum(self.hi - m, m - self.lo))

    def width(self):
        return up(self.hi - self.lo)

    def mag(self):
        return np.maximum(np.abs(self.lo), np.abs(self.hi))

    def mig(self):
        return np.where((self.lo <= 0) & (self.hi >= 0), 0.0,
                        np.minimum(np.abs(self.lo), np.abs(self.hi)))

    def contains(self, x):
        x = as_interval(x)
        return (self.lo <= x.lo) & (x.hi <= self.hi)

    def contains_zero(self):
        return (self.lo <= 0) & (self.hi >= 0)

    def subset(self, other):
        """True iff every entry of ``self`` lies in ``other``."""
        other = as_interval(other)
        return bool(np.all((other.lo <= self.lo) & (self.hi <= other.hi)))

    def interior(self, other):
        """True iff every entry of ``self`` lies in the interior of ``other``."""
        other = as_interval(other)
        return bool(np.all((other.lo < self.lo) & (self.hi < other.hi)))

    def hull(self, other):
        other = as_interval(other)
        return _iv(np.minimum(self.lo, other.lo), np.maximum(self.hi, other.hi))

    def intersect(self, other):
        other = as_interval(other)
        lo = np.maximum(self.lo, other.lo)
        hi = np.minimum(self.hi, other.hi)
        if not np.all(lo <= hi):
            raise DomainError("empty intersection")
        return _iv(lo, hi)

    def inflate(self, factor, absolute=0.0):
        """Scale the radius about the midpoint and add ``absolute``."""
        m = self.mid()
        r = up(up(self.rad() * factor) + absolute)
        return _iv(np.minimum(down(m - r), self.lo), np.maximum(up(m + r), self.hi))

    # arithmetic
    def __neg__(self):
        return _iv(-self.hi, -self.lo)

    def __pos__(self):
        return self

    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return _iv(down(self.lo + other.lo), up(self.hi + other.hi))

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return _iv(down(self.lo - other.hi), up(self.hi - other.lo))

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        lo, hi = imul(self.lo, self.hi, other.lo, other.hi)
        return _iv(lo, hi)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if np.any(other.contains_zero()):
            raise DomainError("division by an interval containing zero")
        q1 = self.lo / other.lo
        q2 = self.lo / other.hi
        q3 = self.hi / other.lo
        q4 = self.hi / other.hi
        lo = np.minimum(np.minimum(q1, q2), np.minimum(q3, q4))
        hi = np.maximum(np.maximum(q1, q2), np.maximum(q3, q4))
        return _iv(down(lo), up(hi))

    def __rtruediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return other / self

    def __pow__(self, n):
        if isinstance(n, (int, np.integer)) and n >= 0:
            if n == 0:
                return _iv(np.ones(self.shape), np.ones(self.shape))
            if n == 2:
                return self.sqr()
            result = self
            for _ in range(n - 1):
                result = result * self
            return result
        return ipow(self, n)

    def __matmul__(self, other):
        other = as_interval(other)
        if other.ndim == 1:
            lo, hi = _kernels.imatmul(self.lo, self.hi, other.lo[:, None], other.hi[:, None])
            return _iv(lo[:, 0], hi[:, 0])
        if self.ndim == 1:
            lo, hi = _kernels.imatmul(self.lo[None, :], self.hi[None, :], other.lo, other.hi)
            return _iv(lo[0], hi[0])
        lo, hi = _kernels.imatmul(self.lo, self.hi, other.lo, other.hi)
        return _iv(lo, hi)

    def __rmatmul__(self, other):
        return as_interval(other) @ self

    def sqr(self):
        a = self.lo * self.lo
        b = self.hi * self.hi
        hi = up(np.maximum(a, b))
        lo = np.where(self.contains_zero(), 0.0, down(np.minimum(a, b)))
        return _iv(lo, hi)

    def abs(self):
        return _iv(self.mig(), self.mag())

    def sqrt(self):
        if np.any(self.hi < 0):
            raise DomainError("sqrt of a negative interval")
        lo = np.maximum(down(np.sqrt(np.maximum(self.lo, 0.0))), 0.0)
        return _iv(lo, up(np.sqrt(self.hi)))

    def exp(self):
        lo = np.maximum(_down_n(np.exp(self.lo), _TRANSCENDENTAL_ULPS), 0.0)
        return _iv(lo, _up_n(np.exp(self.hi), _TRANSCENDENTAL_ULPS))

    def log(self):
        if np.any(self.lo <= 0):
            raise DomainError("log of a non-positive interval")
        return _iv(_down_n(np.log(self.lo), _TRANSCENDENTAL_ULPS),
                   _up_n(np.log(self.hi), _TRANSCENDENTAL_ULPS))

    def sum(self, axis=-1):
        lo, hi = isum(self.lo, self.hi, axis=axis)
        return _iv(lo, hi)

    def max_hi(self):
        return float(np.max(self.hi))


def _coerce(x):
    if isinstance(x, Interval):
        return x
    if isinstance(x, (int, float, np.integer, np.floating, np.ndarray)):
        return Interval.point(x)
    return NotImplemented


def as_interval(x):
    if isinstance(x, Interval):
        return x
    return Interval.point(x)


def ipow(x, s):
    """x**s for x > 0 and real (possibly interval) exponent s."""
    x = as_interval(x)
    if isinstance(s, (int, np.integer)) or (np.ndim(s) == 0 and not isinstance(s, Interval)
                                             and float(s).is_integer()):
        n = int(s)
        if n >= 0:
            return x ** n
        if np.any(x.lo <= 0):
            raise DomainError("negative power of an interval containing zero")
        return 1.0 / (x ** (-n))
    if np.any(x.lo <= 0):
        raise DomainError("real power of a non-positive interval")
    return (as_interval(s) * x.log()).exp()


# backwards-compatible names for the vector/matrix shapes
IntervalVector = Interval
IntervalMatrix = Interval


class ComplexInterval:
    """Rectangular complex interval, stored as (re, im) interval arrays."""

    __slots__ = ("re", "im")
    __array_ufunc__ = None

    def __init__(self, re, im=None):
        re = as_interval(re)
        im = Interval.zeros(re.shape) if im is None else as_interval(im)
        if re.shape != im.shape:
            raise DomainError("real and imaginary parts differ in shape")
        self.re = re
        self.im = im

    @staticmethod
    def point(z):
        z = np.asarray(z, dtype=complex)
        return ComplexInterval(Interval.point(z.real), Interval.point(z.imag))

    @staticmethod
    def zeros(shape):
        return ComplexInterval(Interval.zeros(shape), Interval.zeros(shape))

    @staticmethod
    def disc_box(r):
        """Square [-r, r]^2 containing the closed disc of radius r."""
        sym = Interval.symmetric(r)
        return ComplexInterval(sym, sym.copy())

    @staticmethod
    def concatenate(items, axis=0):
        return ComplexInterval(Interval.concatenate([z.re for z in items], axis),
                               Interval.concatenate([z.im for z in items], axis))

    @property
    def shape(self):
        return self.re.shape

    def __len__(self):
        return len(self.re)

    def __getitem__(self, idx):
        return ComplexInterval(self.re[idx], self.im[idx])

    def replace(self, idx, value):
        return ComplexInterval(self.re.replace(idx, value.re), self.im.replace(idx, value.im))

    def copy(self):
        return ComplexInterval(self.re.copy(), self.im.copy())

    def __repr__(self):
        return f"ComplexInterval(re={self.re!r}, im={self.im!r})"

    def mid(self):
        return self.re.mid() + 1j * self.im.mid()

    def mag(self):
        """Upper bound of the modulus over the box."""
        # overflow to inf is still an upper bound
        with np.errstate(over="ignore"):
            return up(np.sqrt(up(up(self.re.mag() ** 2) + up(self.im.mag() ** 2))))

    def __neg__(self):
        return ComplexInterval(-self.re, -self.im)

    def conj(self):
        return ComplexInterval(self.re, -self.im)

    def times_i(self):
        return ComplexInterval(-self.im, self.re)

    def __add__(self, other):
        other = _ccoerce(other)
        return ComplexInterval(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = _ccoerce(other)
        return ComplexInterval(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return _ccoerce(other) - self

    def __mul__(self, other):
        if isinstance(other, (Interval, int, float, np.integer, np.floating)) or (
                isinstance(other, np.ndarray) and not np.iscomplexobj(other)):
            return ComplexInterval(self.re * other, self.im * other)
        other = _ccoerce(other)
        re = self.re * other.re - self.im * other.im
        im = self.re * other.im + self.im * other.re
        return ComplexInterval(re, im)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (Interval, int, float, np.integer, np.floating, np.ndarray)):
            return ComplexInterval(self.re / other, self.im / other)
        return NotImplemented

    def hull(self, other):
        return ComplexInterval(self.re.hull(other.re), self.im.hull(other.im))

    def intersect(self, other):
        return ComplexInterval(self.re.intersect(other.re), self.im.intersect(other.im))

    def subset(self, other):
        return self.re.subset(other.re) and self.im.subset(other.im)

    def interior(self, other):
        return self.re.interior(other.re) and self.im.interior(other.im)

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        return self.re.contains(z.real) & self.im.contains(z.imag)

    def inflate(self, factor, absolute=0.0):
        return ComplexInterval(self.re.inflate(factor, absolute), self.im.inflate(factor, absolute))

    def to_real(self):
        """Interleave as (re_1, im_1, re_2, im_2, ...)."""
        lo = np.stack([self.re.lo, self.im.lo], axis=-1).reshape(self.shape[:-1] + (-1,))
        hi = np.stack([self.re.hi, self.im.hi], axis=-1).reshape(self.shape[:-1] + (-1,))
        return _iv(lo, hi)

    @staticmethod
    def from_real(x):
        x = as_interval(x)
        return ComplexInterval(x[..., 0::2], x[..., 1::2])


def _ccoerce(x):
    if isinstance(x, ComplexInterval):
        return x
    if isinstance(x, Interval):
        return ComplexInterval(x)
    return ComplexInterval.point(x)


def mid_rest(x):
    """Split ``x`` into a float midpoint and an interval remainder containing 0."""
    x = as_interval(x)
    m = x.mid()
    return m, x - m


def krawczyk_inverse(A):
    """Rigorous enclosure of the inverse of a square (interval) matrix."""
    Ai = as_interval(A)
    if Ai.ndim != 2 or Ai.shape[0] != Ai.shape[1]:
        raise PreconditionError("krawczyk_inverse needs a square matrix")
    n = Ai.shape[0]
    try:
        R = np.linalg.inv(Ai.mid())
    except np.linalg.LinAlgError as exc:
        raise SingularOrIllConditioned("approximate inverse failed") from exc
    if not np.all(np.isfinite(R)):
        raise SingularOrIllConditioned("approximate inverse is not finite")
    Ri = Interval.point(R)
    residual = Interval.point(np.eye(n)) - Ri @ Ai
    delta = float(np.max(isum(residual.mag(), residual.mag(), axis=1)[1]))
    if not delta < 1.0:
        raise SingularOrIllConditioned(f"Krawczyk residual norm {delta:.3g} >= 1")
    norm_r = float(np.max(isum(np.abs(R), np.abs(R), axis=1)[1]))
    rho = Interval.point(norm_r) * delta / (1.0 - Interval.point(delta))
    # the floor keeps X wide enough to hold K when the residual is tiny
    rho = float(up(max(2.0 * rho.hi, 16.0 * np.finfo(float).eps * norm_r)))
    X = Ri + Interval.symmetric(np.full((n, n), rho))
    K = Ri + residual @ X
    if not K.interior(X):
        raise SingularOrIllConditioned("Krawczyk map is not contracting")
    return K.intersect(X)


def interval_matrix_exp_integral(J, C, h, order=20):
    """Upper bound of int_0^h exp(J (h - s)) C ds for a comparison matrix J.

    ``J`` must have non-negative off-diagonal entries and ``C`` must be
    non-negative.  The exponential is evaluated on [0, h / 2^q] by Taylor
    series with a norm remainder and then propagated by interval doubling,
    so large ``|J| h`` does not spoil the bound.
    """
    J = np.asarray(J, dtype=float)
    C = np.asarray(C, dtype=float)
    if J.ndim != 2 or J.shape[0] != J.shape[1] or C.shape != (J.shape[0],):
        raise PreconditionError("shape mismatch in interval_matrix_exp_integral")
    off = J - np.diag(np.diag(J))
    if np.any(off < 0):
        raise PreconditionError("J is not a comparison matrix")
    if np.any(C < 0) or not h > 0:
        raise PreconditionError("C must be non-negative and h positive")
    n = J.shape[0]
    norm = float(np.max(isum(np.abs(J), np.abs(J), axis=1)[1])) if n else 0.0
    q = 0
    while norm * h / 2.0 ** q > 0.5:
        q += 1
    tau = h / 2.0 ** q
    Jt = Interval.point(J) * tau
    rho = float(up(norm * tau))
    eye = Interval.point(np.eye(n))
    term = eye
    E = eye
    Phi = eye
    for k in range(1, order + 1):
        term = (term @ Jt) / float(k)
        E = E + term
        Phi = Phi + term / float(k + 1)
    # geometric remainders of the truncated series
    rem_e = Interval.point(rho) ** (order + 1) / _factorial(order + 1) / (1.0 - Interval.point(rho) / (order + 2))
    rem_p = Interval.point(rho) ** (order + 1) / _factorial(order + 2) / (1.0 - Interval.point(rho) / (order + 3))
    E = E + Interval.symmetric(np.full((n, n), rem_e.hi))
    Phi = Phi + Interval.symmetric(np.full((n, n), rem_p.hi))
    D = (Phi @ Interval.point(C)) * tau
    for _ in range(q):
        D = D + E @ D
        E = E @ E
    return np.maximum(D.hi, 0.0)


def _factorial(n):
    out = Interval.point(1.0)
    for k in range(2, n + 1):
        out = out * float(k)
    return out
