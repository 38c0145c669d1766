"""Polynomial bounds on Fourier sequences and estimates of the nonlinear term.

A :class:`PolyBd` describes a set of sequences {a_k}: explicit complex boxes
for 1 <= k <= M and the balls |a_k| <= C / k^s for k > M.  Negative indices
follow by conjugation.  Constants ``C`` are kept as float upper bounds, every
computation producing one rounds upward.
"""
from dataclasses import dataclass, field, replace
from functools import lru_cache
import math

import numpy as np

from ._fallback import up
from .errors import DomainError
from .interval import ComplexInterval, Interval, as_interval, ipow
from .spectral import apply_minus_i_half_k, cauchy_conv


# ---------------------------------------------------------------------------
# rigorous scalar helpers

def _up_pow(k, s):
    """Upper bound of k**s for positive k."""
    return ipow(Interval.point(np.asarray(k, dtype=float)), s).hi


def _down_pow(k, s):
    return ipow(Interval.point(np.asarray(k, dtype=float)), s).lo


def _up_mul(a, b):
    return up(np.asarray(a, dtype=float) * b)


def _up_sum(x):
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return 0.0
    return float(Interval.point(x).sum().hi)


def decay_constant_d(s):
    """D(s) = 2^(s - 1/2) + 2^(s - 1) / sqrt(2s - 1), valid for s > 1/2."""
    s = as_interval(s)
    if not float(s.lo) > 0.5:
        raise DomainError("decay constant needs s > 1/2")
    two = Interval.point(2.0)
    return ipow(two, s - 0.5) + ipow(two, s - 1.0) / (2.0 * s - 1.0).sqrt()


def energy_bound_on_n(ehat, k):
    """Upper bound (1/2)|k| Ehat of |N_k| over the ball E <= Ehat."""
    if k == 0:
        raise DomainError("energy bound on N_k needs k != 0")
    ehat = as_interval(ehat)
    if float(ehat.lo) < 0:
        raise DomainError("energy bound must be non-negative")
    return ehat * (abs(k) / 2.0)


# ---------------------------------------------------------------------------
# polynomial bounds

@dataclass(frozen=True)
class PolyBd:
    """Boxes for modes 1..M plus balls of radius C / k^s for k > M."""

    finite: ComplexInterval
    C: float
    s: float

    def __post_init__(self):
        C = float(self.C)
        if not (C >= 0 and math.isfinite(C)):
            raise DomainError("PolyBd constant must be finite and non-negative")
        if not self.s >= 0:
            raise DomainError("PolyBd exponent must be non-negative")
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "s", float(self.s))

    @property
    def M(self):
        return len(self.finite)

    @staticmethod
    def zeros(M, s=4.0):
        return PolyBd(ComplexInterval.zeros(M), 0.0, s)

    @staticmethod
    def from_ball(M, C, s):
        """Every mode (including k <= M) in the ball C / k^s, as boxes for k <= M."""
        r = _up_mul(C, _up_pow(np.arange(1, M + 1), -s)) if M else np.zeros(0)
        return PolyBd(ComplexInterval.disc_box(r), C, s)

    def far_radius(self, k):
        """Upper bound of C / k^s."""
        k = np.asarray(k, dtype=float)
        if self.C == 0.0:
            return np.zeros(k.shape)
        return _up_mul(self.C, _up_pow(k, -self.s))

    def boxes(self, kmax):
        """Boxes for modes 1..kmax (far-tail balls replaced by squares)."""
        M = self.M
        if kmax <= M:
            return self.finite[:kmax]
        extra = ComplexInterval.disc_box(self.far_radius(np.arange(M + 1, kmax + 1)))
        return ComplexInterval.concatenate([self.finite, extra])

    def mags(self):
        """Upper bounds of |a_k| for k = 1..M."""
        return self.finite.mag()

    def with_M(self, M_new):
        """Same set (or a superset) described with a different split index."""
        if M_new >= self.M:
            return PolyBd(self.boxes(M_new), self.C, self.s)
        # dropping explicit boxes: enlarge C so the discarded modes stay inside
        k = np.arange(M_new + 1, self.M + 1)
        need = _up_mul(self.finite[M_new:].mag(), _up_pow(k, self.s))
        return PolyBd(self.finite[:M_new], max(self.C, float(np.max(need))), self.s)

    def rescaled(self, s_new):
        """Describe the far tail with a smaller exponent s_new <= s."""
        if s_new > self.s:
            raise DomainError("cannot raise the exponent of a far tail")
        if s_new == self.s or self.C == 0.0:
            return replace(self, s=s_new)
        C = float(_up_mul(self.C, _up_pow(self.M + 1, s_new - self.s)))
        # a few ulps of headroom so that subset() can certify the inclusion
        return PolyBd(self.finite, float(up(C * (1.0 + 8 * np.finfo(float).eps))), s_new)

    def uniform_constant(self):
        """Smallest C' (rounded up) with |a_k| <= C' / k^s for every k >= 1."""
        if self.M == 0:
            return self.C
        k = np.arange(1, self.M + 1)
        need = _up_mul(self.mags(), _up_pow(k, self.s))
        return max(self.C, float(np.max(need)))

    def far_subset(self, other, kstart):
        """True if C/k^s <= C'/k^s' for all k >= kstart."""
        if self.C == 0.0:
            return True
        if self.s < other.s:
            return False
        if self.s == other.s:
            return self.C <= other.C
        # C' k^(s - s') is non-decreasing in k, so kstart is the binding index
        rhs = Interval.point(other.C) * ipow(Interval.point(float(kstart)), self.s - other.s)
        return self.C <= float(rhs.lo)

    def subset(self, other):
        """Rigorous inclusion test self ⊆ other."""
        K = max(self.M, other.M)
        a = self.boxes(K)
        b = other.boxes(K)
        if self.M >= other.M:
            ok = a.subset(b) if K else True
        else:
            # modes M_self < k <= M_other: ball of self must fit in box of other
            ok = self.finite.subset(other.finite[:self.M]) if self.M else True
            ok = ok and a[self.M:].subset(b[self.M:])
        return bool(ok) and self.far_subset(other, K + 1)

    def hull(self, other):
        """A PolyBd containing both sets, with the smaller exponent."""
        K = max(self.M, other.M)
        s = min(self.s, other.s)
        a = self.rescaled(s) if self.s != s else self
        b = other.rescaled(s) if other.s != s else other
        a = a.with_M(K)
        b = b.with_M(K)
        return PolyBd(a.finite.hull(b.finite), max(a.C, b.C), s)

    def inflated(self, absolute):
        return PolyBd(self.finite.inflate(1.0, absolute), self.C, self.s)


@dataclass(frozen=True)
class SelfConsistentBounds:
    """A PolyBd split at the Galerkin dimension m.

    ``energy`` optionally records an energy-ball constraint E(a) <= energy,
    which is how the analytic trapping region is described.
    """

    body: PolyBd
    m: int
    energy: float = None
    alpha: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not 0 <= self.m <= self.body.M:
            raise DomainError("Galerkin split must satisfy 0 <= m <= M")

    @property
    def finite(self):
        return self.body.finite[:self.m]

    @property
    def near_tail(self):
        return self.body.finite[self.m:]

    @property
    def M(self):
        return self.body.M

    @property
    def C(self):
        return self.body.C

    @property
    def s(self):
        return self.body.s

    def summable(self):
        return self.body.s > 0.5

    def tail(self):
        """Tail as a PolyBd whose modes 1..m are exact zeros."""
        fin = ComplexInterval.concatenate([ComplexInterval.zeros(self.m), self.near_tail])
        return PolyBd(fin, self.body.C, self.body.s)


# ---------------------------------------------------------------------------
# convolution estimates

def _tail_sum_up(M, s, L=None):
    """Upper bound of sum_{j > M} j^-s (s > 1): explicit window plus integral."""
    if not s > 1:
        raise DomainError("tail sum needs s > 1")
    L = max(4 * M, 512) if L is None else L
    j = np.arange(M + 1, L + 1)
    head = _up_sum(_up_pow(j, -s))
    rem = float((ipow(Interval.point(float(L)), 1.0 - s) / (as_interval(s) - 1.0)).hi)
    return float(up(head + rem))


@lru_cache(maxsize=128)
def _tail_tail_sums(Ma, sa, Mb, sb, K):
    """Upper bounds of S(k) = sum_{|j|>Ma, |k-j|>Mb} |j|^-sa |k-j|^-sb for k = 1..K."""
    sigma = sa + sb
    if not sigma > 1:
        raise DomainError("tail-tail sum needs sa + sb > 1")
    L = max(4 * K, 4 * max(Ma, Mb), 1024)
    j = np.arange(-L, L + K + 1)
    k = np.arange(1, K + 1)
    partner = k[:, None] - j[None, :]
    keep = (np.abs(j)[None, :] > Ma) & (np.abs(partner) > Mb)
    wa = _up_pow(np.maximum(np.abs(j), 1), -sa)
    ab = np.maximum(np.abs(partner), 1)
    uniq = np.arange(1, int(ab.max()) + 1)
    wb_table = _up_pow(uniq, -sb)
    wb = wb_table[ab - 1]
    terms = np.where(keep, up(wa[None, :] * wb), 0.0)
    head = Interval.point(terms).sum(axis=1).hi
    # |j| > L on the left, j - k > L on the right: both bounded by sum_{i>L} i^-sigma
    rem = (2.0 * ipow(Interval.point(float(L)), 1.0 - sigma) / (as_interval(sigma) - 1.0)).hi
    return up(head + float(rem))


def _rho(K, M, s):
    """rho_j = sup_{k > K} (k / |k - j|)^s for j = -M..M (1 when j <= 0)."""
    j = np.arange(-M, M + 1)
    out = np.ones(len(j))
    pos = j > 0
    if np.any(pos):
        ratio = Interval.point(float(K + 1)) / Interval.point((K + 1 - j[pos]).astype(float))
        out[pos] = ipow(ratio, s).hi
    return out


def _full_mags(mags, alpha_mag):
    """|a_j| upper bounds for j = -M..M."""
    return np.concatenate([mags[::-1], [alpha_mag], mags])


def convolution_bound(a, alpha_a, b, alpha_b, m_out, kmax=None):
    """PolyBd enclosing c_k = sum_j a_j b_{k-j} over all a in ``a``, b in ``b``.

    The sum splits into finite x finite (interval arithmetic), finite x tail
    and tail x finite (explicit weighted sums of box magnitudes), and tail x
    tail (explicit window plus an integral remainder).  Modes 1..m_out are
    returned as boxes.  For k > m_out the bound C_c / k^s_c with
    s_c = min(s_a, s_b) is the maximum of the explicit enclosures up to
    ``kmax`` and a uniform estimate beyond.
    """
    Ma, Mb = a.M, b.M
    sa, sb = a.s, b.s
    K = max(Ma + Mb, m_out, 1) if kmax is None else max(kmax, Ma + Mb, m_out, 1)
    amag = _full_mags(a.mags() if Ma else np.zeros(0), float(as_interval(alpha_a).mag()))
    bmag = _full_mags(b.mags() if Mb else np.zeros(0), float(as_interval(alpha_b).mag()))
    ks = np.arange(1, K + 1)

    ff = cauchy_conv(a.finite, alpha_a, b.finite, alpha_b, K)

    # finite (a) x tail (b): sum_{|j|<=Ma, |k-j|>Mb} |a_j| Cb |k-j|^-sb
    rad = np.zeros(K)
    ja = np.arange(-Ma, Ma + 1)
    if b.C > 0:
        partner = ks[:, None] - ja[None, :]
        w = np.where(np.abs(partner) > Mb, _up_pow(np.maximum(np.abs(partner), 1), -sb), 0.0)
        rad = up(rad + _up_mul(b.C, Interval.point(up(amag[None, :] * w)).sum(axis=1).hi))
    jb = np.arange(-Mb, Mb + 1)
    if a.C > 0:
        # tail (a) x finite (b): index i = k - j in the finite range of b
        partner = ks[:, None] - jb[None, :]
        w = np.where(np.abs(partner) > Ma, _up_pow(np.maximum(np.abs(partner), 1), -sa), 0.0)
        rad = up(rad + _up_mul(a.C, Interval.point(up(bmag[None, :] * w)).sum(axis=1).hi))
    if a.C > 0 and b.C > 0:
        S = _tail_tail_sums(Ma, sa, Mb, sb, K)
        rad = up(rad + _up_mul(up(a.C * b.C), S))

    explicit = ff + ComplexInterval.disc_box(rad)
    s_c = min(sa, sb)

    # uniform estimate for k > K (finite x finite vanishes there since K >= Ma + Mb)
    C_far = 0.0
    if b.C > 0:
        C_far += float(_up_mul(b.C, _up_sum(up(amag * _rho(K, Ma, sb)))))
    if a.C > 0:
        C_far = float(up(C_far + _up_mul(a.C, _up_sum(up(bmag * _rho(K, Mb, sa))))))
    if a.C > 0 and b.C > 0:
        # split by sign and size of j; see tail_tail_far_factor
        Sa = _tail_sum_up(Ma, sa)
        Sb = _tail_sum_up(Mb, sb)
        two = Interval.point(2.0)
        fa = (1.0 + ipow(two, sb)).hi
        fb = (1.0 + ipow(two, sa)).hi
        tt = up(up(Sa * fa) + up(Sb * fb))
        C_far = float(up(C_far + _up_mul(up(a.C * b.C), tt)))
    # C_far bounds k^s_b and k^s_a weighted sums separately; k^-s <= k^-s_c covers both
    if K > m_out:
        kk = np.arange(m_out + 1, K + 1)
        need = _up_mul(explicit[m_out:].mag(), _up_pow(kk, s_c))
        C_c = max(C_far, float(np.max(need)))
    else:
        C_c = C_far
    return PolyBd(explicit[:m_out], C_c, s_c)


def nk_bound_sharp(x, alpha=0.0, kmax=None):
    """PolyBd for N_k = -i (k/2) sum_j a_j a_{k-j} over every sequence in ``x``.

    The far tail has exponent s - 1 and modes 1..M are boxes.
    """
    if not x.s > 1:
        raise DomainError("sharp nonlinear bound needs s > 1")
    K = 2 * x.M if kmax is None else kmax
    c = convolution_bound(x, alpha, x, alpha, x.M, K)
    n_fin = apply_minus_i_half_k(c.finite) if x.M else c.finite
    return PolyBd(n_fin, float(up(c.C / 2.0)), c.s - 1.0)


def nk_explicit(x, alpha, kmax):
    """Boxes enclosing N_k for k = 1..kmax (used by tests and tail checks)."""
    c = convolution_bound(x, alpha, x, alpha, kmax, max(kmax, 2 * x.M))
    return apply_minus_i_half_k(c.finite)


def cross_nonlinear(x, t, alpha, m):
    """Enclose -i(k/2) [2 sum x_j t_{k-j} + sum t_j t_{k-j}] for k = 1..m.

    ``x`` carries the finite modes (C = 0) and ``t`` the tail (zero boxes on
    1..m).  This is the difference P_m F(x + t) - P_m F(x).
    """
    xt = convolution_bound(x, alpha, t, 0.0, m)
    tt = convolution_bound(t, 0.0, t, 0.0, m)
    c = xt.finite * 2.0 + tt.finite
    return apply_minus_i_half_k(c)


def nk_bound_decay(T, E, alpha=0.0):
    """Energy-type bound |N_k| <= sqrt(E) C D(s) / k^(s - 3/2)."""
    if not T.s > 0.5:
        raise DomainError("decay bound needs s > 1/2")
    E = as_interval(E)
    chat = T.uniform_constant()
    D = decay_constant_d(T.s)
    CN = float((E.sqrt() * chat * D).hi)
    sN = T.s - 1.5
    M = T.M
    if M == 0:
        return PolyBd(ComplexInterval.zeros(0), CN, sN)
    k = np.arange(1, M + 1)
    r = _up_mul(CN, _up_pow(k, -sN))
    fin = ComplexInterval.disc_box(r)
    if T.s > 1:
        sharp = nk_bound_sharp(T, alpha)
        fin = fin.intersect(sharp.finite) if _overlaps(fin, sharp.finite) else sharp.finite
    return PolyBd(fin, CN, sN)


def _overlaps(a, b):
    return bool(np.all(a.re.lo <= b.re.hi) and np.all(b.re.lo <= a.re.hi)
                and np.all(a.im.lo <= b.im.hi) and np.all(b.im.lo <= a.im.hi))


# ---------------------------------------------------------------------------
# linear evolution bounds

def b_from_n(N, f, nu):
    """b_k = (N_k + f_k) / (nu k^2) with far tail C_N / nu_lo, exponent s_N + 2."""
    nu = as_interval(nu)
    M = N.M
    if f.m > M:
        raise DomainError("forcing modes must lie inside the explicit range")
    k2 = np.arange(1, M + 1, dtype=float) ** 2
    fin = (N.finite + f.padded(M)) / (nu * k2)
    C = float((Interval.point(N.C) / nu.lo).hi)
    return PolyBd(fin, C, N.s + 2.0)


def kmax_of_decay(nu_lo, h, rho, M):
    """The k > M maximizing exp(-nu k^2 h) k^rho, with an upper bound of the maximum."""
    if rho <= 0:
        k = M + 1
    else:
        peak = math.sqrt(rho / (2.0 * nu_lo * h))
        k = M + 1
        hi = max(M + 1, int(math.ceil(peak)) + 2)
        cands = np.arange(M + 1, hi + 1)
        vals = _decay_values(nu_lo, h, rho, cands)
        k = int(cands[int(np.argmax(vals))])
    value = float(np.max(_decay_values(nu_lo, h, rho, np.array([k]))))
    if rho > 0:
        # the objective is unimodal; bound the max over the neighbours too
        around = np.arange(max(M + 1, k - 2), k + 3)
        value = float(np.max(_decay_values(nu_lo, h, rho, around)))
    return k, value


def _decay_values(nu_lo, h, rho, k):
    k = np.asarray(k, dtype=float)
    e = (Interval.point(-nu_lo) * (k * k) * h).exp()
    return (e * ipow(Interval.point(k), rho)).hi


def g_from_b(T0, b, h, nu):
    """Endpoint-wise bounds of (T0 - b) e^{lambda h} + b and their far tail."""
    if T0.M != b.M:
        raise DomainError("T0 and b must share M")
    if not h > 0:
        raise DomainError("time step must be positive")
    nu = as_interval(nu)
    M = T0.M
    k2 = np.arange(1, M + 1, dtype=float) ** 2
    E = (-(nu * k2) * float(h)).exp()
    one_m = 1.0 - E

    def side(t0, bb):
        lo = (Interval.point(t0.lo) * E + Interval.point(bb.lo) * one_m).lo
        hi = (Interval.point(t0.hi) * E + Interval.point(bb.hi) * one_m).hi
        return Interval(np.minimum(lo, hi), np.maximum(lo, hi))

    fin = ComplexInterval(side(T0.finite.re, b.finite.re), side(T0.finite.im, b.finite.im))
    rho = b.s - T0.s
    if T0.C > 0:
        _, peak = kmax_of_decay(float(nu.lo), float(h), rho, M)
        C = float(up(_up_mul(T0.C, peak) + b.C))
    else:
        C = b.C
    return PolyBd(fin, C, b.s)


# ---------------------------------------------------------------------------
# inward-pointing condition

def far_isolation_holds(C_N, C, M, nu_lo):
    """Far balls |a_k| = C/k^s with |N_k| <= C_N/k^(s-1) shrink iff C_N < nu C (M+1)."""
    rhs = (Interval.point(nu_lo) * C * float(M + 1)).lo
    return bool(C_N < float(rhs))


def check_c4a(W, p, f):
    """Inward-pointing vector field on the tail faces of ``W``.

    Energy-type regions (analytic trapping regions) are checked through the
    energy inequality and the isolation of far modes.  Otherwise every face
    of every box m < k <= M is checked with N evaluated over the whole set,
    and the far balls use the sharp nonlinear bound.
    """
    nu = p.nu
    alpha = W.alpha if W.alpha is not None else p.alpha
    if W.energy is not None:
        E0 = Interval.point(f.energy_sup()) / (nu.lo * nu.lo)
        Et = Interval.point(W.energy)
        if not float(Et.lo) > float(E0.hi):
            return False
        if f.m > W.M:
            return False
        D = decay_constant_d(W.s)
        lhs = (nu.lo * ipow(Interval.point(float(W.M + 1)), 0.5))
        rhs = D * (Et + as_interval(alpha).sqr()).sqrt()
        if not float(lhs.lo) > float(rhs.hi):
            return False
        chk = Et.sqrt() * ipow(Interval.point(float(W.M)), W.s)
        return bool(W.C > float(chk.hi))
    body = W.body
    if not body.s > 1:
        return False
    N = nk_bound_sharp(body, alpha)
    if W.M > W.m:
        ks = np.arange(W.m + 1, W.M + 1, dtype=float)
        lam = -(nu * (ks * ks))
        fk = f.padded(W.M)[W.m:]
        Nt = N.finite[W.m:]
        box = W.near_tail
        for comp in ("re", "im"):
            u = getattr(box, comp)
            n = getattr(Nt, comp) + getattr(fk, comp)
            low_face = lam * Interval.point(u.lo) + n
            high_face = lam * Interval.point(u.hi) + n
            if not (np.all(low_face.lo > 0) and np.all(high_face.hi < 0)):
                return False
    if body.C == 0.0:
        return N.C == 0.0
    return far_isolation_holds(N.C, body.C, W.M, float(nu.lo))
