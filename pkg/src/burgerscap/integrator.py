"""One rigorous time step of the full infinite system.

The finite modes 1..m are moved by a C^0 Lohner step on a doubleton set
x + B r + C r0 under a constant perturbation that captures the influence of
the tail.  The tail is enclosed over [0, h] by iterating the polynomial
bound formulas until the candidate validates, and T(h) is read off from the
linear-evolution bound g.

All finite-part vectors use the real flattening (re a_1, im a_1, ...).
"""
from dataclasses import dataclass, field, replace
import math

import numpy as np

from .bounds import (PolyBd, b_from_n, cross_nonlinear, g_from_b,
                     nk_bound_sharp)
from .errors import ConfigurationError, StepFailure, ValidationException
from .interval import (ComplexInterval, Interval, interval_matrix_exp_integral,
                       ipow, krawczyk_inverse)
from .spectral import (ModeVector, apply_minus_i_half_k, cauchy_conv, jacobian,
                       nonlinear_galerkin)


@dataclass
class IntegratorConfig:
    order: int = 6
    h: float = 0.005
    s: float = 4.0
    c_inflate: float = 0.05
    c_radius: int = 2
    max_validation: int = 50
    rough_retries: int = 20
    m_cap_factor: int = 64
    adapt_M: bool = True
    # fall back to a box when the linear-solution bound narrows the doubleton hull this much
    box_switch: float = 0.05


@dataclass
class Doubleton:
    """The set x + B r + C r0 in real coordinates."""

    x: np.ndarray
    B: np.ndarray
    r: Interval
    C: np.ndarray
    r0: Interval

    @staticmethod
    def from_box(box):
        mid = box.mid()
        n = len(mid)
        eye = np.eye(n)
        return Doubleton(mid, eye.copy(), Interval.zeros(n), eye, box - mid)

    @property
    def n(self):
        return len(self.x)

    def hull(self):
        return (Interval.point(self.x) + Interval.point(self.B) @ self.r) \
            + Interval.point(self.C) @ self.r0

    def transformed(self, A):
        """Enclosure of A (x + B r + C r0) evaluated factor by factor."""
        A = A if isinstance(A, Interval) else Interval.point(A)
        return (A @ Interval.point(self.x) + (A @ Interval.point(self.B)) @ self.r) \
            + (A @ Interval.point(self.C)) @ self.r0


@dataclass
class TailValidationState:
    T: PolyBd
    T0: PolyBd
    m: int
    c_inflate: float = 0.05
    c_radius: int = 2
    validated: bool = False
    inflates_re: np.ndarray = None
    inflates_im: np.ndarray = None
    prev_L: float = None
    M_locked: bool = False
    M_cap: int = None
    desired: tuple = None

    def __post_init__(self):
        if not self.c_inflate > 0 or self.c_radius < 0:
            raise ConfigurationError("need c_inflate > 0 and c_radius >= 0")
        if self.M_cap is None:
            self.M_cap = 64 * self.m
        if self.desired is None:
            self.desired = (2 * self.m + 1, 8 * self.m)


@dataclass
class StepResult:
    finite: Doubleton
    tail: PolyBd
    enclosure_w2: Interval
    enclosure_t: PolyBd
    delta: Interval
    Delta: Interval
    s_T: float = None
    s_g: float = None
    validation_rounds: int = 0


# ---------------------------------------------------------------------------
# helpers

def _cplx(x):
    return x if isinstance(x, ComplexInterval) else ComplexInterval.from_real(x)


def combine(finite, tail):
    """PolyBd with ``finite`` on modes 1..m and the tail beyond."""
    m = len(finite)
    return PolyBd(ComplexInterval.concatenate([finite, tail.finite[m:]]), tail.C, tail.s)


def tail_only(T, m):
    """Zero the modes 1..m of a PolyBd so that it describes only a tail."""
    return PolyBd(ComplexInterval.concatenate([ComplexInterval.zeros(m), T.finite[m:]]), T.C, T.s)


def _overlap(a, b):
    return bool(np.all(a.re.lo <= b.re.hi) and np.all(b.re.lo <= a.re.hi)
                and np.all(a.im.lo <= b.im.hi) and np.all(b.im.lo <= a.im.hi))


# ---------------------------------------------------------------------------
# rough enclosure

def _field_parts(W, tail, alpha, forcing):
    """Enclosure of N_k + forcing_k for k = 1..m over W (plus tail if given)."""
    m = len(W)
    if tail is None or (tail.C == 0.0 and tail.M == m):
        N = nonlinear_galerkin(W, alpha, m)
    else:
        N = nk_bound_sharp(combine(W, tail), alpha).finite[:m]
    return N + forcing


def _linear_solution_hull(x0, b, E):
    """hull over t in [0, h] of x0 e^{lambda t} + b (1 - e^{lambda t}), endpoint-wise.

    ``E`` encloses e^{lambda h}; each endpoint moves monotonically from x0 towards b.
    """
    one_m = 1.0 - E

    def side(x, bb):
        lo = (Interval.point(x.lo) * E + Interval.point(bb.lo) * one_m).lo
        hi = (Interval.point(x.hi) * E + Interval.point(bb.hi) * one_m).hi
        return Interval(np.minimum(x.lo, np.minimum(lo, hi)), np.maximum(x.hi, np.maximum(lo, hi)))

    return ComplexInterval(side(x0.re, b.re), side(x0.im, b.im))


def rough_enclosure(x0, tail, h, p, forcing, alpha=None, retries=20):
    """Box containing every solution of x' in P_m F(x + tail) + forcing on [0, h].

    ``x0`` holds the complex modes 1..m.  ``tail`` may be None for the
    Galerkin system alone.  With the nonlinear part bounded by n over the
    candidate W, each mode solves a scalar linear equation, so it stays in
    the hull of x0 and x0 e^{lambda h} + b (1 - e^{lambda h}), b = n / (-lambda).
    That bound is intersected with the Picard box.
    """
    x0 = _cplx(x0)
    alpha = p.alpha if alpha is None else alpha
    m = len(x0)
    lam = p.eigenvalues(m)
    neg_lam = -lam
    E = (lam * float(h)).exp()
    hh = Interval(0.0, float(h))
    n0 = _field_parts(x0, tail, alpha, forcing)
    W = _linear_solution_hull(x0, n0 / neg_lam, E).inflate(1.5, 1e-12)
    for _ in range(retries):
        n = _field_parts(W, tail, alpha, forcing)
        if not np.all(np.isfinite(n.mag())):
            break
        picard = x0 + (W * lam + n) * hh
        iso = _linear_solution_hull(x0, n / neg_lam, E)
        new = picard.intersect(iso) if _overlap(picard, iso) else iso
        if new.interior(W):
            return new
        W = W.hull(new).inflate(1.5, 1e-12)
    raise StepFailure("no rough enclosure found")


# ---------------------------------------------------------------------------
# Taylor and variational coefficients

def taylor_coefficients(a, alpha, lam, forcing, order):
    """Normalised Taylor coefficients a^[0..order] of x' = P_m F(x) with constant forcing."""
    m = len(a)
    coeffs = [a]
    for n in range(order):
        acc = None
        for q in range((n // 2) + 1):
            r = n - q
            c = cauchy_conv(coeffs[q], alpha if q == 0 else 0.0,
                            coeffs[r], alpha if r == 0 else 0.0, m)
            if q != r:
                c = c * 2.0
            acc = c if acc is None else acc + c
        nxt = coeffs[n] * lam + apply_minus_i_half_k(acc)
        if n == 0:
            nxt = nxt + forcing
        coeffs.append(nxt / float(n + 1))
    return coeffs


def variational_coefficients(coeffs, alpha, lam, order):
    """Coefficients of d a^[n] / d x as complex batches of shape (2m, m)."""
    m = len(coeffs[0])
    V0re = np.zeros((2 * m, m))
    V0im = np.zeros((2 * m, m))
    idx = np.arange(m)
    V0re[2 * idx, idx] = 1.0
    V0im[2 * idx + 1, idx] = 1.0
    V = [ComplexInterval(Interval.point(V0re), Interval.point(V0im))]
    for n in range(order):
        acc = None
        for q in range(n + 1):
            c = cauchy_conv(coeffs[q], alpha if q == 0 else 0.0, V[n - q], 0.0, m)
            acc = c if acc is None else acc + c
        nxt = V[n] * lam + apply_minus_i_half_k(acc * 2.0)
        V.append(nxt / float(n + 1))
    return V


def _batch_to_matrix(V):
    """Complex batch (2m columns, m modes) to the real 2m x 2m matrix."""
    return V.to_real().T


def _sum_powers(terms, h):
    out = terms[-1]
    for t in reversed(terms[:-1]):
        out = out * float(h) + t
    return out


def lohner_step(x0, yc, h, order, p, f, Delta=None, W1=None):
    """C^0 Lohner step for x' = P_m F(x) + f_center + yc.

    Returns the new doubleton and the enclosure W1 of the solutions over
    [0, h].  ``Delta`` is an extra error box added before rearrangement.
    """
    if order < 1 or not h > 0:
        raise StepFailure("need order >= 1 and h > 0")
    m = x0.n // 2
    alpha = p.alpha
    lam = p.eigenvalues(m)
    forcing = f.padded(m, boxes=False)
    if yc is not None:
        forcing = forcing + ComplexInterval.point(np.asarray(yc, dtype=complex))
    X = x0.hull()
    Xc = ComplexInterval.from_real(X)
    if W1 is None:
        W1 = rough_enclosure(Xc, None, h, p, forcing, alpha)
    # Taylor polynomial at the centre and its derivative over the whole set
    centre = ComplexInterval.from_real(Interval.point(x0.x))
    c_pt = taylor_coefficients(centre, alpha, lam, forcing, order)
    phi = _sum_powers(c_pt, h).to_real()
    c_set = taylor_coefficients(Xc, alpha, lam, forcing, order)
    V = variational_coefficients(c_set, alpha, lam, order)
    A = _batch_to_matrix(_sum_powers(V, h))
    c_rem = taylor_coefficients(W1, alpha, lam, forcing, order + 1)
    rem = (c_rem[-1] * float(h) ** (order + 1)).to_real()
    y = phi + rem
    if Delta is not None:
        y = y + Delta
    x_new = y.mid()
    z = y - x_new
    AB = A @ Interval.point(x0.B)
    AC = A @ Interval.point(x0.C)
    C_new = AC.mid()
    Q, _ = np.linalg.qr(AB.mid())
    Qinv = krawczyk_inverse(Q)
    r_new = (Qinv @ AB) @ x0.r + Qinv @ ((AC - C_new) @ x0.r0) + Qinv @ z
    return Doubleton(x_new, Q, r_new, C_new, x0.r0), W1.to_real()


# ---------------------------------------------------------------------------
# tail validation

def _ball(P, k):
    return float(P.far_radius(np.array([k]))[0])


def _scaled_up(C, k, ds):
    """Upper bound of C k^ds (exact when ds == 0)."""
    if ds == 0:
        return float(C)
    return float((Interval.point(C) * ipow(Interval.point(float(k)), ds)).hi)


def cover_from(T, X, K, c_inflate=0.0):
    """Enlarge C(T) so that T_k contains X_k for every k >= K (needs s(T) <= s(X))."""
    if X.C == 0.0:
        return T, False
    if T.s > X.s:
        raise ValidationException("tail exponent exceeds the covered bound")
    need = _scaled_up(X.C, K, T.s - X.s)
    if T.C >= need:
        return T, False
    return replace(T, C=need * (1.0 + c_inflate)), True


def _below_until(X, Y, K):
    """Largest L >= K-1 with X_k ⊆ Y_k (as balls) for K <= k <= L (inf if unbounded)."""
    if X.C == 0.0:
        return math.inf
    if Y.C == 0.0:
        return K - 1
    ds = Y.s - X.s

    def holds(k):
        return _scaled_up(X.C, k, ds) <= Y.C

    if not holds(K):
        return K - 1
    if ds <= 0:
        return math.inf
    est = int(math.floor((Y.C / X.C) ** (1.0 / ds)))
    est = max(est, K)
    while est > K and not holds(est):
        est -= 1
    return est


def far_tail_covers(T, T0, g):
    """Rigorous check that T_k ⊇ T0_k ∪ g_k for every k > M."""
    K = T.M + 1
    if T.C == 0.0:
        return T0.C == 0.0 and g.C == 0.0

    def covers(X, start):
        if X.C == 0.0 or start == math.inf:
            return True
        if T.s > X.s:
            return False
        return T.C >= _scaled_up(X.C, start, T.s - X.s)

    if covers(g, K) and covers(T0, K):
        return True
    # T0 inside g up to L, then T0 covered from L + 1
    L = _below_until(T0, g, K)
    if covers(g, K) and covers(T0, L + 1):
        return True
    L = _below_until(g, T0, K)
    return covers(T0, K) and covers(g, L + 1)


def predict_m(T, g):
    """Index beyond which g_k ⊆ T_k: (C(g) / C(T))^(1 / (s(g) - s(T)))."""
    if g.C == 0.0 or T.C == 0.0:
        return 1.0
    ds = g.s - T.s
    if ds == 0:
        return math.inf if g.C > T.C else 1.0
    return (g.C / T.C) ** (1.0 / ds)


def _truncate2(x):
    if not math.isfinite(x) or x == 0:
        return x
    e = math.floor(math.log10(abs(x)))
    return math.floor(x / 10 ** (e - 1)) * 10 ** (e - 1)


def correct_m(state, L):
    """Raise M towards the crossing index L; returns the new M or None."""
    prev = state.prev_L
    state.prev_L = L
    if state.M_locked or not math.isfinite(L):
        return None
    M = state.T.M
    target = None
    if prev is not None and L > prev:
        lo, hi = state.desired
        if L <= hi:
            target = int(math.ceil(L))
    if prev is not None and _truncate2(L) == _truncate2(prev):
        state.M_locked = True
        target = int(math.ceil(L))
    if target is None or target <= M:
        return None
    if target > state.M_cap:
        raise ConfigurationError(f"tail dimension {target} exceeds the cap {state.M_cap}")
    return target


def find_s(state, g, p):
    """Lower s(T) while the predicted M is out of range (never to s <= p + d)."""
    lo, hi = state.desired
    T = state.T
    floor = p.p + p.d
    changed = False
    while True:
        current = predict_m(T, g)
        if lo <= current <= hi or not T.s - 1 > floor:
            break
        potential = predict_m(T.rescaled(T.s - 1), g)
        if not potential > 2 * state.m:
            break
        T = T.rescaled(T.s - 1)
        changed = True
    state.T = T
    return changed


def validate_near_tail(state, b, g):
    """Make T_k contain T0_k ∪ g_k for m < k <= M; returns True if T changed."""
    T, T0 = state.T, state.T0
    m, M = state.m, T.M
    if M <= m:
        return False
    sl = slice(m, M)
    changed = False
    parts = {}
    ledgers = {}
    for comp in ("re", "im"):
        t = getattr(T.finite, comp)
        t0 = getattr(T0.finite, comp)
        gg = getattr(g.finite, comp)
        lo, hi = t.lo.copy(), t.hi.copy()
        need_hi = np.maximum(t0.hi[sl], gg.hi[sl])
        need_lo = np.minimum(t0.lo[sl], gg.lo[sl])
        bad_hi = hi[sl] < need_hi
        bad_lo = lo[sl] > need_lo
        hi[sl] = np.where(bad_hi, need_hi, hi[sl])
        lo[sl] = np.where(bad_lo, need_lo, lo[sl])
        flagged = np.zeros(M, dtype=bool)
        flagged[sl] = bad_hi | bad_lo
        iv = Interval(lo, hi)
        # inflate flagged modes and spread c/|j| to neighbours
        ledger = np.zeros(M)
        for k in np.nonzero(flagged)[0]:
            for j in range(-state.c_radius, state.c_radius + 1):
                if j == 0 or not m <= k + j < M:
                    continue
                ledger[k + j] += state.c_inflate / abs(j)
        factor = np.where(flagged, 1.0 + state.c_inflate, 1.0) + ledger
        if np.any(factor > 1.0):
            iv = Interval.where(factor > 1.0, iv.inflate(factor), iv)
        parts[comp] = iv
        ledgers[comp] = ledger
        changed = changed or bool(np.any(flagged))
    state.inflates_re = ledgers["re"]
    state.inflates_im = ledgers["im"]
    if changed:
        state.T = PolyBd(ComplexInterval(parts["re"], parts["im"]), T.C, T.s)
    return changed


def validate_far_tail(state, b, g):
    """Far-tail case analysis; returns (changed, L) where L is the T/g crossing estimate."""
    T, T0 = state.T, state.T0
    M = T.M
    K = M + 1
    ci = state.c_inflate
    changed = False

    def upd(X, start):
        nonlocal T, changed
        T, ch = cover_from(T, X, start, ci)
        changed = changed or ch

    if T0.C == 0.0 and b.C == 0.0:
        L2 = math.inf
    elif T0.C == 0.0 or b.s == T0.s:
        L2 = math.inf
    else:
        L2 = math.ceil((b.C / T0.C) ** (1.0 / (b.s - T0.s))) if b.C > 0 else 1
    t0_in_b = _ball(T0, K) <= _ball(b, K)
    b_in_t0 = _ball(b, K) <= _ball(T0, K)
    if b.s > T0.s:
        if t0_in_b:
            if L2 < K:
                raise ValidationException("crossing index below M + 1")
            upd(g, K)
            if L2 < math.inf:
                upd(T0, max(L2, K))
        else:
            upd(T0, K)
    elif b.s == T0.s:
        if b_in_t0:
            upd(T0, K)
        else:
            upd(g, K)
    else:
        if b_in_t0:
            if L2 < K:
                raise ValidationException("crossing index below M + 1")
            upd(T0, K)
            if L2 < math.inf:
                upd(g, max(L2, K))
        else:
            upd(g, K)
    if not far_tail_covers(T, T0, g):
        upd(g, K)
        upd(T0, K)
    state.T = T
    return changed, predict_m(T, g)


def validate_tail(T0, state, b, g, W2=None):
    """One validation pass; returns True when T needed no change."""
    state.T0 = T0
    near = validate_near_tail(state, b, g)
    far, L = validate_far_tail(state, b, g)
    state.validated = not (near or far)
    if far:
        state.last_L = L
    return state.validated


def _resize(state, M_new):
    state.T = state.T.with_M(M_new)
    state.T0 = state.T0.with_M(M_new)


# ---------------------------------------------------------------------------
# the full step

def _comparison_matrix(J):
    hi = J.hi.copy()
    mag = J.mag()
    off = ~np.eye(J.shape[0], dtype=bool)
    out = np.where(off, mag, hi)
    return out


def _tighten_with_g(dbl, G, threshold):
    """Replace the doubleton by hull ∩ G when G is markedly narrower somewhere.

    G bounds each finite mode through its scalar linear equation; on large
    sets it beats the mean-value form, near an attractor the doubleton wins.
    """
    H = dbl.hull()
    if np.any(H.lo > G.hi) or np.any(G.lo > H.hi):
        raise StepFailure("finite enclosures do not intersect")
    if threshold is None:
        return dbl
    I = H.intersect(G)
    wh = H.hi - H.lo
    wi = I.hi - I.lo
    if np.any(wi < (1.0 - threshold) * wh):
        return Doubleton.from_box(I)
    return dbl


def inclusion_step(x0, T0, h, p, f, cfg=None):
    """Advance x0 ⊕ T0 by h; T0 covers modes 1..M with entries 1..m ignored."""
    cfg = IntegratorConfig() if cfg is None else cfg
    m = p.m
    alpha = p.alpha
    nu = p.nu
    X = x0.hull()
    Xc = ComplexInterval.from_real(X)
    T0 = tail_only(T0, m)
    if T0.M < m:
        T0 = T0.with_M(m)
    state = TailValidationState(T0, T0, m, cfg.c_inflate, cfg.c_radius,
                                M_cap=cfg.m_cap_factor * m)
    forcing = f.padded(m)
    rounds = 0
    W2c = None
    for rounds in range(1, cfg.max_validation + 1):
        T = state.T
        W2c = rough_enclosure(Xc, T, h, p, forcing, alpha, cfg.rough_retries)
        full = combine(W2c, T)
        N = nk_bound_sharp(full, alpha)
        b = b_from_n(N, f, nu)
        g = g_from_b(combine(Xc, state.T0), b, h, nu)
        if rounds == 1:
            find_s(state, g, p)
        if validate_tail(state.T0, state, b, g, W2c):
            break
        if cfg.adapt_M:
            M_new = correct_m(state, predict_m(state.T, g))
            if M_new is not None:
                _resize(state, M_new)
    else:
        raise StepFailure("tail validation did not converge")
    T = state.T
    T0v = state.T0
    # Galerkin projection error and its centre
    Wy = cross_nonlinear(PolyBd(W2c, 0.0, T.s), T, alpha, m)
    yc = Wy.mid()
    ycI = ComplexInterval.point(yc)
    forcing_c = f.padded(m, boxes=False) + ycI
    W1c = rough_enclosure(Xc, None, h, p, forcing_c, alpha, cfg.rough_retries)
    pert = f.perturbation()
    pert = ComplexInterval.concatenate([pert, ComplexInterval.zeros(m - pert.shape[0])]) \
        if pert.shape[0] < m else pert[:m]
    delta = ((Wy - ycI) + pert).to_real()
    Cvec = delta.mag()
    hullW = W1c.hull(W2c)
    J = jacobian(ModeVector(hullW, alpha), p)
    D = interval_matrix_exp_integral(_comparison_matrix(J), Cvec, h)
    Delta = Interval.symmetric(D)
    new, W1 = lohner_step(x0, yc, h, cfg.order, p, f, Delta=Delta, W1=W1c)
    new = _tighten_with_g(new, g.finite[:m].to_real(), cfg.box_switch)
    # tail at time h: the g bound from the validated enclosure
    s_g = g.s
    tail_h = tail_only(g, m)
    if tail_h.s > cfg.s:
        tail_h = tail_h.rescaled(cfg.s)
    return StepResult(new, tail_h, W2c.to_real(), T, delta, Delta, s_T=T.s, s_g=s_g,
                      validation_rounds=rounds)
