"""Locally attracting fixed points: candidate, coordinates, trapping region, log-norm.

Floating-point linear algebra (Newton, Schur form, eigenvectors) only
produces approximate objects.  Rigour comes from interval re-evaluation:
Krawczyk inverses for the coordinate change, the interval Jacobian over a
whole region and the inward-pointing checks.

Regions around the fixed point are stored in block coordinates y = A x for
the finite modes (a Euclidean ball per block) and in canonical coordinates
for the tail.
"""
from dataclasses import dataclass, field, replace
import math

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp

from ._fallback import up
from .bounds import (PolyBd, SelfConsistentBounds, _tail_sum_up, b_from_n, check_c4a,
                     nk_bound_sharp)
from .errors import (CandidateFailure, CertificationFailure, IllConditionedSpectrum,
                     SingularOrIllConditioned)
from .interval import ComplexInterval, Interval, as_interval, krawczyk_inverse
from .spectral import (BurgersParams, ModeVector, coupling_entries, interleave_blocks,
                       jacobian)

NEWTON_TOL = 1e-13
NEWTON_STEPS = 50
ENLARGE_FACTOR = 1.3


# ---------------------------------------------------------------------------
# floating point vector field

def _point_params(p):
    return BurgersParams(float(p.nu.lo), p.alpha, p.m, p.d, p.r, p.p)


def rhs_float(x, nu, alpha, f):
    """Galerkin vector field in real coordinates, plain floating point."""
    x = np.asarray(x, dtype=float)
    m = len(x) // 2
    a = x[0::2] + 1j * x[1::2]
    seq = np.concatenate([np.conj(a[::-1]), [alpha], a])
    conv = np.convolve(seq, seq)[2 * m + 1:3 * m + 1]
    k = np.arange(1, m + 1)
    out = -nu * k * k * a - 0.5j * k * conv + f
    res = np.empty(2 * m)
    res[0::2] = out.real
    res[1::2] = out.imag
    return res


def jacobian_float(x, p):
    pp = _point_params(p)
    x = np.asarray(x, dtype=float)
    return jacobian(ModeVector.from_real(Interval.point(x), p.alpha), pp).mid()


def _forcing_center(f, m):
    return f.padded(m, boxes=False).mid()


def approximate_fixed_point(p, f, t_end=None):
    """Non-rigorous integration of the Galerkin system from 0 at nu = nu_lo."""
    m = p.m
    nu = float(p.nu.lo)
    fc = _forcing_center(f, m)
    t_end = 20.0 / nu if t_end is None else t_end
    sol = solve_ivp(lambda t, y: rhs_float(y, nu, p.alpha, fc), (0.0, t_end),
                    np.zeros(2 * m), method="BDF", rtol=1e-10, atol=1e-12,
                    jac=lambda t, y: jacobian_float(y, p))
    return sol.y[:, -1]


def newton_refine(x0, p, f):
    """Newton iteration for the Galerkin fixed point at nu = nu_lo with the centre forcing."""
    nu = float(p.nu.lo)
    fc = _forcing_center(f, p.m)
    x = np.array(x0, dtype=float)
    best, best_res = x.copy(), np.inf
    for _ in range(NEWTON_STEPS):
        F = rhs_float(x, nu, p.alpha, fc)
        res = float(np.max(np.abs(F))) if len(F) else 0.0
        if res < best_res:
            best, best_res = x.copy(), res
        if res <= NEWTON_TOL:
            break
        J = jacobian_float(x, p)
        try:
            step = np.linalg.solve(J, F)
        except np.linalg.LinAlgError as exc:
            raise CandidateFailure("singular Newton matrix") from exc
        if not np.all(np.isfinite(step)):
            raise CandidateFailure("Newton step is not finite")
        x = x - step
    return best


# ---------------------------------------------------------------------------
# coordinates

@dataclass(frozen=True)
class BlockDecomposition:
    blocks: tuple

    def __post_init__(self):
        flat = sorted(i for b in self.blocks for i in b)
        if flat != list(range(len(flat))):
            raise ValueError("blocks must partition the coordinates")
        if any(len(b) not in (1, 2) for b in self.blocks):
            raise ValueError("blocks have dimension 1 or 2")

    @property
    def n(self):
        return sum(len(b) for b in self.blocks)

    def dims(self):
        return [len(b) for b in self.blocks]


@dataclass(frozen=True)
class CoordinateChange:
    A: Interval
    Ainv: Interval
    eigenvalues: np.ndarray = None

    def identity_enclosed(self):
        prod = self.A @ self.Ainv
        return bool(np.all(prod.contains(np.eye(self.A.shape[0]))))


CLUSTER_TOL = 1e-8


def block_diagonalize(J):
    """Real Schur form, then eigenvector reduction; returns (change, blocks, D_point).

    The coordinate change is A = E S with S orthogonal (J = S^T T S) and E
    the inverse of a real eigenvector basis of T, so A J A^-1 is block
    diagonal up to rounding.  Blocks are ordered by decreasing real part.
    """
    J = np.asarray(J, dtype=float)
    n = J.shape[0]
    T, Z = scipy.linalg.schur(J, output="real")
    S = Z.T
    w, V = scipy.linalg.eig(T)
    order = np.argsort(-w.real, kind="stable")
    cols, blocks, used = [], [], np.zeros(n, dtype=bool)
    for i in order:
        if used[i]:
            continue
        tol = CLUSTER_TOL * max(1.0, abs(w[i]))
        # eigenvalues this close (conjugate partner included) share a block
        group = [j for j in order if not used[j]
                 and (abs(w[j] - w[i]) <= tol or abs(w[j] - np.conj(w[i])) <= tol)]
        used[group] = True
        if len(group) == 1 and abs(w[i].imag) <= tol:
            v = V[:, i].real
            cols.append(v / np.linalg.norm(v))
            blocks.append((len(cols) - 1,))
            continue
        if len(group) == 2 and abs(w[i].imag) > tol:
            # genuine conjugate pair: real and imaginary parts of one eigenvector
            v = V[:, i] if w[i].imag > 0 else np.conj(V[:, i])
            re, im = v.real, v.imag
            scale = math.hypot(np.linalg.norm(re), np.linalg.norm(im)) / math.sqrt(2.0)
            start = len(cols)
            cols += [re / scale, im / scale]
            blocks.append((start, start + 1))
            continue
        if len(group) == 1:
            raise IllConditionedSpectrum("unpaired complex eigenvalue")
        # near-multiple eigenvalue: orthonormal basis of the real span
        span = np.column_stack([V[:, j].real for j in group] + [V[:, j].imag for j in group])
        U, sv, _ = np.linalg.svd(span, full_matrices=False)
        k = len(group)
        if sv[k - 1] <= 1e-10 * sv[0]:
            raise IllConditionedSpectrum("defective eigenvalue cluster")
        start = len(cols)
        cols += [U[:, q] for q in range(k)]
        if k == 2:
            blocks.append((start, start + 1))
        else:
            blocks += [(start + q,) for q in range(k)]
    Vr = np.column_stack(cols)
    try:
        E = np.linalg.inv(Vr)
    except np.linalg.LinAlgError as exc:
        raise IllConditionedSpectrum("eigenvector basis is singular") from exc
    try:
        Sinv = krawczyk_inverse(S)
        Einv = krawczyk_inverse(E)
    except SingularOrIllConditioned as exc:
        raise IllConditionedSpectrum(str(exc)) from exc
    A = Interval.point(E) @ Interval.point(S)
    Ainv = Sinv @ Einv
    eig = np.array([w[i] for i in order])
    change = CoordinateChange(A, Ainv, eig)
    D = (A @ Interval.point(J)) @ Ainv
    return change, BlockDecomposition(tuple(blocks)), D


def transformed_jacobian(change, Jint):
    """[D] = [A] [J] [A^-1]."""
    return (change.A @ Jint) @ change.Ainv


# ---------------------------------------------------------------------------
# regions in block coordinates

@dataclass(frozen=True)
class BlockRegion:
    """Balls (or intervals) of radius r_i around ``center`` per block, canonical tail."""

    center: np.ndarray
    radii: np.ndarray
    blocks: BlockDecomposition
    tail: PolyBd
    m: int

    def box(self):
        """Enclosing box of the finite part in block coordinates."""
        r = np.zeros(len(self.center))
        for b, ri in zip(self.blocks.blocks, self.radii):
            for i in b:
                r[i] = ri
        return Interval.point(self.center) + Interval.symmetric(r)

    def canonical_finite(self, change):
        """[A^-1] (centre + box) as an interval vector in real coordinates."""
        r = self.box() - self.center
        return change.Ainv @ Interval.point(self.center) + change.Ainv @ r

    def canonical(self, change, alpha=0.0):
        X = ComplexInterval.from_real(self.canonical_finite(change))
        body = _combine(X, self.tail)
        return SelfConsistentBounds(body, self.m, alpha=alpha)

    def scaled(self, factor):
        """Radii and tail widths multiplied by ``factor`` about the same centres."""
        t = self.tail
        m = self.m
        near = t.finite[m:]
        mid = near.mid()
        grown = ComplexInterval(Interval.point(mid.real) + (near.re - mid.real) * factor,
                                Interval.point(mid.imag) + (near.im - mid.imag) * factor)
        grown = grown.hull(near)
        fin = ComplexInterval.concatenate([t.finite[:m], grown])
        tail = PolyBd(fin, float(up(t.C * factor)), t.s)
        return replace(self, radii=up(self.radii * factor), tail=tail)

    def contains_set(self, Y, tail, change=None):
        """Finite part Y (block coordinates) in the balls and tail ⊆ self.tail."""
        return self.finite_contains(Y) and _tail_only(tail, self.m).subset(self.tail)

    def finite_contains(self, Y):
        d = Y - self.center
        for b, ri in zip(self.blocks.blocks, self.radii):
            mags = d[list(b)].mag()
            norm = float(up(np.sqrt(up(np.sum(up(mags * mags))))))
            if not norm <= ri:
                return False
        return True


def _combine(finite, tail):
    m = len(finite)
    return PolyBd(ComplexInterval.concatenate([finite, tail.finite[m:]]), tail.C, tail.s)


def _tail_only(T, m):
    z = ComplexInterval.zeros(m)
    return PolyBd(ComplexInterval.concatenate([z, T.finite[m:]]), T.C, T.s)


def _full_jacobian(X, tail, p, alpha):
    """Interval Jacobian of P_m F(x + t) in x over X ⊕ tail (real coordinates)."""
    m = p.m
    modes = _combine(X, tail).boxes(max(2 * m, tail.M))
    ks = np.arange(1, m + 1)
    rr, ri, ir, ii = coupling_entries(modes, alpha, ks, ks)
    J = interleave_blocks(rr, ri, ir, ii)
    lam = p.eigenvalues(m)
    diag = np.arange(2 * m)
    lam2 = Interval(np.repeat(lam.lo, 2), np.repeat(lam.hi, 2))
    return J.replace((diag, diag), J[diag, diag] + lam2)


def _field_at(xbar, tail, p, f, alpha):
    """Enclosure of P_m F(xbar + t) for t in the tail, forcing over its ball."""
    m = p.m
    Xb = ComplexInterval.from_real(Interval.point(xbar))
    N = nk_bound_sharp(_combine(Xb, tail), alpha).finite[:m]
    lam = p.eigenvalues(m)
    return (Xb * lam + N + f.padded(m)).to_real()


def _mu_block(D):
    """Upper bound of the Euclidean log-norm of a 1x1 or 2x2 interval block."""
    if D.shape == (1, 1):
        return float(D.hi[0, 0])
    a, b, c, d = D[0, 0], D[0, 1], D[1, 0], D[1, 1]
    half = 0.5
    mean = (a + d) * half
    rad = (((a - d) * half).sqr() + ((b + c) * half).sqr()).sqrt()
    return float((mean + rad).hi)


def _norm_block(D):
    """Upper bound of the spectral norm of an interval block via |D|."""
    M = D.mag()
    if M.size == 0:
        return 0.0
    if M.shape[0] == 1 or M.shape[1] == 1:
        return float(up(np.sqrt(up(np.sum(up(M * M))))))
    G = Interval.point(M.T) @ Interval.point(M)
    ev = (G[0, 0] + G[1, 1]) * 0.5 + (((G[0, 0] - G[1, 1]) * 0.5).sqr() + G[0, 1].sqr()).sqrt()
    return float(ev.sqrt().hi)


def _tail_sum_mags(body, start):
    """Upper bound of sum_{j >= start} |a_j| over a PolyBd (start >= 1)."""
    M = body.M
    start = max(int(start), 1)
    total = 0.0
    if start <= M:
        total = float(up(np.sum(body.finite[start - 1:].mag())))
    if body.C > 0:
        k0 = max(start, M + 1)
        total = float(up(total + up(body.C * _tail_sum_up(k0 - 1, body.s))))
    return total


def _region_terms(region, change, p, f, alpha):
    m = p.m
    X = ComplexInterval.from_real(region.canonical_finite(change))
    body = _combine(X, region.tail)
    J = _full_jacobian(X, region.tail, p, alpha)
    D = transformed_jacobian(change, J)
    return X, body, D


def _block_parts(D, blocks):
    B = blocks.blocks
    n = len(B)
    mu = np.zeros(n)
    off = np.zeros((n, n))
    for i, bi in enumerate(B):
        mu[i] = _mu_block(D[np.ix_(bi, bi)])
        for j, bj in enumerate(B):
            if i != j:
                off[i, j] = _norm_block(D[np.ix_(bi, bj)])
    return mu, off


def _tail_column_sums(body, change, blocks, m, alpha, extra=24):
    """Per finite block: bound on the sum over tail coordinates of |dF_(i)/dt_k|.

    Tail columns m < k <= K are evaluated through [A] with the Euclidean
    norm of each block; columns beyond K use |dN_n/da_k| <= n (|a_{k-n}| + |a_{k+n}|).
    """
    K = max(body.M, 2 * m) + extra
    modes = body.boxes(K + m)
    rows = np.arange(1, m + 1)
    cols = np.arange(m + 1, K + 1)
    Jt = interleave_blocks(*coupling_entries(modes, alpha, rows, cols))
    G = change.A @ Jt
    out = np.zeros(len(blocks.blocks))
    for i, b in enumerate(blocks.blocks):
        mags = G[list(b)].mag()
        norms = up(np.sqrt(up(np.sum(up(mags * mags), axis=0))))
        out[i] = float(up(np.sum(norms)))
    R = np.zeros(2 * m)
    for n in range(1, m + 1):
        s = _tail_sum_mags(body, K + 1 - n) + _tail_sum_mags(body, K + 1 + n)
        R[2 * n - 2] = R[2 * n - 1] = float(up(2.0 * n * s))
    rem = up(change.A.mag() @ R)
    for i, b in enumerate(blocks.blocks):
        out[i] = float(up(out[i] + up(np.sum(rem[list(b)]))))
    return out


def _tail_row_bound(body, change, p, alpha):
    """max over k > m of lambda_k + k K with K bounding all tail-row couplings."""
    m = p.m
    S = _tail_sum_mags(body, 1)
    amax = float(np.max(body.finite.mag())) if body.M else 0.0
    amax = max(amax, float(body.far_radius(np.array([body.M + 1]))[0]))
    kappa = max(1.0, float(np.max(up(np.sum(change.Ainv.mag(), axis=1)))))
    K = float(up(amax + kappa * (6.0 * S + abs(alpha) + amax)))
    nu = float(p.nu.lo)
    kpeak = K / (2.0 * nu)
    cands = {m + 1, max(m + 1, int(math.floor(kpeak))), max(m + 1, int(math.ceil(kpeak)))}
    vals = []
    for k in cands:
        v = Interval.point(-nu) * float(k * k) + Interval.point(K) * float(k)
        vals.append(float(v.hi))
    return max(vals)


def log_norm_bound(region, blocks, change, p, f, alpha=None):
    """Upper bound l of the block log-norm condition over the region."""
    alpha = p.alpha if alpha is None else alpha
    X, body, D = _region_terms(region, change, p, f, alpha)
    mu, off = _block_parts(D, blocks)
    tailcols = _tail_column_sums(body, change, blocks, p.m, alpha)
    rows = up(mu + up(np.sum(off, axis=1)) + tailcols)
    l_fin = float(np.max(rows))
    l_tail = _tail_row_bound(body, change, p, alpha)
    l = max(l_fin, l_tail)
    return Interval.point(l)


def finite_isolation_margins(region, change, xbar, p, f, alpha):
    """Per block: mu r_i + sum_j |D_ij| r_j + |residual_i|  (negative means inward)."""
    X, body, D = _region_terms(region, change, p, f, alpha)
    mu, off = _block_parts(D, region.blocks)
    Fx = _field_at(xbar, region.tail, p, f, alpha)
    e = Interval.point(region.center) - change.A @ Interval.point(xbar)
    resid = change.A @ Fx + D @ e
    out = np.zeros(len(region.radii))
    for i, b in enumerate(region.blocks.blocks):
        mags = resid[list(b)].mag()
        rn = float(up(np.sqrt(up(np.sum(up(mags * mags))))))
        v = up(mu[i] * region.radii[i]) if mu[i] >= 0 else mu[i] * region.radii[i]
        v = float(up(v + up(np.dot(off[i], region.radii)) + rn))
        out[i] = v
    return out, mu, off, resid


def check_region(region, change, xbar, p, f, alpha=None):
    """Inward-pointing field on every face of the region (finite blocks and tail)."""
    alpha = p.alpha if alpha is None else alpha
    margins, _, _, _ = finite_isolation_margins(region, change, xbar, p, f, alpha)
    if not np.all(margins < 0):
        return False
    return check_c4a(region.canonical(change, alpha), p, f)


def _tail_from_b(X, tail, p, f, alpha, s, grow=1.1):
    m = p.m
    N = nk_bound_sharp(_combine(X, tail), alpha)
    b = b_from_n(N, f, p.nu)
    # strict containment of b keeps the tail faces inward
    near = b.finite[m:].inflate(grow, 1e-14)
    fin = ComplexInterval.concatenate([ComplexInterval.zeros(m), near])
    C = b.C
    if b.s > s:
        C = float(up(C * (tail.M + 1) ** (s - b.s)))
    return PolyBd(fin, float(up(C * grow)), s)


def newton_correction_sizes(xbar, change, blocks, p, f, alpha=None):
    """Per block: Euclidean size of A J^-1 [F(xbar)] over the parameter and forcing balls."""
    alpha = p.alpha if alpha is None else alpha
    F = _field_at(xbar, PolyBd.zeros(p.m), p, f, alpha)
    J = jacobian_float(xbar, p)
    G = np.abs(change.A.mid() @ np.linalg.inv(J))
    c = G @ F.mag()
    return np.array([math.sqrt(float(np.sum(c[list(b)] ** 2))) for b in blocks.blocks])


def build_trapping_region(xbar, change, blocks, p, f, M=None, s=4.0, attempts=60,
                          scale=None, alpha=None, factor=ENLARGE_FACTOR):
    """Small region around A xbar (balls per block, s-decaying tail) passing the C4a checks.

    Radii start at 1e-6 * scale in the proportions of the per-block Newton
    correction and grow by ``factor`` until every face points inward.
    """
    alpha = p.alpha if alpha is None else alpha
    m = p.m
    M = 2 * m + 2 if M is None else M
    center = (change.A @ Interval.point(xbar)).mid()
    if scale is None:
        scale = max(1.0, float(np.max(np.abs(xbar)))) if len(xbar) else 1.0
    corr = newton_correction_sizes(xbar, change, blocks, p, f, alpha)
    top = float(np.max(corr)) if corr.size else 0.0
    shape = np.maximum(corr / top, 1e-3) if top > 0 else np.ones(len(blocks.blocks))
    region = BlockRegion(center, 1e-6 * scale * shape, blocks, PolyBd.zeros(M, s), m)
    for _ in range(attempts):
        region, ok = _retail(region, change, p, f, alpha, passes=6)
        if ok and check_region(region, change, xbar, p, f, alpha):
            return region
        region = replace(region, radii=up(region.radii * factor))
    raise CertificationFailure("no trapping region found")


def _hull_tail(a, b, m):
    h = a.hull(b) if a.M == b.M else a.with_M(max(a.M, b.M)).hull(b.with_M(max(a.M, b.M)))
    return _tail_only(h, m)


def _retail(region, change, p, f, alpha, passes=3):
    """Hull the tail with the b-based tail of the current finite part until C4a holds."""
    for _ in range(passes):
        if check_c4a(region.canonical(change, alpha), p, f):
            return region, True
        X = ComplexInterval.from_real(region.canonical_finite(change))
        t = _tail_from_b(X, region.tail, p, f, alpha, region.tail.s)
        region = replace(region, tail=_hull_tail(region.tail, t, region.m))
    return region, check_c4a(region.canonical(change, alpha), p, f)


def enlarge_trapping_region(region, change, xbar, p, f, factor=ENLARGE_FACTOR,
                            rounds=60, alpha=None):
    """Grow the region geometrically while it stays trapping with a negative log-norm."""
    alpha = p.alpha if alpha is None else alpha
    best = region
    for _ in range(rounds):
        cand, ok = _retail(best.scaled(factor), change, p, f, alpha)
        if not ok or not check_region(cand, change, xbar, p, f, alpha):
            break
        if not log_norm_bound(cand, cand.blocks, change, p, f, alpha).hi < 0:
            break
        best = cand
    return best


@dataclass
class LocalCertificate:
    xbar: np.ndarray
    change: CoordinateChange
    blocks: BlockDecomposition
    D: Interval
    W_T: BlockRegion
    l: Interval
    enlarged: BlockRegion
    l_enlarged: Interval = None

    @property
    def attracting(self):
        return bool(self.l.hi < 0)


def certify_local(p, f, x0=None, M=None, s=4.0, enlarge=True):
    """Steps from a candidate to an (enlarged) trapping region with its log-norm bound."""
    if x0 is None:
        x0 = approximate_fixed_point(p, f)
    xbar = newton_refine(x0, p, f)
    Jf = jacobian_float(xbar, p)
    change, blocks, _ = block_diagonalize(Jf)
    Xb = ModeVector.from_real(Interval.point(xbar), p.alpha)
    Dint = transformed_jacobian(change, jacobian(Xb, p))
    region = build_trapping_region(xbar, change, blocks, p, f, M=M, s=s)
    l = log_norm_bound(region, blocks, change, p, f)
    enlarged = region
    l_en = l
    if enlarge and l.hi < 0:
        enlarged = enlarge_trapping_region(region, change, xbar, p, f)
        l_en = log_norm_bound(enlarged, blocks, change, p, f)
    return LocalCertificate(xbar, change, blocks, Dint, region, l, enlarged, l_en)
