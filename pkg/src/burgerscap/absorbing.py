"""Analytic trapping regions and the construction of an absorbing set.

The absorbing set starts from the energy ball and is refined by repeatedly
bounding the nonlinear term and solving the linear part: first with energy
estimates, then with the sharp convolution bound, gaining one order of decay
per refinement.
"""
from dataclasses import dataclass
import math

import numpy as np

from ._fallback import up
from .bounds import (PolyBd, SelfConsistentBounds, b_from_n, check_c4a,
                     decay_constant_d, nk_bound_sharp)
from .errors import ConstructionFailure, DomainError, PreconditionError
from .interval import ComplexInterval, Interval, as_interval, ipow

EPS_HAT = 1e-15
MAX_REFINEMENTS = 10


@dataclass(frozen=True)
class AbsorbingConfig:
    E0: float
    Etilde: float
    alpha: float
    M: int
    m: int
    eps_hat: float = EPS_HAT
    target_s: float = 4.0
    extra_refinements: int = 0
    # keep the Step I boxes when Step II is looser (both are absorbing)
    intersect_step_one: bool = False

    def __post_init__(self):
        if not self.Etilde > self.E0:
            raise DomainError("need Etilde > E0")
        if not self.eps_hat > 0:
            raise DomainError("eps_hat must be positive")
        if not self.M >= self.m >= 1:
            raise DomainError("need M >= m >= 1")

    @property
    def Ehat(self):
        """1.01 (E0 + alpha^2), rounded up."""
        e = (Interval.point(self.E0) + as_interval(self.alpha).sqr()) * 1.01
        return float(e.hi)

    @staticmethod
    def from_problem(p, f, M=None, Etilde=None, **kw):
        """E0 = sup over the forcing ball of E(f) / nu^2, Etilde = 1.01 E0 by default."""
        nu_lo = Interval.point(float(p.nu.lo))
        E0 = float((Interval.point(f.energy_sup()) / nu_lo.sqr()).hi)
        if Etilde is None:
            Etilde = float(up(1.01 * E0)) if E0 > 0 else 1e-12
        M = 2 * p.m + 2 if M is None else M
        return AbsorbingConfig(E0=E0, Etilde=Etilde, alpha=p.alpha, M=M, m=p.m, **kw)


def analytic_trapping_region(cfg, p, f, s, margin=1.01):
    """Energy ball with decaying far modes that the flow of every projection cannot leave."""
    if not s > 0.5:
        raise DomainError("need s > 1/2")
    if not margin > 1:
        raise DomainError("margin must exceed 1")
    nu_lo = float(p.nu.lo)
    Et = Interval.point(cfg.Etilde)
    D = decay_constant_d(s)
    iso = ((Et + as_interval(cfg.alpha).sqr()).sqrt() * D / nu_lo).sqr()
    bound = max(float(f.m), float(iso.hi))
    N = int(math.ceil(margin * bound))
    if N <= bound:
        N += 1
    N = max(N, cfg.m, 1)
    C = float((Et.sqrt() * ipow(Interval.point(float(N)), s)).hi) * margin
    r = np.full(N, float(Et.sqrt().hi))
    body = PolyBd(ComplexInterval.disc_box(r), C, s)
    W = SelfConsistentBounds(body, min(cfg.m, N), energy=cfg.Etilde, alpha=cfg.alpha)
    if not check_c4a(W, p, f):
        raise ConstructionFailure("analytic trapping region failed its own check")
    return W


def dissipation_time(Einit, cfg, nu):
    """Time after which energy starting at Einit is below Etilde."""
    Einit = as_interval(Einit)
    if not float(Einit.lo) > 0:
        raise DomainError("initial energy must be positive")
    if not cfg.Etilde > cfg.E0:
        raise PreconditionError("need Etilde > E0")
    nu = as_interval(nu)
    if float(Einit.hi) <= cfg.Etilde:
        return Interval.point(0.0)
    Et = Interval.point(cfg.Etilde)
    eps = 1.0 - (Interval.point(cfg.E0) / Et).sqrt()
    if not float(eps.lo) > 0:
        raise PreconditionError("need Etilde > E0")
    t = (Einit / Et).log() / (2.0 * nu * eps)
    return Interval(max(float(t.lo), 0.0), float(t.hi))


def _step_one(cfg, p, f):
    nu_lo = float(p.nu.lo)
    fb = f.boxes
    k = np.arange(1, f.m + 1, dtype=float)
    fmax = float(np.max(up(fb.mag() / k))) if f.m else 0.0
    C = (Interval.point(cfg.Ehat) * 0.5 + fmax) / nu_lo + cfg.eps_hat
    C = float(C.hi)
    return PolyBd.from_ball(cfg.M, C, 1.0), C


def _step_two(C, cfg, p, f, prev=None):
    """Energy estimate of N with s = 1 turned into boxes and a k^-3/2 tail.

    With ``prev`` the boxes are intersected with the Step I boxes; both
    bounds hold after a finite time, so the intersection is still absorbing.
    """
    M = cfg.M
    nu = p.nu
    D = decay_constant_d(1.0)
    amp = Interval.point(C) * Interval.point(cfg.Ehat).sqrt() * D
    k = np.arange(1, M + 1, dtype=float)
    sqk = Interval.point(k).sqrt()
    k32 = ipow(Interval.point(k), 1.5)
    fp = f.padded(M)
    eps = Interval.symmetric(cfg.eps_hat)

    def comp(fc):
        lo = ((-amp + Interval.point(fc.lo) / sqk) / nu / k32).lo
        hi = ((amp + Interval.point(fc.hi) / sqk) / nu / k32).hi
        return Interval(lo, hi) + eps

    fin = ComplexInterval(comp(fp.re), comp(fp.im))
    if prev is not None and _boxes_meet(fin, prev.finite):
        fin = fin.intersect(prev.finite)
    Cf = float((amp / float(nu.lo) + cfg.eps_hat).hi)
    return PolyBd(fin, Cf, 1.5)


def _refine(V, cfg, p, f):
    try:
        N = nk_bound_sharp(V, cfg.alpha)
    except DomainError as exc:
        raise ConstructionFailure(f"refinement diverged: {exc}") from exc
    b = b_from_n(N, f, p.nu)
    eps = Interval.symmetric(cfg.eps_hat)
    fin = ComplexInterval(b.finite.re + eps, b.finite.im + eps)
    if _boxes_meet(fin, V.finite):
        fin = fin.intersect(V.finite)
    return PolyBd(fin, float(up(b.C + cfg.eps_hat)), b.s)


def _boxes_meet(a, b):
    return bool(np.all(a.re.lo <= b.re.hi) and np.all(b.re.lo <= a.re.hi)
                and np.all(a.im.lo <= b.im.hi) and np.all(b.im.lo <= a.im.hi))


def build_absorbing_set(cfg, p, f, history=None):
    """Absorbing set V + Theta for large Galerkin projections, far tail at ``cfg.target_s``."""
    if f.m > cfg.M:
        raise DomainError("forcing modes must satisfy m <= M")
    V, C = _step_one(cfg, p, f)
    if history is not None:
        history.append(V)
    V = _step_two(C, cfg, p, f, V if cfg.intersect_step_one else None)
    if history is not None:
        history.append(V)
    it = 0
    while V.s < cfg.target_s:
        if it >= MAX_REFINEMENTS:
            raise ConstructionFailure("refinement did not reach the target decay")
        V = _refine(V, cfg, p, f)
        if not math.isfinite(V.C) or V.C > 1e300:
            raise ConstructionFailure("refinement diverged")
        it += 1
        if history is not None:
            history.append(V)
    V = V.rescaled(cfg.target_s)
    for _ in range(cfg.extra_refinements):
        V = _refine(V, cfg, p, f).rescaled(cfg.target_s)
        if history is not None:
            history.append(V)
    return SelfConsistentBounds(V, cfg.m, alpha=cfg.alpha)
