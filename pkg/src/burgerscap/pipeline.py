"""End-to-end proof: local certificate, absorbing set, integration until containment.

Configuration files are line oriented ``key = value`` text; forcing modes
are written ``f[k] = re, im``.  Decimal inputs are read into intervals with
outward rounding.  Certificates are plain UTF-8 text whose floats are
written with ``repr`` so that reading them back is bit exact.
"""
from dataclasses import dataclass, field, replace
import math
import os
import re
import tempfile
import time

import numpy as np

from .absorbing import AbsorbingConfig, build_absorbing_set
from .bounds import PolyBd, SelfConsistentBounds
from .errors import (CertificationFailure, ConfigurationError, ConstructionFailure,
                     DomainError, GlobalInconclusive, IllConditionedSpectrum, StepFailure,
                     ValidationException)
from .fixedpoint import BlockDecomposition, BlockRegion, CoordinateChange, certify_local
from .integrator import Doubleton, IntegratorConfig, inclusion_step
from .interval import ComplexInterval, Interval
from .spectral import BurgersParams, ForcingSet

# extra s = 4 refinements tried in turn when the absorbing set cannot be integrated
TIGHT_LADDER = (3, 10)

SUMMARY_COLUMNS = ("nu", "int_u0", "E0", "epsilon", "m", "l", "time", "steps",
                   "existence", "local", "global")


# ---------------------------------------------------------------------------
# configuration

@dataclass
class ProofConfig:
    nu: Interval
    alpha: float
    m: int
    forcing: list
    epsilon: float = 0.0
    s: int = 4
    taylor_order: int = 6
    step_size: float = 0.005
    E0: float = None
    max_steps: int = 5000
    output_path: str = None
    M: int = None
    refine_steps: int = 200
    halvings: int = 2
    absorbing_intersect: bool = False
    absorbing_refinements: int = 0
    tighten_on_failure: bool = True

    def __post_init__(self):
        if self.s < 4:
            raise ConfigurationError("decay exponent s must be at least 4")
        if not self.step_size > 0:
            raise ConfigurationError("step size must be positive")
        if self.m < 1:
            raise ConfigurationError("m must be at least 1")
        if self.taylor_order < 1:
            raise ConfigurationError("Taylor order must be at least 1")
        if self.epsilon < 0:
            raise ConfigurationError("epsilon must be non-negative")
        for k, _, _ in self.forcing:
            if not 0 < k <= self.m:
                raise ConfigurationError(f"forcing mode {k} outside 1..{self.m}")

    def params(self):
        return BurgersParams(self.nu, self.alpha, self.m)

    def forcing_set(self):
        modes = {k: (re_, im_) for k, re_, im_ in self.forcing}
        return ForcingSet.from_modes(modes, self.m, self.epsilon)


_KEYS = {
    "nu": "nu", "alpha": "alpha", "a0": "alpha", "m": "m", "s": "s",
    "order": "taylor_order", "taylor_order": "taylor_order",
    "h": "step_size", "step_size": "step_size", "epsilon": "epsilon", "eps": "epsilon",
    "e0": "E0", "max_steps": "max_steps", "output": "output_path",
    "output_path": "output_path", "m_tail": "M", "refine_steps": "refine_steps",
    "absorbing_intersect": "absorbing_intersect", "absorbing_refinements": "absorbing_refinements",
    "tighten_on_failure": "tighten_on_failure", "halvings": "halvings",
}
_FORCING = re.compile(r"^f\[\s*(-?\d+)\s*\]$")


def _numbers(text):
    return [t for t in re.split(r"[\s,;\[\]]+", text.strip()) if t]


def _boolean(text):
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(text)


def parse_config(text):
    """Parse ``key = value`` lines into a ProofConfig."""
    values = {}
    forcing = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected key = value")
        key, val = (part.strip() for part in line.split("=", 1))
        fm = _FORCING.match(key)
        if fm:
            k = int(fm.group(1))
            nums = _numbers(val)
            if len(nums) not in (1, 2):
                raise ConfigurationError(f"line {lineno}: forcing needs re, im")
            re_ = Interval.from_decimal(nums[0])
            im_ = Interval.from_decimal(nums[1]) if len(nums) == 2 else Interval.point(0.0)
            forcing.append((k, re_, im_))
            continue
        name = _KEYS.get(key.lower())
        if name is None:
            raise ConfigurationError(f"line {lineno}: unknown key {key!r}")
        values[name] = val
    if "nu" not in values or "m" not in values:
        raise ConfigurationError("config needs nu and m")
    nums = _numbers(values.pop("nu"))
    if len(nums) == 1:
        nu = Interval.from_decimal(nums[0])
    elif len(nums) == 2:
        lo, hi = Interval.from_decimal(nums[0]), Interval.from_decimal(nums[1])
        nu = Interval(float(lo.lo), float(hi.hi))
    else:
        raise ConfigurationError("nu must be one value or an interval")
    kw = {"nu": nu, "forcing": forcing}
    outward = lambda v: float(Interval.from_decimal(v).hi)
    casts = {"alpha": float, "m": int, "s": int, "taylor_order": int, "step_size": float,
             "epsilon": outward, "E0": outward, "max_steps": int, "output_path": str,
             "M": int, "refine_steps": int, "absorbing_intersect": _boolean,
             "absorbing_refinements": int, "tighten_on_failure": _boolean, "halvings": int}
    for name, val in values.items():
        try:
            kw[name] = casts[name](val)
        except ValueError as exc:
            raise ConfigurationError(f"bad value for {name}: {val!r}") from exc
    kw.setdefault("alpha", 0.0)
    try:
        return ProofConfig(**kw)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from exc


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


# ---------------------------------------------------------------------------
# certificate

@dataclass
class ProofCertificate:
    existence: bool
    local: bool
    global_: bool
    nu: Interval
    alpha: float
    E0: float
    epsilon: float
    m: int
    xbar: np.ndarray = None
    A: Interval = None
    Ainv: Interval = None
    D: Interval = None
    eigenvalues: np.ndarray = None
    W_T: BlockRegion = None
    W_tilde: BlockRegion = None
    l: float = None
    absorbing: PolyBd = None
    fixed_point: SelfConsistentBounds = None
    step_count: int = 0
    t_hat: float = 0.0
    wall_clock: float = 0.0
    messages: list = field(default_factory=list)

    def summary_row(self):
        """Table-style row: nu, integral of u0, E0, eps, m, l, time, steps, three verdicts."""
        nu = f"[{float(self.nu.lo)!r},{float(self.nu.hi)!r}]"
        integral = repr(2.0 * math.pi * self.alpha)
        l = "-" if self.l is None else repr(self.l)
        steps = str(self.step_count) if self.global_ else "-"
        t = repr(self.t_hat) if self.global_ else "-"
        mark = lambda b: "yes" if b else "no"
        return [nu, integral, repr(self.E0), repr(self.epsilon), str(self.m), l, t, steps,
                mark(self.existence), mark(self.local), mark(self.global_)]


def _fmt(x):
    return repr(float(x))


def _ivec(iv):
    iv = iv if isinstance(iv, Interval) else Interval.point(iv)
    lo = np.ravel(iv.lo)
    hi = np.ravel(iv.hi)
    return " ".join(f"{_fmt(a)} {_fmt(b)}" for a, b in zip(lo, hi))


def _emit_matrix(lines, name, M):
    if M is None:
        return
    lines.append(f"[{name}] rows={M.shape[0]} cols={M.shape[1]}")
    for i in range(M.shape[0]):
        lines.append(_ivec(M[i]))


def _emit_polybd(lines, name, P, m=None):
    if P is None:
        return
    lines.append(f"[{name}] M={P.M} C={_fmt(P.C)} s={_fmt(P.s)}" + ("" if m is None else f" m={m}"))
    lines.append("k | re_lo re_hi | im_lo im_hi")
    for k in range(P.M):
        lines.append(f"{k + 1} | {_ivec(P.finite.re[k:k + 1])} | {_ivec(P.finite.im[k:k + 1])}")
    lines.append(f">= {P.M + 1} | |a_k| <= {_fmt(P.C)} / k^{_fmt(P.s)}")


def _emit_region(lines, name, R):
    if R is None:
        return
    lines.append(f"[{name}] m={R.m}")
    lines.append("blocks = " + " ".join(",".join(str(i) for i in b) for b in R.blocks.blocks))
    lines.append("center = " + " ".join(_fmt(x) for x in R.center))
    lines.append("radii = " + " ".join(_fmt(x) for x in R.radii))
    _emit_polybd(lines, name + ".tail", R.tail)


def emit_text(cert, timing=True):
    """Certificate text; ``timing=False`` drops the wall clock so reruns compare equal."""
    lines = ["# burgerscap proof certificate", "[verdicts]",
             f"existence = {str(cert.existence).lower()}",
             f"local = {str(cert.local).lower()}",
             f"global = {str(cert.global_).lower()}",
             "[parameters]",
             f"nu = {_ivec(cert.nu)}",
             f"alpha = {_fmt(cert.alpha)}",
             f"int_u0 = {_fmt(2.0 * math.pi * cert.alpha)}",
             f"E0 = {_fmt(cert.E0)}",
             f"epsilon = {_fmt(cert.epsilon)}",
             f"m = {cert.m}",
             "[results]",
             f"l = {'none' if cert.l is None else _fmt(cert.l)}",
             f"step_count = {cert.step_count}",
             f"t_hat = {_fmt(cert.t_hat)}"]
    if timing:
        lines.append(f"wall_clock = {_fmt(cert.wall_clock)}")
    if cert.xbar is not None:
        lines.append("xbar = " + " ".join(_fmt(x) for x in cert.xbar))
    if cert.eigenvalues is not None:
        lines.append("eigenvalues = " + " ".join(f"{_fmt(z.real)} {_fmt(z.imag)}" for z in cert.eigenvalues))
    for msg in cert.messages:
        lines.append("message = " + msg.replace("\n", " "))
    _emit_matrix(lines, "A", cert.A)
    _emit_matrix(lines, "Ainv", cert.Ainv)
    _emit_matrix(lines, "D", cert.D)
    _emit_region(lines, "W_T", cert.W_T)
    _emit_region(lines, "W_tilde", cert.W_tilde)
    _emit_polybd(lines, "absorbing", cert.absorbing)
    if cert.fixed_point is not None:
        _emit_polybd(lines, "fixed_point", cert.fixed_point.body, cert.fixed_point.m)
    lines.append("[summary]")
    lines.append("columns = " + " | ".join(SUMMARY_COLUMNS))
    lines.append("row = " + " | ".join(cert.summary_row()))
    return "\n".join(lines) + "\n"


def emit_certificate(cert, path):
    """Write the certificate atomically (temporary file, then rename)."""
    text = emit_text(cert)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".cert-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _floats(text):
    return np.array([float(t) for t in text.split()], dtype=float)


def _pairs(text):
    v = _floats(text)
    return Interval(v[0::2], v[1::2])


def _sections(text):
    out, name, body = [], None, []
    for line in text.splitlines():
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if name is not None:
                out.append((name, body))
            name, body = line, []
        else:
            body.append(line)
    if name is not None:
        out.append((name, body))
    return out


def _header(line):
    name = line[1:line.index("]")]
    attrs = dict(kv.split("=", 1) for kv in line[line.index("]") + 1:].split())
    return name, attrs


def _kv(body):
    out = {}
    for line in body:
        k, v = line.split("=", 1)
        out.setdefault(k.strip(), []).append(v.strip())
    return out


def _parse_polybd(attrs, body):
    rows = [r for r in body if r and r[0].isdigit()]
    re_lo, re_hi, im_lo, im_hi = [], [], [], []
    for r in rows:
        _, re_, im_ = (part.strip() for part in r.split("|"))
        a, b = _floats(re_)
        c, d = _floats(im_)
        re_lo.append(a), re_hi.append(b), im_lo.append(c), im_hi.append(d)
    fin = ComplexInterval(Interval(np.array(re_lo), np.array(re_hi)),
                          Interval(np.array(im_lo), np.array(im_hi)))
    return PolyBd(fin, float(attrs["C"]), float(attrs["s"]))


def parse_certificate(text):
    """Inverse of :func:`emit_text`."""
    kw = {"messages": []}
    regions = {}
    for head, body in _sections(text):
        name, attrs = _header(head)
        if name == "verdicts":
            kv = _kv(body)
            kw["existence"] = kv["existence"][0] == "true"
            kw["local"] = kv["local"][0] == "true"
            kw["global_"] = kv["global"][0] == "true"
        elif name == "parameters":
            kv = _kv(body)
            nu = _floats(kv["nu"][0])
            kw["nu"] = Interval(nu[0], nu[1])
            kw["alpha"] = float(kv["alpha"][0])
            kw["E0"] = float(kv["E0"][0])
            kw["epsilon"] = float(kv["epsilon"][0])
            kw["m"] = int(kv["m"][0])
        elif name == "results":
            kv = _kv(body)
            kw["l"] = None if kv["l"][0] == "none" else float(kv["l"][0])
            kw["step_count"] = int(kv["step_count"][0])
            kw["t_hat"] = float(kv["t_hat"][0])
            kw["wall_clock"] = float(kv.get("wall_clock", ["0.0"])[0])
            if "xbar" in kv:
                kw["xbar"] = _floats(kv["xbar"][0])
            if "eigenvalues" in kv:
                v = _floats(kv["eigenvalues"][0])
                kw["eigenvalues"] = v[0::2] + 1j * v[1::2]
            kw["messages"] = kv.get("message", [])
        elif name in ("A", "Ainv", "D"):
            rows = [_pairs(r) for r in body]
            kw[name] = Interval(np.array([r.lo for r in rows]), np.array([r.hi for r in rows]))
        elif name in ("W_T", "W_tilde"):
            kv = _kv(body)
            blocks = tuple(tuple(int(i) for i in b.split(",")) for b in kv["blocks"][0].split())
            regions[name] = dict(m=int(attrs["m"]), blocks=BlockDecomposition(blocks),
                                 center=_floats(kv["center"][0]), radii=_floats(kv["radii"][0]))
        elif name.endswith(".tail"):
            regions[name[:-5]]["tail"] = _parse_polybd(attrs, body)
        elif name == "absorbing":
            kw["absorbing"] = _parse_polybd(attrs, body)
        elif name == "fixed_point":
            kw["fixed_point"] = SelfConsistentBounds(_parse_polybd(attrs, body), int(attrs["m"]),
                                                     alpha=kw.get("alpha", 0.0))
    for name, key in (("W_T", "W_T"), ("W_tilde", "W_tilde")):
        if name in regions:
            kw[key] = BlockRegion(**regions[name])
    return ProofCertificate(**kw)


def read_certificate(path):
    with open(path, encoding="utf-8") as fh:
        return parse_certificate(fh.read())


# ---------------------------------------------------------------------------
# the proof

def _tail_of(body, m):
    return SelfConsistentBounds(body, m).tail()


def region_doubleton(region, change):
    """Doubleton enclosing [A^-1] (centre + ball box) with the wrapping kept in C r0."""
    w = region.box() - region.center
    base = change.Ainv @ Interval.point(region.center)
    x = base.mid()
    Cm = change.Ainv.mid()
    rest = (base - x) + (change.Ainv - Cm) @ w
    n = len(x)
    return Doubleton(x, np.eye(n), rest, Cm, w)


def refine_fixed_point_location(region, change, p, f, steps=200, cfg=None):
    """Integrate the trapping region to shrink the enclosure of the fixed point.

    The result is never wider than ``[A^-1] region`` in a finite coordinate;
    on a step failure that input enclosure is returned unchanged.
    """
    cfg = cfg or IntegratorConfig()
    start = region.canonical_finite(change)
    fallback = SelfConsistentBounds(_combine_real(start, region.tail), p.m, alpha=p.alpha)
    x = region_doubleton(region, change)
    T = region.tail
    try:
        for _ in range(steps):
            r = inclusion_step(x, T, cfg.h, p, f, cfg)
            x, T = r.finite, r.tail
    except (StepFailure, ValidationException):
        return fallback
    out = x.hull()
    if not _meets(out, start):
        return fallback
    return SelfConsistentBounds(_combine_real(out.intersect(start), T), p.m, alpha=p.alpha)


def _meets(a, b):
    return bool(np.all(a.lo <= b.hi) and np.all(b.lo <= a.hi))


def _combine_real(X, tail):
    fin = ComplexInterval.from_real(X)
    m = len(fin)
    return PolyBd(ComplexInterval.concatenate([fin, tail.finite[m:]]), tail.C, tail.s)


def _step_with_halving(x, T, h, p, f, icfg, halvings):
    err = None
    for level in range(halvings + 1):
        hh = h / 2 ** level
        try:
            return inclusion_step(x, T, hh, p, f, icfg), hh
        except (StepFailure, ValidationException) as exc:
            err = exc
    raise StepFailure(f"step failed after halving: {err}")


def contained(region, change, x, T):
    """Finite part in block coordinates inside the balls and tail inside the region tail."""
    return region.contains_set(x.transformed(change.A), T)


def prove_global(cfg, log=None, raise_inconclusive=False):
    """Run the whole proof and return a certificate.

    With ``raise_inconclusive`` an exhausted step budget raises
    GlobalInconclusive carrying the partial certificate.
    """
    say = log or (lambda msg: None)
    t0 = time.perf_counter()
    p = cfg.params()
    f = cfg.forcing_set()
    acfg = AbsorbingConfig.from_problem(p, f, M=cfg.M)
    E0 = acfg.E0 if cfg.E0 is None else cfg.E0
    cert = ProofCertificate(False, False, False, p.nu, p.alpha, E0, cfg.epsilon, p.m)
    try:
        local = certify_local(p, f, M=cfg.M, s=float(cfg.s))
    except (CertificationFailure, IllConditionedSpectrum) as exc:
        cert.messages.append(f"local stage failed: {exc}")
        cert.wall_clock = time.perf_counter() - t0
        return cert
    cert.existence = True
    cert.xbar = local.xbar
    cert.A, cert.Ainv, cert.D = local.change.A, local.change.Ainv, local.D
    cert.eigenvalues = local.change.eigenvalues
    cert.W_T = local.W_T
    cert.W_tilde = local.enlarged
    cert.l = float(local.l_enlarged.hi)
    cert.local = cert.l < 0
    say(f"fixed point found, l = {cert.l:.6g}")
    if not cert.local:
        cert.messages.append("log-norm bound is not negative; global stage skipped")
        cert.wall_clock = time.perf_counter() - t0
        return cert
    icfg = IntegratorConfig(order=cfg.taylor_order, h=cfg.step_size, s=float(cfg.s))
    variants = [(cfg.absorbing_intersect, cfg.absorbing_refinements)]
    if cfg.tighten_on_failure:
        variants += [(True, n) for n in TIGHT_LADDER if n > cfg.absorbing_refinements]
    for intersect, extra in variants:
        acfg_v = replace(acfg, intersect_step_one=intersect, extra_refinements=extra)
        try:
            V = build_absorbing_set(acfg_v, p, f)
            cert.absorbing = V.body
            steps, t = _integrate_until_contained(V, local, p, f, icfg, cfg, say)
            break
        except (StepFailure, GlobalInconclusive, ConstructionFailure, DomainError,
                ValidationException) as exc:
            steps, t = getattr(exc, "progress", (0, 0.0))
            cert.messages.append(f"global stage inconclusive (absorbing set variant "
                                 f"intersect={str(intersect).lower()}, refinements={extra}): {exc}")
            last = exc
    else:
        cert.step_count, cert.t_hat = steps, t
        cert.wall_clock = time.perf_counter() - t0
        if raise_inconclusive:
            raise GlobalInconclusive(str(last), cert) from last
        return cert
    cert.global_ = True
    cert.step_count, cert.t_hat = steps, t
    say(f"contained after {steps} steps, t = {t:.6g}")
    if cfg.refine_steps > 0:
        cert.fixed_point = refine_fixed_point_location(local.enlarged, local.change, p, f,
                                                       cfg.refine_steps, icfg)
    cert.wall_clock = time.perf_counter() - t0
    return cert


def _integrate_until_contained(V, local, p, f, icfg, cfg, say):
    x = Doubleton.from_box(V.finite.to_real())
    T = V.tail()
    target = local.enlarged
    t = 0.0
    steps = 0
    try:
        while not contained(target, local.change, x, T):
            if steps >= cfg.max_steps:
                raise GlobalInconclusive("step budget exhausted")
            r, hh = _step_with_halving(x, T, icfg.h, p, f, icfg, cfg.halvings)
            x, T = r.finite, r.tail
            steps += 1
            t += hh
            if steps % 100 == 0:
                say(f"step {steps}, t = {t:.4g}")
    except (StepFailure, GlobalInconclusive) as exc:
        exc.progress = (steps, t)
        raise
    return steps, t


def report(paths):
    """Table rows (header first) for a list of certificate files."""
    rows = [list(SUMMARY_COLUMNS)]
    for path in sorted(paths):
        rows.append(read_certificate(path).summary_row())
    return rows


def format_table(rows):
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "\n".join(" | ".join(c.ljust(w) for c, w in zip(r, widths)) for r in rows)
