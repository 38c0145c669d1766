"""Pure numpy implementations of the hot interval kernels.

Every kernel works on raw endpoint arrays so the compiled core in
``_core.pyx`` can be swapped in without touching callers.  Results are
rounded outward by stepping one ulp after each hardware operation; sums use
an a-priori error bound instead of per-addition stepping.
"""
from functools import lru_cache

import numpy as np

_NEG_INF = -np.inf
_POS_INF = np.inf
_HALF_ULP = 2.0 ** -53


def down(x):
    return np.nextafter(x, _NEG_INF)


def up(x):
    return np.nextafter(x, _POS_INF)


def imul(alo, ahi, blo, bhi):
    p1 = alo * blo
    p2 = alo * bhi
    p3 = ahi * blo
    p4 = ahi * bhi
    lo = np.minimum(np.minimum(p1, p2), np.minimum(p3, p4))
    hi = np.maximum(np.maximum(p1, p2), np.maximum(p3, p4))
    return down(lo), up(hi)


def isum(lo, hi, axis=-1):
    """Rigorous sum along ``axis`` using the gamma_n error bound."""
    n = lo.shape[axis]
    if n == 0:
        shape = list(lo.shape)
        del shape[axis]
        z = np.zeros(shape)
        return z, z.copy()
    slo = np.sum(lo, axis=axis)
    shi = np.sum(hi, axis=axis)
    if n == 1:
        return slo, shi
    # |fl(sum) - sum| <= gamma_{n-1} * sum|x_i|; the factor below dominates it
    # together with the rounding of the bound itself.
    g = n * _HALF_ULP * (1.0 + 1e-6)
    elo = up(np.sum(np.abs(lo), axis=axis) * g)
    ehi = up(np.sum(np.abs(hi), axis=axis) * g)
    return down(slo - elo), up(shi + ehi)


def imatmul(alo, ahi, blo, bhi):
    """Interval matrix product of (n, k) and (k, p) endpoint arrays."""
    a_lo = alo[:, :, None]
    a_hi = ahi[:, :, None]
    b_lo = blo[None, :, :]
    b_hi = bhi[None, :, :]
    plo, phi = imul(a_lo, a_hi, b_lo, b_hi)
    return isum(plo, phi, axis=1)


@lru_cache(maxsize=256)
def _conv_index(ma, mb, kmax):
    # j runs over -ma..ma; partner index k - j must lie in -mb..mb
    j = np.arange(-ma, ma + 1)
    k = np.arange(1, kmax + 1)
    partner = k[:, None] - j[None, :]
    valid = np.abs(partner) <= mb
    idx = np.where(valid, partner + mb, 0)
    return idx, valid


def _full(rlo, rhi, ilo, ihi, a0lo, a0hi):
    """Expand modes 1..M to -M..M using a_{-k} = conj(a_k)."""
    a0lo = np.asarray(a0lo, dtype=float)[..., None]
    a0hi = np.asarray(a0hi, dtype=float)[..., None]
    a0lo = np.broadcast_to(a0lo, rlo.shape[:-1] + (1,))
    a0hi = np.broadcast_to(a0hi, rlo.shape[:-1] + (1,))
    zero = np.zeros(rlo.shape[:-1] + (1,))
    flo = np.concatenate([rlo[..., ::-1], a0lo, rlo], axis=-1)
    fhi = np.concatenate([rhi[..., ::-1], a0hi, rhi], axis=-1)
    gilo = np.concatenate([-ihi[..., ::-1], zero, ilo], axis=-1)
    gihi = np.concatenate([-ilo[..., ::-1], zero, ihi], axis=-1)
    return flo, fhi, gilo, gihi


def cconv(a, a0, b, b0, kmax):
    """Enclose c_k = sum_j a_j b_{k-j} for k = 1..kmax.

    ``a`` and ``b`` are tuples (re_lo, re_hi, im_lo, im_hi) holding modes
    1..M in the last axis (leading axes broadcast as a batch).  ``a0`` and
    ``b0`` are (lo, hi) pairs for the zero modes.  Indices outside the stored
    range count as exact zeros.
    """
    ma = a[0].shape[-1]
    mb = b[0].shape[-1]
    arl, arh, ail, aih = _full(*a, *a0)
    brl, brh, bil, bih = _full(*b, *b0)
    idx, valid = _conv_index(ma, mb, kmax)
    # a_j has shape (..., 1, La); b_{k-j} has shape (..., K, La)
    arl = arl[..., None, :]
    arh = arh[..., None, :]
    ail = ail[..., None, :]
    aih = aih[..., None, :]
    brl = brl[..., idx]
    brh = brh[..., idx]
    bil = bil[..., idx]
    bih = bih[..., idx]
    p1l, p1h = imul(arl, arh, brl, brh)
    p2l, p2h = imul(ail, aih, bil, bih)
    p3l, p3h = imul(arl, arh, bil, bih)
    p4l, p4h = imul(ail, aih, brl, brh)
    rel = np.where(valid, down(p1l - p2h), 0.0)
    reh = np.where(valid, up(p1h - p2l), 0.0)
    iml = np.where(valid, down(p3l + p4l), 0.0)
    imh = np.where(valid, up(p3h + p4h), 0.0)
    crl, crh = isum(rel, reh, axis=-1)
    cil, cih = isum(iml, imh, axis=-1)
    return crl, crh, cil, cih
