# cython: language_level=3, boundscheck=False, cdivision=True
"""Compiled interval kernels with the same call signatures as ``_fallback``.

Every product and every partial sum is pushed outward by at least one ulp,
so no a-priori summation bound is needed.
"""
import numpy as np
from libc.math cimport fabs, fmin, fmax

# |x| * 2^-52 is at least one ulp of x and is computed exactly; the smallest
# subnormal covers results that underflow
cdef double _EPS = 2.220446049250313e-16
cdef double _TINY = 5e-324


cdef inline double _dn(double x) noexcept nogil:
    return x - (fabs(x) * _EPS + _TINY)


cdef inline double _up(double x) noexcept nogil:
    return x + (fabs(x) * _EPS + _TINY)


cdef inline void _mul(double al, double ah, double bl, double bh,
                      double* lo, double* hi) noexcept nogil:
    cdef double p1 = al * bl, p2 = al * bh, p3 = ah * bl, p4 = ah * bh
    lo[0] = _dn(fmin(fmin(p1, p2), fmin(p3, p4)))
    hi[0] = _up(fmax(fmax(p1, p2), fmax(p3, p4)))


def imatmul(alo, ahi, blo, bhi):
    """Interval matrix product of (n, k) and (k, p) endpoint arrays."""
    cdef double[:, ::1] Al = np.ascontiguousarray(alo, dtype=np.float64)
    cdef double[:, ::1] Ah = np.ascontiguousarray(ahi, dtype=np.float64)
    cdef double[:, ::1] Bl = np.ascontiguousarray(blo, dtype=np.float64)
    cdef double[:, ::1] Bh = np.ascontiguousarray(bhi, dtype=np.float64)
    cdef Py_ssize_t n = Al.shape[0], kk = Al.shape[1], p = Bl.shape[1]
    if Bl.shape[0] != kk:
        raise ValueError("inner dimensions differ")
    out_lo = np.zeros((n, p))
    out_hi = np.zeros((n, p))
    cdef double[:, ::1] Ol = out_lo
    cdef double[:, ::1] Oh = out_hi
    cdef Py_ssize_t i, j, t
    cdef double slo, shi, lo, hi
    with nogil:
        for i in range(n):
            for j in range(p):
                slo = 0.0
                shi = 0.0
                for t in range(kk):
                    _mul(Al[i, t], Ah[i, t], Bl[t, j], Bh[t, j], &lo, &hi)
                    if t == 0:
                        slo = lo
                        shi = hi
                    else:
                        slo = _dn(slo + lo)
                        shi = _up(shi + hi)
                Ol[i, j] = slo
                Oh[i, j] = shi
    return out_lo, out_hi


cdef inline void _mode(const double* rl, const double* rh, const double* il, const double* ih,
                       double a0l, double a0h, Py_ssize_t j,
                       double* xrl, double* xrh, double* xil, double* xih) noexcept nogil:
    # a_{-j} = conj(a_j); a_0 is real; the pointers address modes 1..M of one row
    if j > 0:
        xrl[0] = rl[j - 1]
        xrh[0] = rh[j - 1]
        xil[0] = il[j - 1]
        xih[0] = ih[j - 1]
    elif j < 0:
        xrl[0] = rl[-j - 1]
        xrh[0] = rh[-j - 1]
        xil[0] = -ih[-j - 1]
        xih[0] = -il[-j - 1]
    else:
        xrl[0] = a0l
        xrh[0] = a0h
        xil[0] = 0.0
        xih[0] = 0.0


def _flat(x, shape, width):
    # broadcast views are read-only, so copy
    return np.array(np.broadcast_to(np.asarray(x, dtype=np.float64), shape + (width,)),
                    order="C").reshape(-1, width)


def _flat0(x, shape):
    return np.array(np.broadcast_to(np.asarray(x, dtype=np.float64), shape), order="C").reshape(-1)


def cconv(a, a0, b, b0, Py_ssize_t kmax):
    """Enclose c_k = sum_j a_j b_{k-j} for k = 1..kmax (see ``_fallback.cconv``)."""
    cdef Py_ssize_t ma = np.shape(a[0])[-1], mb = np.shape(b[0])[-1]
    shape = np.broadcast_shapes(np.shape(a[0])[:-1], np.shape(b[0])[:-1],
                                np.shape(a0[0]), np.shape(a0[1]),
                                np.shape(b0[0]), np.shape(b0[1]))
    cdef double[:, ::1] arl = _flat(a[0], shape, ma)
    cdef double[:, ::1] arh = _flat(a[1], shape, ma)
    cdef double[:, ::1] ail = _flat(a[2], shape, ma)
    cdef double[:, ::1] aih = _flat(a[3], shape, ma)
    cdef double[:, ::1] brl = _flat(b[0], shape, mb)
    cdef double[:, ::1] brh = _flat(b[1], shape, mb)
    cdef double[:, ::1] bil = _flat(b[2], shape, mb)
    cdef double[:, ::1] bih = _flat(b[3], shape, mb)
    cdef double[::1] a0l = _flat0(a0[0], shape)
    cdef double[::1] a0h = _flat0(a0[1], shape)
    cdef double[::1] b0l = _flat0(b0[0], shape)
    cdef double[::1] b0h = _flat0(b0[1], shape)
    cdef Py_ssize_t nb = a0l.shape[0]
    cdef Py_ssize_t K = kmax if kmax > 0 else 0
    out = [np.zeros((nb, K)) for _ in range(4)]
    cdef double[:, ::1] crl = out[0]
    cdef double[:, ::1] crh = out[1]
    cdef double[:, ::1] cil = out[2]
    cdef double[:, ::1] cih = out[3]
    cdef Py_ssize_t bb, k, j, jlo, jhi
    cdef double xrl, xrh, xil, xih, yrl, yrh, yil, yih
    cdef double p1l, p1h, p2l, p2h, p3l, p3h, p4l, p4h
    cdef double srl, srh, sil, sih
    with nogil:
        for bb in range(nb):
            for k in range(1, K + 1):
                srl = 0.0
                srh = 0.0
                sil = 0.0
                sih = 0.0
                jlo = k - mb if k - mb > -ma else -ma
                jhi = k + mb if k + mb < ma else ma
                for j in range(jlo, jhi + 1):
                    _mode(&arl[bb, 0], &arh[bb, 0], &ail[bb, 0], &aih[bb, 0], a0l[bb], a0h[bb],
                          j, &xrl, &xrh, &xil, &xih)
                    _mode(&brl[bb, 0], &brh[bb, 0], &bil[bb, 0], &bih[bb, 0], b0l[bb], b0h[bb],
                          k - j, &yrl, &yrh, &yil, &yih)
                    _mul(xrl, xrh, yrl, yrh, &p1l, &p1h)
                    _mul(xil, xih, yil, yih, &p2l, &p2h)
                    _mul(xrl, xrh, yil, yih, &p3l, &p3h)
                    _mul(xil, xih, yrl, yrh, &p4l, &p4h)
                    srl = _dn(srl + _dn(p1l - p2h))
                    srh = _up(srh + _up(p1h - p2l))
                    sil = _dn(sil + _dn(p3l + p4l))
                    sih = _up(sih + _up(p3h + p4h))
                crl[bb, k - 1] = srl
                crh[bb, k - 1] = srh
                cil[bb, k - 1] = sil
                cih[bb, k - 1] = sih
    return tuple(o.reshape(shape + (K,)) for o in out)
