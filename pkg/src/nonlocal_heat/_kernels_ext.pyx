# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled exponential-moment kernels (same contract as ``_kernels_py``)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, exp as rexp, sqrt

cdef extern from "complex.h" nogil:
    double complex cexp(double complex)
    double cabs(double complex)
    double creal(double complex)

cnp.import_array()

DEF MONO_SERIES_TERMS = 40
DEF TRI_SERIES_TERMS = 32
cdef double MONO_SERIES_RADIUS = 4.0
cdef double TRI_SERIES_RADIUS = 1.5
DEF MAXORD = 16

cdef double[80] FACT
cdef int _i
FACT[0] = 1.0
for _i in range(1, 80):
    FACT[_i] = FACT[_i - 1] * _i


cdef inline double _max3(double a, double b, double c) nogil:
    cdef double m = a
    if b > m:
        m = b
    if c > m:
        m = c
    return m


cdef double[MAXORD][MONO_SERIES_TERMS] MONO_INV
cdef int _k, _l
for _k in range(MAXORD):
    for _l in range(MONO_SERIES_TERMS):
        MONO_INV[_k][_l] = 1.0 / (FACT[_l] * (_k + _l + 1.0))


cdef void _mono_node(double complex c, double h, int kmax, double complex* out, double* shift) nogil:
    cdef double s = creal(c) * h
    if s < 0.0:
        s = 0.0
    shift[0] = s
    cdef double complex z = c * h
    cdef double complex zp[MONO_SERIES_TERMS]
    cdef double complex acc, e_end, prev, inv_c
    cdef double scale, hk
    cdef int k, l
    if z == 0:
        hk = h
        for k in range(kmax + 1):
            out[k] = hk / (k + 1.0)
            hk = hk * h
        return
    if cabs(z) <= MONO_SERIES_RADIUS:
        scale = rexp(-s)
        zp[0] = 1.0
        for l in range(1, MONO_SERIES_TERMS):
            zp[l] = zp[l - 1] * z
        hk = scale * h
        for k in range(kmax + 1):
            acc = 0.0
            for l in range(MONO_SERIES_TERMS):
                acc = acc + zp[l] * MONO_INV[k][l]
            out[k] = hk * acc
            hk = hk * h
    else:
        inv_c = 1.0 / c
        e_end = cexp(z - s)
        prev = (e_end - rexp(-s)) * inv_c
        out[0] = prev
        hk = 1.0
        for k in range(1, kmax + 1):
            hk = hk * h
            prev = (hk * e_end - k * prev) * inv_c
            out[k] = prev


def mono(c, double h, int kmax):
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] cc = np.ascontiguousarray(np.asarray(c, dtype=complex).ravel())
    cdef Py_ssize_t n = cc.shape[0], i
    if kmax + 1 > MAXORD:
        raise ValueError("polynomial degree too high for the compiled kernel")
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] out = np.empty((n, kmax + 1), dtype=complex)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] shift = np.empty(n)
    cdef double complex* op = <double complex*> out.data
    cdef double* sp = <double*> shift.data
    cdef double complex* cp = <double complex*> cc.data
    with nogil:
        for i in range(n):
            _mono_node(cp[i], h, kmax, op + i * (kmax + 1), sp + i)
    return out, shift


cdef int _tri_node(double complex al, double complex be, double h, int jmax, int kmax, bint upper,
                   double complex* out, double* shift) nogil:
    cdef double complex sg = al + be
    cdef double s
    if upper:
        s = _max3(0.0, creal(be) * h, creal(sg) * h)
    else:
        s = _max3(0.0, creal(al) * h, creal(sg) * h)
    shift[0] = s
    cdef double ra = cabs(al) * h, rb = cabs(be) * h
    cdef double rmax = ra if ra > rb else rb
    cdef double rmin = rb if ra > rb else ra
    cdef int j, k, n, m, i, nk = kmax + 1
    cdef double complex a, b, acc, apow[TRI_SERIES_TERMS], bpow[TRI_SERIES_TERMS]
    cdef double complex f_sig[MAXORD], f_al[MAXORD], coefs[MAXORD], inv_pow[MAXORD]
    cdef double complex e_edge
    cdef double hpow[MAXORD]
    cdef double s_sig, s_al, scale, core, kf
    cdef double complex diag, edge, p_end, r_sig
    if rmax <= TRI_SERIES_RADIUS:
        a = al * h
        b = be * h
        apow[0] = 1.0
        bpow[0] = 1.0
        for n in range(1, TRI_SERIES_TERMS):
            apow[n] = apow[n - 1] * a / n
            bpow[n] = bpow[n - 1] * b / n
        scale = rexp(-s)
        for j in range(jmax + 1):
            for k in range(kmax + 1):
                acc = 0.0
                for n in range(TRI_SERIES_TERMS):
                    for m in range(TRI_SERIES_TERMS - n):
                        if upper:
                            core = (1.0 / (k + m + 1.0)) * (1.0 / (j + n + 1.0) - 1.0 / (j + n + k + m + 2.0))
                        else:
                            core = 1.0 / ((k + m + 1.0) * (j + k + n + m + 2.0))
                        acc = acc + apow[n] * bpow[m] * core
                out[j * nk + k] = scale * (h ** (j + k + 2)) * acc
        return 0
    if rmin <= TRI_SERIES_RADIUS:
        return 1
    _mono_node(sg, h, jmax + kmax, f_sig, &s_sig)
    _mono_node(al, h, jmax, f_al, &s_al)
    r_sig = rexp(s_sig - s)
    inv_pow[0] = 1.0 / be
    for i in range(1, kmax + 1):
        inv_pow[i] = inv_pow[i - 1] * inv_pow[0]
    hpow[0] = 1.0
    for i in range(1, kmax + 1):
        hpow[i] = hpow[i - 1] * h
    if upper:
        e_edge = cexp(be * h + s_al - s)
    else:
        e_edge = rexp(s_al - s)
    for k in range(kmax + 1):
        kf = FACT[k]
        for i in range(k + 1):
            coefs[i] = ((-1.0 if i % 2 else 1.0) * kf / FACT[k - i]) * inv_pow[i]
        if upper:
            p_end = 0.0
            for i in range(k + 1):
                p_end = p_end + coefs[i] * hpow[k - i]
            p_end = p_end * e_edge
        else:
            p_end = coefs[k] * e_edge
        for j in range(jmax + 1):
            diag = 0.0
            for i in range(k + 1):
                diag = diag + coefs[i] * f_sig[j + k - i]
            diag = diag * r_sig
            edge = p_end * f_al[j]
            out[j * nk + k] = edge - diag if upper else diag - edge
    return 0


def tri(alpha, beta, double h, int jmax, int kmax, bint upper):
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] aa = np.ascontiguousarray(np.asarray(alpha, dtype=complex).ravel())
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] bb = np.ascontiguousarray(
        np.broadcast_to(np.asarray(beta, dtype=complex).ravel(), (aa.shape[0],)))
    cdef Py_ssize_t n = aa.shape[0], i
    if jmax + kmax + 1 > MAXORD:
        raise ValueError("polynomial degree too high for the compiled kernel")
    cdef cnp.ndarray[cnp.complex128_t, ndim=3] out = np.empty((n, jmax + 1, kmax + 1), dtype=complex)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] shift = np.empty(n)
    cdef double complex* op = <double complex*> out.data
    cdef double* sp = <double*> shift.data
    cdef double complex* ap = <double complex*> aa.data
    cdef double complex* bp = <double complex*> bb.data
    cdef int stride = (jmax + 1) * (kmax + 1)
    cdef int bad = 0
    with nogil:
        for i in range(n):
            if _tri_node(ap[i], bp[i], h, jmax, kmax, upper, op + i * stride, sp + i):
                bad = 1
    if bad:
        raise ValueError("tri kernel needs |alpha| and |beta| on the same side of the series radius")
    return out, shift
