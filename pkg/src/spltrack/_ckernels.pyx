# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_kernels_py``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def guided_weights(losses, cs, rhos, double lam, double xi):
    cdef const double[::1] l = np.ascontiguousarray(losses, dtype=np.float64)
    cdef const double[::1] c = np.ascontiguousarray(cs, dtype=np.float64)
    cdef const double[::1] r = np.ascontiguousarray(rhos, dtype=np.float64)
    cdef Py_ssize_t n = l.shape[0], k
    if c.shape[0] != n or r.shape[0] != n:
        raise ValueError("length mismatch")
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef double eff
    for k in range(n):
        eff = l[k] + xi * c[k]
        if eff >= lam:
            o[k] = 0.0
        else:
            o[k] = r[k] * (1.0 - eff / lam)
    return out


def two_peaks(values, long radius):
    cdef const double[:, ::1] g = np.ascontiguousarray(values, dtype=np.float64)
    cdef Py_ssize_t h = g.shape[0], w = g.shape[1], i, j
    cdef Py_ssize_t r1 = 0, c1 = 0, r2 = -1, c2 = -1
    cdef double g1 = g[0, 0], g2 = 0.0, x
    cdef long di, dj
    cdef bint found = False
    for i in range(h):
        for j in range(w):
            if g[i, j] > g1:
                g1 = g[i, j]
                r1 = i
                c1 = j
    for i in range(h):
        di = i - r1 if i >= r1 else r1 - i
        if h - di < di:
            di = h - di
        for j in range(w):
            dj = j - c1 if j >= c1 else c1 - j
            if w - dj < dj:
                dj = w - dj
            if di <= radius and dj <= radius:
                continue
            x = g[i, j]
            if not found or x > g2:
                g2 = x
                r2 = i
                c2 = j
                found = True
    return g1, r1, c1, g2, r2, c2


cdef double _bisect_coordinate(double a, double b, int iters) nogil:
    cdef double lo = 0.0, hi = 1.0, mid
    cdef int it
    if b >= 0.0:
        return 0.0
    if 2.0 * a + b <= 0.0:
        return 1.0
    for it in range(iters):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if 2.0 * a * mid + b > 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def coordinate_descent(quad, lin, int max_sweeps=100, double tol=1e-14, int iters=200):
    cdef const double[::1] a = np.ascontiguousarray(quad, dtype=np.float64)
    cdef const double[::1] b = np.ascontiguousarray(lin, dtype=np.float64)
    cdef Py_ssize_t t = a.shape[0], k
    v = np.zeros(t, dtype=np.float64)
    cdef double[::1] vv = v
    cdef double delta, new, d
    cdef int sweeps = 0, s
    for s in range(1, max_sweeps + 1):
        sweeps = s
        delta = 0.0
        for k in range(t):
            new = _bisect_coordinate(a[k], b[k], iters)
            d = new - vv[k]
            if d < 0:
                d = -d
            if d > delta:
                delta = d
            vv[k] = new
        if delta <= tol:
            break
    return v, sweeps


def spectral_losses(filt, xhat, yhat):
    cdef const double complex[:, ::1] f = np.ascontiguousarray(filt, dtype=np.complex128)
    cdef const double complex[:, :, ::1] x = np.ascontiguousarray(xhat, dtype=np.complex128)
    cdef const double complex[:, :, ::1] y = np.ascontiguousarray(yhat, dtype=np.complex128)
    cdef Py_ssize_t n = x.shape[0], h = x.shape[1], w = x.shape[2], k, i, j
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef double acc, re, im, fr, fi, xr, xi_
    cdef double scale = <double>(h * w) * <double>(h * w)
    for k in range(n):
        acc = 0.0
        for i in range(h):
            for j in range(w):
                fr = f[i, j].real
                fi = -f[i, j].imag
                xr = x[k, i, j].real
                xi_ = x[k, i, j].imag
                re = fr * xr - fi * xi_ - y[k, i, j].real
                im = fr * xi_ + fi * xr - y[k, i, j].imag
                acc += re * re + im * im
        o[k] = acc / scale
    return out


def weighted_spectra(v, xhat, yhat):
    cdef const double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef const double complex[:, :, ::1] x = np.ascontiguousarray(xhat, dtype=np.complex128)
    cdef const double complex[:, :, ::1] y = np.ascontiguousarray(yhat, dtype=np.complex128)
    cdef Py_ssize_t n = x.shape[0], h = x.shape[1], w = x.shape[2], k, i, j
    num = np.zeros((h, w), dtype=np.complex128)
    den = np.zeros((h, w), dtype=np.float64)
    cdef double complex[:, ::1] nm = num
    cdef double[:, ::1] dn = den
    cdef double wk, xr, xi_, yr, yi
    for k in range(n):
        wk = vv[k]
        if wk == 0.0:
            continue
        for i in range(h):
            for j in range(w):
                xr = x[k, i, j].real
                xi_ = x[k, i, j].imag
                yr = y[k, i, j].real
                yi = -y[k, i, j].imag
                nm[i, j] = nm[i, j] + wk * ((yr * xr - yi * xi_) + 1j * (yr * xi_ + yi * xr))
                dn[i, j] += wk * (xr * xr + xi_ * xi_)
    return num, den
