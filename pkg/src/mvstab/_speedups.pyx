# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled Galerkin kernels.

Same contract as ``mvstab._purekernels``: exact truncated products of
centered coefficient series and the fused right-hand side of the
truncated dynamics.  The product is evaluated as the direct truncated
Cauchy convolution (identical values to the padded-FFT reference up to
rounding), which keeps the whole RHS inside C loops and BLAS calls.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport M_PI, sqrt
from scipy.linalg.cython_blas cimport dgemv

cnp.import_array()

BACKEND = "compiled"


cdef object _c128(object arr):
    a = np.ascontiguousarray(arr, dtype=np.complex128)
    if not a.flags.writeable:
        a = a.copy()
    return a


cdef object _f64(object arr):
    a = np.ascontiguousarray(arr, dtype=np.float64)
    if not a.flags.writeable:
        a = a.copy()
    return a


cdef void _conv_truncated(double complex[::1] f, double complex[::1] g,
                          double complex[::1] out, int L) noexcept nogil:
    """out_k = sum_{k1+k2=k, |k1|,|k2|<=L} f_k1 g_k2 on centered arrays."""
    cdef int n = 2 * L + 1
    cdef int i, j, lo, hi
    cdef double complex acc
    for i in range(n):
        lo = i - L
        if lo < 0:
            lo = 0
        hi = i + L
        if hi > n - 1:
            hi = n - 1
        acc = 0
        for j in range(lo, hi + 1):
            acc += f[j] * g[i - j + L]
        out[i] = acc


def truncated_product(cf, cg):
    """Exact truncated coefficients of the product of two centered series."""
    cdef cnp.ndarray f = _c128(cf)
    cdef cnp.ndarray g = _c128(cg)
    cdef int L = (f.shape[0] - 1) // 2
    cdef cnp.ndarray out = np.empty(f.shape[0], dtype=np.complex128)
    _conv_truncated(f, g, out, L)
    return out


cdef void _coords_to_coeffs(double[::1] a, double complex[::1] c, int L) noexcept nogil:
    cdef int k
    cdef double s, q, inv = 1.0 / (2.0 * sqrt(M_PI))
    c[L] = 0
    for k in range(1, L + 1):
        s = a[2 * (k - 1)]
        q = a[2 * (k - 1) + 1]
        c[L + k] = (q - 1j * s) * inv
        c[L - k] = (q + 1j * s) * inv


cdef void _divergence_to_coords(double complex[::1] g, double[::1] out,
                                int L) noexcept nogil:
    """Real coordinates of d/dx applied to the (conj-symmetric) series g."""
    cdef int k
    cdef double fac = 2.0 * sqrt(M_PI)
    for k in range(1, L + 1):
        # coefficient of the derivative is i*k*g_k
        out[2 * (k - 1)] = -fac * k * g[L + k].real
        out[2 * (k - 1) + 1] = -fac * k * g[L + k].imag


def nonlinear_coeffs(a, wmult, int modes):
    """Quadratic interaction term in real coordinates (see reference backend)."""
    cdef double[::1] av = _f64(a)
    cdef double complex[::1] wv = _c128(wmult)
    cdef int n = 2 * modes + 1
    cdef cnp.ndarray out = np.empty(2 * modes, dtype=np.float64)
    cdef double complex[::1] cy = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] d = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] g = np.empty(n, dtype=np.complex128)
    cdef double[::1] ov = out
    cdef int i
    _coords_to_coeffs(av, cy, modes)
    for i in range(n):
        d[i] = wv[i] * cy[i]
    _conv_truncated(cy, d, g, modes)
    _divergence_to_coords(g, ov, modes)
    return out


cdef class GalerkinRhs:
    """da/dt = L a - sum_j u_j N_j a + B u + F(a), u = -gain a (or 0)."""

    cdef double[:, ::1] lmat
    cdef double[:, :, ::1] nstack
    cdef double[:, ::1] bmat
    cdef double[:, ::1] gain
    cdef double complex[::1] wmult
    cdef int L, dim, m
    cdef bint controlled
    cdef double complex[::1] cy, dvec, gvec
    cdef double[::1] ubuf, fbuf

    def __init__(self, lmat, nstack, bmat, gain, wmult, modes):
        self.L = modes
        self.dim = 2 * modes
        self.lmat = _f64(lmat)
        self.wmult = _c128(wmult)
        self.controlled = gain is not None
        if self.controlled:
            self.nstack = _f64(nstack)
            self.bmat = _f64(bmat)
            self.gain = _f64(gain)
            self.m = self.gain.shape[0]
        else:
            self.m = 0
        cdef int n = 2 * modes + 1
        self.cy = np.empty(n, dtype=np.complex128)
        self.dvec = np.empty(n, dtype=np.complex128)
        self.gvec = np.empty(n, dtype=np.complex128)
        self.ubuf = np.empty(max(self.m, 1), dtype=np.float64)
        self.fbuf = np.empty(self.dim, dtype=np.float64)

    def controls(self, a):
        cdef double[::1] av = _f64(a)
        out = np.zeros(self.m, dtype=np.float64)
        cdef double[::1] ov = out
        if self.controlled and self.m > 0:
            self._gain_mv(av, ov)
        return out

    cdef void _gain_mv(self, double[::1] a, double[::1] u) noexcept nogil:
        # u = -gain @ a for the C-contiguous (m, dim) gain
        cdef int nc = self.dim, nr = self.m, inc = 1
        cdef double alpha = -1.0, beta = 0.0
        cdef char trans = b'T'
        dgemv(&trans, &nc, &nr, &alpha, &self.gain[0, 0], &nc,
              &a[0], &inc, &beta, &u[0], &inc)

    cdef void _eval(self, double[::1] a, double[::1] da) noexcept nogil:
        cdef int nc = self.dim, nr = self.dim, inc = 1, i, j
        cdef double one = 1.0, zero = 0.0, coef
        cdef int n = 2 * self.L + 1
        cdef char trans = b'T'
        # linear drift-diffusion part
        dgemv(&trans, &nc, &nr, &one, &self.lmat[0, 0], &nc,
              &a[0], &inc, &zero, &da[0], &inc)
        # quadratic interaction
        _coords_to_coeffs(a, self.cy, self.L)
        for i in range(n):
            self.dvec[i] = self.wmult[i] * self.cy[i]
        _conv_truncated(self.cy, self.dvec, self.gvec, self.L)
        _divergence_to_coords(self.gvec, self.fbuf, self.L)
        for i in range(self.dim):
            da[i] += self.fbuf[i]
        if not self.controlled or self.m == 0:
            return
        self._gain_mv(a, self.ubuf)
        # actuation B u
        cdef int mm = self.m
        dgemv(&trans, &mm, &nr, &one, &self.bmat[0, 0], &mm,
              &self.ubuf[0], &inc, &one, &da[0], &inc)
        # bilinear control transport -sum_j u_j N_j a
        for j in range(self.m):
            coef = -self.ubuf[j]
            dgemv(&trans, &nc, &nr, &coef, &self.nstack[j, 0, 0], &nc,
                  &a[0], &inc, &one, &da[0], &inc)

    def __call__(self, double t, a):
        cdef double[::1] av = _f64(a)
        out = np.empty(self.dim, dtype=np.float64)
        cdef double[::1] ov = out
        self._eval(av, ov)
        return out


def make_rhs(lmat, nstack, bmat, gain, wmult, modes):
    return GalerkinRhs(lmat, nstack, bmat, gain, wmult, modes)
