"""NumPy reference implementation of the hot Galerkin kernels.

This is the fallback backend used when the compiled extension is
unavailable (or when MVSTAB_PURE_PYTHON is set).  Products are formed on
a zero-padded grid (3/2-rule) so the retained coefficients are the exact
truncated Cauchy product of the inputs.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

_SQRT_PI = np.sqrt(np.pi)


def _pad_size(modes: int) -> int:
    """Smallest power of two that de-aliases a quadratic nonlinearity."""
    n = 1
    while n < 3 * modes + 2:
        n *= 2
    return n


def truncated_product(cf: np.ndarray, cg: np.ndarray) -> np.ndarray:
    """Exact truncated coefficients of the product of two centered series."""
    cf = np.asarray(cf, dtype=complex)
    cg = np.asarray(cg, dtype=complex)
    modes = (cf.size - 1) // 2
    n = _pad_size(modes)
    sf = np.zeros(n, dtype=complex)
    sg = np.zeros(n, dtype=complex)
    sf[: modes + 1] = cf[modes:]
    sf[n - modes:] = cf[:modes]
    sg[: modes + 1] = cg[modes:]
    sg[n - modes:] = cg[:modes]
    vals = np.fft.ifft(sf) * np.fft.ifft(sg) * n
    spec = np.fft.fft(vals)
    out = np.empty(2 * modes + 1, dtype=complex)
    out[modes:] = spec[: modes + 1]
    out[:modes] = spec[n - modes:]
    return out


def _coords_to_coeffs(a: np.ndarray, modes: int) -> np.ndarray:
    c = np.zeros(2 * modes + 1, dtype=complex)
    pos = (a[1::2] - 1j * a[0::2]) / (2.0 * _SQRT_PI)
    c[modes + 1:] = pos
    c[:modes] = np.conj(pos[::-1])
    return c


def _coeffs_to_coords(c: np.ndarray, modes: int) -> np.ndarray:
    pos = c[modes + 1:]
    a = np.empty(2 * modes)
    a[0::2] = -2.0 * _SQRT_PI * pos.imag
    a[1::2] = 2.0 * _SQRT_PI * pos.real
    return a


def nonlinear_coeffs(a: np.ndarray, wmult: np.ndarray, modes: int) -> np.ndarray:
    """Quadratic interaction term in real coordinates.

    Computes the coordinates of div(y * (W' convolved with y)) where y is
    the zero-mean field with coordinates ``a`` and ``wmult`` is the
    precomputed spectral multiplier 2*pi*i*k*W_k.
    """
    cy = _coords_to_coeffs(a, modes)
    g = truncated_product(cy, wmult * cy)
    k = np.arange(-modes, modes + 1)
    return _coeffs_to_coords(1j * k * g, modes)


class GalerkinRhs:
    """Right-hand side of the truncated evolution in real coordinates.

    da/dt = L a - sum_j u_j N_j a + B u + F(a),  u = -gain a (or 0).
    """

    def __init__(self, lmat, nstack, bmat, gain, wmult, modes):
        self.lmat = np.ascontiguousarray(lmat, dtype=float)
        self.nstack = None if nstack is None else np.ascontiguousarray(nstack, dtype=float)
        self.bmat = None if bmat is None else np.ascontiguousarray(bmat, dtype=float)
        self.gain = None if gain is None else np.ascontiguousarray(gain, dtype=float)
        self.wmult = np.asarray(wmult, dtype=complex)
        self.modes = modes
        self._k = np.arange(-modes, modes + 1)
        self._npad = _pad_size(modes)

    def controls(self, a: np.ndarray) -> np.ndarray:
        if self.gain is None:
            m = 0 if self.bmat is None else self.bmat.shape[1]
            return np.zeros(m)
        return -(self.gain @ a)

    def _nonlinear(self, a: np.ndarray) -> np.ndarray:
        modes, n = self.modes, self._npad
        cy = _coords_to_coeffs(a, modes)
        d = self.wmult * cy
        sf = np.zeros(n, dtype=complex)
        sg = np.zeros(n, dtype=complex)
        sf[: modes + 1] = cy[modes:]
        sf[n - modes:] = cy[:modes]
        sg[: modes + 1] = d[modes:]
        sg[n - modes:] = d[:modes]
        vals = np.fft.ifft(sf) * np.fft.ifft(sg) * n
        spec = np.fft.fft(vals)
        g = np.empty(2 * modes + 1, dtype=complex)
        g[modes:] = spec[: modes + 1]
        g[:modes] = spec[n - modes:]
        return _coeffs_to_coords(1j * self._k * g, modes)

    def __call__(self, t: float, a: np.ndarray) -> np.ndarray:
        da = self.lmat @ a + self._nonlinear(a)
        if self.gain is not None:
            u = -(self.gain @ a)
            da += self.bmat @ u
            da -= np.einsum("j,jik,k->i", u, self.nstack, a)
        return da


def make_rhs(lmat, nstack, bmat, gain, wmult, modes) -> GalerkinRhs:
    return GalerkinRhs(lmat, nstack, bmat, gain, wmult, modes)
