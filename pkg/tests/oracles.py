"""Independent oracles shared by the unit and acceptance suites.

Everything here is written directly from the mathematical definitions
(index sums and quadrature), deliberately avoiding the package's FFT and
matrix code paths.
"""

import numpy as np

TWO_PI = 2.0 * np.pi
SQPI = np.sqrt(np.pi)


def cauchy_product_oracle(cf, cg, modes):
    """Truncated product coefficients by direct summation over index pairs."""
    out = np.zeros(2 * modes + 1, dtype=complex)
    for k in range(-modes, modes + 1):
        acc = 0.0 + 0.0j
        for k1 in range(-modes, modes + 1):
            k2 = k - k1
            if -modes <= k2 <= modes:
                acc += cf[modes + k1] * cg[modes + k2]
        out[modes + k] = acc
    return out


def coords_to_complex(a, L):
    """Documented basis convention {sin kx, cos kx}/sqrt(pi) -> c_k."""
    c = np.zeros(2 * L + 1, dtype=complex)
    for k in range(1, L + 1):
        a_s, a_c = a[2 * (k - 1)], a[2 * (k - 1) + 1]
        c[L + k] = (a_c - 1j * a_s) / (2 * SQPI)
        c[L - k] = (a_c + 1j * a_s) / (2 * SQPI)
    return c


def interaction_oracle_triple_sum(a, model):
    """Direct convolution-sum evaluation of the quadratic interaction term.

    Expands y and grad(W)*y in complex modes and projects the product on
    each trig test function with the analytic orthogonality integrals;
    O(L^3) loops over Fourier indices, no FFT anywhere.
    """
    L = model.modes
    c = coords_to_complex(a, L)
    W = model.W.coeffs
    d = np.zeros(2 * L + 1, dtype=complex)
    for q in range(-L, L + 1):
        d[L + q] = TWO_PI * 1j * q * W[L + q] * c[L + q]

    def S(j):
        acc = 0.0 + 0.0j
        for k1 in range(-L, L + 1):
            k2 = j - k1
            if -L <= k2 <= L:
                acc += c[L + k1] * d[L + k2]
        return acc

    out = np.zeros(2 * L)
    for m in range(1, L + 1):
        sp, sm = S(m), S(-m)
        out[2 * (m - 1)] = np.real(-m * SQPI * (sp + sm))
        out[2 * (m - 1) + 1] = np.real(1j * m * SQPI * (sp - sm))
    return out


def interaction_oracle_quadrature(a, model, n=2048):
    """Fully grid-based oracle: double quadrature, no Fourier algebra."""
    L = model.modes
    x = TWO_PI * np.arange(n) / n
    h = TWO_PI / n
    y = np.zeros(n)
    for k in range(1, L + 1):
        y += (a[2 * (k - 1)] * np.sin(k * x) + a[2 * (k - 1) + 1] * np.cos(k * x)) / SQPI
    wp = np.zeros(n)
    for q in range(1, L + 1):
        wq = model.W.coeffs[L + q].real
        wp += -2.0 * q * wq * np.sin(q * x)  # derivative of 2 wq cos(qx)
    conv = np.array([np.sum(wp[(i - np.arange(n)) % n] * y) * h for i in range(n)])
    out = np.zeros(2 * L)
    prod = y * conv
    for m in range(1, L + 1):
        out[2 * (m - 1)] = -np.sum(prod * m * np.cos(m * x) / SQPI) * h
        out[2 * (m - 1) + 1] = -np.sum(prod * (-m) * np.sin(m * x) / SQPI) * h
    return out
