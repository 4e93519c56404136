"""Fourier-layer correctness against quadrature and convolution-sum oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import cauchy_product_oracle

from mvstab.spectral import (GridFunction, SpectralField, SpectralError,
                             TWO_PI, convolve, differentiate,
                             field_from_real_coords, inner_product,
                             pointwise_product, project_zero_mean,
                             real_basis_coords, to_coeffs, to_grid)


def random_real_field(modes, rng, decay=0.5):
    c = np.zeros(2 * modes + 1, dtype=complex)
    amp = np.exp(-decay * np.arange(1, modes + 1))
    pos = amp * (rng.normal(size=modes) + 1j * rng.normal(size=modes))
    c[modes + 1:] = pos
    c[:modes] = np.conj(pos[::-1])
    c[modes] = rng.normal()
    return SpectralField(modes, c)


def quad_coefficient(values, x, k):
    """Trapezoid (periodic rectangle) estimate of the k-th coefficient."""
    return np.mean(values * np.exp(-1j * k * x))


# -- to_coeffs ----------------------------------------------------------

def test_to_coeffs_cosine():
    n = 64
    x = TWO_PI * np.arange(n) / n
    f = to_coeffs(GridFunction(np.cos(x)), 4)
    assert abs(f.coeff(1) - 0.5) < 1e-14
    assert abs(f.coeff(-1) - 0.5) < 1e-14
    others = [f.coeff(k) for k in range(-4, 5) if abs(k) != 1]
    assert max(abs(c) for c in others) < 1e-14


def test_to_coeffs_uniform_mass():
    n = 32
    f = to_coeffs(GridFunction(np.full(n, 1.0 / TWO_PI)), 4)
    assert abs(f.coeff(0) - 1.0 / TWO_PI) < 1e-15
    assert abs(f.mass - 1.0) < 1e-14


def test_to_coeffs_exp_cos_against_quadrature():
    # oracle: dense trapezoid quadrature of the coefficient integrals
    n_quad = 4096
    xq = TWO_PI * np.arange(n_quad) / n_quad
    gq = np.exp(np.cos(xq))
    L = 16
    n = 128
    x = TWO_PI * np.arange(n) / n
    f = to_coeffs(GridFunction(np.exp(np.cos(x))), L)
    for k in range(-L, L + 1):
        assert abs(f.coeff(k) - quad_coefficient(gq, xq, k)) < 1e-10


def test_to_coeffs_grid_too_small():
    with pytest.raises(SpectralError):
        to_coeffs(GridFunction(np.ones(8)), 8)


# -- to_grid ------------------------------------------------------------

def test_to_grid_single_mode():
    f = SpectralField.harmonic(4, 1, "cos")
    g = to_grid(f, 32)
    assert np.allclose(g.values, np.cos(g.nodes), atol=1e-14)


def test_to_grid_zero():
    g = to_grid(SpectralField.zero(6), 16)
    assert np.all(g.values == 0.0)


def test_round_trip_random():
    rng = np.random.default_rng(7)
    f = random_real_field(20, rng)
    back = to_coeffs(to_grid(f, 256), 20)
    assert np.abs(back.coeffs - f.coeffs).max() < 1e-12


def test_to_grid_too_small():
    with pytest.raises(SpectralError):
        to_grid(SpectralField.zero(8), 16)


# -- convolve -----------------------------------------------------------

def test_convolve_cos_with_single_mode():
    # int cos(x-x') e^{ix'} dx' = pi e^{ix}
    L = 4
    f = SpectralField.harmonic(L, 1, "cos")
    c = np.zeros(2 * L + 1, dtype=complex)
    c[L + 1] = 1.0
    g = SpectralField(L, c, is_real=False)
    out = convolve(f, g)
    assert abs(out.coeff(1) - np.pi) < 1e-14
    assert np.abs(np.delete(out.coeffs, L + 1)).max() < 1e-14


def test_convolve_with_uniform_gives_mean():
    rng = np.random.default_rng(3)
    f = random_real_field(8, rng)
    unif = SpectralField.constant(8, 1.0 / TWO_PI)
    out = convolve(f, unif)
    assert abs(out.coeff(0) - f.coeff(0)) < 1e-14
    assert np.abs(np.delete(out.coeffs, 8)).max() == 0.0


def test_convolve_against_double_quadrature():
    # W = -cos convolved with the normalized tilted exponential density
    L = 16
    nq = 2048
    xq = TWO_PI * np.arange(nq) / nq
    mu_vals = np.exp(2.0 * np.cos(xq))
    mu_vals /= np.mean(mu_vals) * TWO_PI
    W = SpectralField.harmonic(L, 1, "cos", -1.0)
    mu = to_coeffs(GridFunction(np.interp(
        TWO_PI * np.arange(256) / 256, xq, mu_vals)), L)
    # rebuild mu on its own grid to avoid interpolation error
    x = TWO_PI * np.arange(256) / 256
    mv = np.exp(2.0 * np.cos(x))
    mv /= np.mean(mv) * TWO_PI
    mu = to_coeffs(GridFunction(mv), L)
    out = to_grid(convolve(W, mu), 64)
    for i, xi in enumerate(out.nodes):
        direct = np.mean(-np.cos(xi - xq) * mu_vals) * TWO_PI
        assert abs(out.values[i] - direct) < 1e-10


# -- differentiate ------------------------------------------------------

def test_differentiate_sin_gives_cos():
    f = SpectralField.harmonic(4, 1, "sin")
    expect = SpectralField.harmonic(4, 1, "cos")
    assert np.abs(differentiate(f).coeffs - expect.coeffs).max() < 1e-15


def test_differentiate_constant():
    f = SpectralField.constant(4, 2.5)
    assert np.abs(differentiate(f).coeffs).max() == 0.0


def test_differentiate_cos2x_modes():
    f = SpectralField.harmonic(8, 2, "cos")
    d = differentiate(f)
    expect = SpectralField.harmonic(8, 2, "sin", -2.0)
    assert np.abs(d.coeffs - expect.coeffs).max() < 1e-15
    assert abs(d.coeff(2) - 1j) < 1e-15
    assert abs(d.coeff(-2) - (-1j)) < 1e-15


# -- inner_product ------------------------------------------------------

def test_inner_product_cos_cos():
    f = SpectralField.harmonic(4, 1, "cos")
    assert abs(inner_product(f, f) - np.pi) < 1e-14


def test_inner_product_sin_cos_orthogonal():
    s = SpectralField.harmonic(4, 1, "sin")
    c = SpectralField.harmonic(4, 1, "cos")
    assert abs(inner_product(s, c)) < 1e-15


def test_inner_product_against_quadrature():
    rng = np.random.default_rng(11)
    f = random_real_field(12, rng)
    g = random_real_field(12, rng)
    n = 512
    fv = to_grid(f, n).values
    gv = to_grid(g, n).values
    quad = np.mean(fv * gv) * TWO_PI
    assert abs(inner_product(f, g) - quad) < 1e-12


def test_inner_product_mode_mismatch():
    with pytest.raises(SpectralError):
        inner_product(SpectralField.zero(4), SpectralField.zero(5))


# -- pointwise_product --------------------------------------------------

def test_pointwise_product_cos_squared():
    f = SpectralField.harmonic(4, 1, "cos")
    p = pointwise_product(f, f)
    expect = SpectralField.constant(4, 0.5) + SpectralField.harmonic(4, 2, "cos", 0.5)
    assert np.abs(p.coeffs - expect.coeffs).max() < 1e-14


def test_pointwise_product_identity():
    rng = np.random.default_rng(5)
    f = random_real_field(10, rng)
    one = SpectralField.constant(10, 1.0)
    assert np.abs(pointwise_product(f, one).coeffs - f.coeffs).max() < 1e-14


def test_pointwise_product_matches_cauchy_oracle():
    rng = np.random.default_rng(13)
    L = 8
    for _ in range(20):
        f = random_real_field(L, rng, decay=0.1)
        g = random_real_field(L, rng, decay=0.1)
        oracle = cauchy_product_oracle(f.coeffs, g.coeffs, L)
        got = pointwise_product(f, g).coeffs
        assert np.abs(got - oracle).max() < 1e-12


# -- project_zero_mean ---------------------------------------------------

def test_project_uniform_to_zero():
    u = SpectralField.constant(6, 1.0 / TWO_PI)
    assert np.abs(project_zero_mean(u).coeffs).max() == 0.0


def test_project_idempotent():
    rng = np.random.default_rng(17)
    f = random_real_field(8, rng)
    p1 = project_zero_mean(f)
    p2 = project_zero_mean(p1)
    assert np.abs(p1.coeffs - p2.coeffs).max() == 0.0


def test_project_clears_only_mean():
    rng = np.random.default_rng(19)
    f = random_real_field(8, rng)
    p = project_zero_mean(f)
    assert p.coeff(0) == 0.0
    assert p.mass == 0.0
    mask = np.ones(17, dtype=bool)
    mask[8] = False
    assert np.array_equal(p.coeffs[mask], f.coeffs[mask])


# -- invariants and properties -------------------------------------------

@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 31 - 1))
def test_parseval_matches_quadrature(seed):
    rng = np.random.default_rng(seed)
    f = random_real_field(12, rng)
    ip = inner_product(f, f)
    assert ip.real >= 0.0
    assert abs(ip.imag) < 1e-12
    v = to_grid(f, 256).values
    assert abs(ip.real - np.mean(v * v) * TWO_PI) < 1e-12 * max(1.0, ip.real)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 31 - 1))
def test_round_trip_property(seed):
    rng = np.random.default_rng(seed)
    f = random_real_field(16, rng)
    back = to_coeffs(to_grid(f, 128), 16)
    assert np.abs(back.coeffs - f.coeffs).max() < 1e-12


def test_convolution_theorem_on_grid():
    rng = np.random.default_rng(23)
    f = random_real_field(12, rng)
    g = random_real_field(12, rng)
    n = 256
    conv = to_grid(convolve(f, g), n)
    nq = 2048
    xq = TWO_PI * np.arange(nq) / nq
    fv = to_grid(f, nq).values
    gv = to_grid(g, nq).values
    for i in range(0, n, 17):
        xi = conv.nodes[i]
        direct = np.mean(np.interp((xi - xq) % TWO_PI, xq, fv, period=TWO_PI) * gv) * TWO_PI
        assert abs(conv.values[i] - direct) < 1e-10


def test_differentiate_commutes_with_convolve():
    # exact up to multiplication reordering (both sides are diagonal products)
    rng = np.random.default_rng(29)
    f = random_real_field(10, rng)
    g = random_real_field(10, rng)
    lhs = differentiate(convolve(f, g)).coeffs
    rhs = convolve(differentiate(f), g).coeffs
    scale = max(np.abs(lhs).max(), 1.0)
    assert np.abs(lhs - rhs).max() < 1e-15 * scale


def test_project_commutes_with_differentiate():
    rng = np.random.default_rng(31)
    f = random_real_field(10, rng)
    lhs = project_zero_mean(differentiate(f)).coeffs
    rhs = differentiate(project_zero_mean(f)).coeffs
    assert np.abs(lhs - rhs).max() == 0.0


def test_real_coords_isometry():
    rng = np.random.default_rng(37)
    f = project_zero_mean(random_real_field(9, rng))
    a = real_basis_coords(f)
    assert abs(np.linalg.norm(a) - f.norm_l2()) < 1e-12
    back = field_from_real_coords(a, 9)
    assert np.abs(back.coeffs - f.coeffs).max() < 1e-14


def test_mass_is_2pi_c0():
    f = SpectralField.constant(5, 3.0)
    assert abs(f.mass - 3.0 * TWO_PI) < 1e-14
