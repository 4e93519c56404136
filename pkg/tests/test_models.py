"""Benchmark potentials, Bessel functions, and physical diagnostics."""

import math

import numpy as np
import pytest

from mvstab.models import (ModelError, ModelParams, ModelSpec, bessel_i,
                           free_energy, make_model, weighted_norm)
from mvstab.spectral import SpectralField, TWO_PI
from mvstab.stationary import kuramoto_synchronized_density, uniform_density


def bessel_series_oracle(order, x, terms=30):
    """Independent truncated power series sum (x/2)^(2m+order)/(m! (m+order)!)."""
    total = 0.0
    for m in range(terms):
        num = (x / 2.0) ** (2 * m + order)
        den = math.factorial(m) * math.factorial(m + order)
        total += num / den
    return total


# -- bessel_i -------------------------------------------------------------

def test_bessel_i0_at_zero():
    assert bessel_i(0, 0.0) == 1.0


def test_bessel_i1_at_zero():
    assert bessel_i(1, 0.0) == 0.0


@pytest.mark.parametrize("x", [0.3, 1.0, 2.0, 5.0, 9.5, 20.0])
def test_bessel_against_series_oracle(x):
    for order in (0, 1):
        oracle = bessel_series_oracle(order, x, terms=60)
        assert abs(bessel_i(order, x) - oracle) < 1e-12 * oracle


def test_bessel_asymptotic_branch_against_series():
    # the power series still converges at x=80 (terms built by recurrence to
    # avoid factorial overflow); cross-checks the large-x asymptotic branch
    x = 80.0
    for order in (0, 1):
        term = 1.0 if order == 0 else x / 2.0
        total = term
        for m in range(1, 400):
            term *= (x / 2.0) ** 2 / (m * (m + order))
            total += term
            if term < 1e-18 * total:
                break
        assert abs(bessel_i(order, x) - total) < 1e-12 * total


def test_bessel_derivative_recurrence():
    # I0'(x) = I1(x), checked by central differences
    h = 1e-6
    for x in (0.7, 2.3, 6.1):
        fd = (bessel_i(0, x + h) - bessel_i(0, x - h)) / (2 * h)
        assert abs(fd - bessel_i(1, x)) < 1e-6


def test_bessel_i1_odd():
    assert bessel_i(1, -2.0) == -bessel_i(1, 2.0)


def test_bessel_rejects_bad_order():
    with pytest.raises(ModelError):
        bessel_i(2, 1.0)


# -- make_model -----------------------------------------------------------

def test_kuramoto_model_fields():
    m = make_model(ModelParams.kuramoto(1.0, 0.5), 8)
    assert np.abs(m.V.coeffs).max() == 0.0
    assert abs(m.W.coeff(1) + 0.5) < 1e-15
    assert abs(m.W.coeff(-1) + 0.5) < 1e-15
    others = [m.W.coeff(k) for k in range(-8, 9) if abs(k) != 1]
    assert max(abs(c) for c in others) == 0.0
    assert m.sigma == 0.5


def test_o2_model_fields():
    m = make_model(ModelParams.o2(coupling=1.0, field=0.05), 8)
    expectV = SpectralField.harmonic(8, 1, "cos", -0.05)
    expectW = SpectralField.harmonic(8, 1, "cos", -1.0)
    assert np.abs(m.V.coeffs - expectV.coeffs).max() < 1e-15
    assert np.abs(m.W.coeffs - expectW.coeffs).max() < 1e-15


def test_von_mises_model_coefficients():
    theta = 1.0
    L = 16
    m = make_model(ModelParams.von_mises(theta, sigma=0.5), L)
    # oracle: trapezoid quadrature of the normalized interaction kernel
    nq = 4096
    x = TWO_PI * np.arange(nq) / nq
    w_vals = -np.exp(theta * np.cos(x)) / bessel_i(0, theta)
    c0 = np.mean(w_vals)
    assert abs(m.W.coeff(0) - c0) < 1e-10
    # c_k(W) = -I_k(theta)/I_0(theta) via the quadrature oracle for low k
    for k in (1, 2, 3):
        ck = np.mean(w_vals * np.exp(-1j * k * x))
        assert abs(m.W.coeff(k) - ck) < 1e-10
    assert abs(m.W.coeff(1) + bessel_i(1, theta) / bessel_i(0, theta)) < 1e-12


def test_cosine_potential_amplitude_variants():
    full = make_model(ModelParams.cosine_potential(coupling=1.0, amplitude=1.0), 8)
    weak = make_model(ModelParams.cosine_potential(coupling=1.0, amplitude=0.05), 8)
    assert abs(full.V.coeff(2) - 0.5) < 1e-15
    assert abs(weak.V.coeff(2) - 0.025) < 1e-15


@pytest.mark.parametrize("params", [
    ModelParams.kuramoto(2.0),
    ModelParams.cosine_potential(1.0, 0.05),
    ModelParams.o2(1.0, 0.05),
    ModelParams.von_mises(1.0),
])
def test_interaction_even_for_all_variants(params):
    m = make_model(params, 12)
    c = m.W.coeffs
    assert np.abs(c - c[::-1]).max() < 1e-12
    assert np.abs(c.imag).max() < 1e-12


def test_invalid_params_rejected():
    with pytest.raises(ModelError):
        ModelParams.kuramoto(-1.0)
    with pytest.raises(ModelError):
        ModelParams("kuramoto", sigma=0.0, coupling=1.0)
    with pytest.raises(ModelError):
        ModelParams.von_mises(-0.5)
    with pytest.raises(ModelError):
        ModelParams.from_dict({"kind": "kuramoto", "sigma": 0.5,
                               "coupling": 1.0, "bogus": 3})


def test_model_spec_rejects_odd_interaction():
    V = SpectralField.zero(4)
    W = SpectralField.harmonic(4, 1, "sin")
    with pytest.raises(ModelError):
        ModelSpec(V, W, 0.5, "bad")


# -- free_energy ----------------------------------------------------------

def test_free_energy_uniform_kuramoto():
    # interaction and confinement vanish by orthogonality; entropy is analytic
    sigma = 0.5
    m = make_model(ModelParams.kuramoto(2.0, sigma), 16)
    mu = uniform_density(16)
    expect = sigma * np.log(1.0 / TWO_PI)
    assert abs(free_energy(mu, m) - expect) < 1e-12


def test_free_energy_uniform_cosine_potential():
    sigma = 0.5
    m = make_model(ModelParams.cosine_potential(1.0, 1.0, sigma), 16)
    mu = uniform_density(16)
    expect = sigma * np.log(1.0 / TWO_PI)
    assert abs(free_energy(mu, m) - expect) < 1e-12


def test_free_energy_synchronized_below_uniform():
    # the synchronized branch is the minimizer above the critical coupling
    sigma = 0.5
    m = make_model(ModelParams.kuramoto(2.0, sigma), 32)
    mu_sync = kuramoto_synchronized_density(2.0, sigma, 32)
    assert free_energy(mu_sync, m) < free_energy(uniform_density(32), m)


def test_free_energy_rejects_negative_density():
    m = make_model(ModelParams.kuramoto(1.0), 8)
    bad = uniform_density(8) + SpectralField.harmonic(8, 1, "cos", 1.0)
    with pytest.raises(ModelError):
        free_energy(bad, m)


# -- weighted_norm ----------------------------------------------------------

def test_weighted_norm_zero():
    assert weighted_norm(SpectralField.zero(8), uniform_density(8)) == 0.0


def test_weighted_norm_uniform_weight_closed_form():
    # constant weight 1/(2 pi): ||y||_w = sqrt(2 pi) ||y||_L2
    y = SpectralField.harmonic(8, 1, "cos", 1.0 / TWO_PI)
    got = weighted_norm(y, uniform_density(8))
    expect = np.sqrt(TWO_PI) * y.norm_l2()
    assert abs(got - expect) < 1e-12


def test_weighted_norm_homogeneity():
    rng = np.random.default_rng(2)
    c = np.zeros(17, dtype=complex)
    pos = rng.normal(size=8) + 1j * rng.normal(size=8)
    c[9:] = pos
    c[:8] = np.conj(pos[::-1])
    y = SpectralField(8, c)
    mu = uniform_density(8)
    assert abs(weighted_norm(2.0 * y, mu) - 2.0 * weighted_norm(y, mu)) < 1e-12


def test_weighted_norm_rejects_vanishing_weight():
    w = SpectralField.constant(8, 1.0 / TWO_PI) + \
        SpectralField.harmonic(8, 1, "cos", 1.0)
    with pytest.raises(ModelError):
        weighted_norm(SpectralField.harmonic(8, 1, "cos"), w)
