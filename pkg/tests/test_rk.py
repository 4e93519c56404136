"""Integrator verification: tableau exactness, order, dense output, control."""

import numpy as np
import pytest

from mvstab.rk import (IntegrationError, dp54_step, integrate_fixed,
                       solve_dp54)


def linear_problem():
    A = np.array([[0.0, 8.0], [-8.0, -0.4]])
    y0 = np.array([1.0, 0.3])

    def f(t, y):
        return A @ y

    def exact(t):
        import scipy.linalg
        return scipy.linalg.expm(A * t) @ y0

    return f, y0, exact


def test_quartic_integrated_exactly():
    # a 5th-order method reproduces t^5 from y' = 5 t^4 up to roundoff
    def f(t, y):
        return np.array([5.0 * t ** 4])

    y = integrate_fixed(f, (0.0, 1.0), np.array([0.0]), 7)
    assert abs(y[0] - 1.0) < 1e-14


def test_adaptive_exponential_decay():
    def f(t, y):
        return -2.0 * y

    out = solve_dp54(f, (0.0, 3.0), np.array([1.0]), rtol=1e-10, atol=1e-12)
    assert out.status == "done"
    assert abs(out.y_final[0] - np.exp(-6.0)) < 1e-10


def test_fixed_step_order_five():
    f, y0, exact = linear_problem()
    ref = exact(1.0)
    hs = [1 / 40, 1 / 80, 1 / 160, 1 / 320, 1 / 640]
    errs = [np.linalg.norm(integrate_fixed(f, (0.0, 1.0), y0, round(1 / h)) - ref)
            for h in hs]
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert abs(slope - 5.0) <= 0.3


def test_dense_output_quality():
    f, y0, exact = linear_problem()
    errors = []
    for h in (0.05, 0.025):
        _, _, K = dp54_step(f, 0.0, y0, h)
        from mvstab.rk import P
        theta = 0.5
        p = theta ** np.arange(1, 5)
        y_mid = y0 + h * ((K.T @ P) @ p)
        errors.append(np.linalg.norm(y_mid - exact(theta * h)))
    assert errors[0] < 1e-5
    # locally fifth-order interpolation: halving h gains a factor near 32
    assert errors[0] / errors[1] > 12.0


def test_dense_output_endpoint_consistency():
    f, y0, _ = linear_problem()
    h = 0.05
    y_new, _, K = dp54_step(f, 0.0, y0, h)
    from mvstab.rk import P
    p = np.ones(4)
    y_interp = y0 + h * ((K.T @ P) @ p)
    assert np.linalg.norm(y_interp - y_new) < 1e-12


def test_samples_on_uniform_grid():
    def f(t, y):
        return -y

    ts = np.linspace(0.0, 2.0, 21)
    out = solve_dp54(f, (0.0, 2.0), np.array([1.0]), sample_times=ts)
    assert np.array_equal(out.t_samples, ts)
    assert out.y_samples[0, 0] == 1.0
    assert np.abs(out.y_samples[:, 0] - np.exp(-ts)).max() < 1e-8


def test_pi_controller_rejection_rate():
    # mildly stiff decay: controller should settle with few rejections
    def f(t, y):
        return np.array([-80.0 * y[0] + np.sin(t)])

    out = solve_dp54(f, (0.0, 5.0), np.array([1.0]), rtol=1e-6, atol=1e-9)
    assert out.status == "done"
    assert out.rejected < 0.2 * out.accepted


def test_step_underflow_reported_with_last_state():
    # finite-time blow-up forces the step size under the floor
    def f(t, y):
        return y * y

    out = solve_dp54(f, (0.0, 2.0), np.array([1.0]), rtol=1e-8, atol=1e-10,
                     max_steps=100_000)
    assert out.status == "step_underflow"
    assert out.t_final < 1.01
    assert np.isfinite(out.y_final).all()


def test_invalid_span_rejected():
    with pytest.raises(IntegrationError):
        solve_dp54(lambda t, y: y, (1.0, 0.0), np.array([1.0]))


def test_max_steps_status():
    def f(t, y):
        return -y

    out = solve_dp54(f, (0.0, 1000.0), np.array([1.0]), max_steps=10)
    assert out.status == "max_steps"
