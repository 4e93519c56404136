"""Twin-backend consistency: compiled kernels against the NumPy reference."""

import numpy as np
import pytest

from mvstab import _purekernels
from mvstab.models import ModelParams, make_model
from mvstab.operators import assemble, default_shapes
from mvstab.riccati import solve_are
from mvstab.simulate import _wconv_multiplier
from mvstab.stationary import uniform_state

try:
    from mvstab import _speedups
    HAVE_COMPILED = True
except ImportError:  # pragma: no cover - build-dependent
    HAVE_COMPILED = False

needs_compiled = pytest.mark.skipif(not HAVE_COMPILED,
                                    reason="compiled extension not built")


def random_series(L, rng):
    return rng.normal(size=2 * L + 1) + 1j * rng.normal(size=2 * L + 1)


def test_reference_product_matches_cauchy_sum():
    rng = np.random.default_rng(0)
    L = 10
    f, g = random_series(L, rng), random_series(L, rng)
    out = _purekernels.truncated_product(f, g)
    for k in range(-L, L + 1):
        acc = sum(f[L + k1] * g[L + k - k1]
                  for k1 in range(max(-L, k - L), min(L, k + L) + 1))
        assert abs(out[L + k] - acc) < 1e-12


@needs_compiled
def test_product_backend_parity():
    rng = np.random.default_rng(1)
    for L in (4, 16, 33, 64):
        f, g = random_series(L, rng), random_series(L, rng)
        a = _speedups.truncated_product(f, g)
        b = _purekernels.truncated_product(f, g)
        scale = max(np.abs(b).max(), 1.0)
        assert np.abs(a - b).max() < 1e-13 * scale


@needs_compiled
def test_nonlinear_backend_parity():
    rng = np.random.default_rng(2)
    L = 24
    model = make_model(ModelParams.kuramoto(3.0, 0.5), L)
    wm = _wconv_multiplier(model)
    for _ in range(10):
        a = rng.normal(size=2 * L)
        fa = _speedups.nonlinear_coeffs(a, wm, L)
        fb = _purekernels.nonlinear_coeffs(a, wm, L)
        assert np.abs(fa - fb).max() < 1e-12 * max(1.0, np.abs(fb).max())


@needs_compiled
def test_rhs_backend_parity_controlled():
    L = 16
    model = make_model(ModelParams.kuramoto(5.0, 0.5), L)
    state = uniform_state(model)
    sys = assemble(model, state, default_shapes(L), delta=1.0, nu=1e4)
    law = solve_are(sys)
    wm = _wconv_multiplier(model)
    fast = _speedups.make_rhs(sys.A_unshifted, sys.N, sys.B, law.gain, wm, L)
    ref = _purekernels.make_rhs(sys.A_unshifted, sys.N, sys.B, law.gain, wm, L)
    rng = np.random.default_rng(3)
    for _ in range(10):
        a = 0.1 * rng.normal(size=2 * L)
        da, db = fast(0.0, a), ref(0.0, a)
        scale = max(np.abs(db).max(), 1.0)
        assert np.abs(da - db).max() < 1e-12 * scale
        assert np.abs(fast.controls(a) - ref.controls(a)).max() < 1e-12


@needs_compiled
def test_rhs_backend_parity_uncontrolled():
    L = 16
    model = make_model(ModelParams.kuramoto(2.0, 0.5), L)
    state = uniform_state(model)
    sys = assemble(model, state, [], delta=0.0, nu=1.0)
    wm = _wconv_multiplier(model)
    fast = _speedups.make_rhs(sys.A_unshifted, None, None, None, wm, L)
    ref = _purekernels.make_rhs(sys.A_unshifted, None, None, None, wm, L)
    rng = np.random.default_rng(4)
    a = 0.2 * rng.normal(size=2 * L)
    assert np.abs(fast(0.0, a) - ref(0.0, a)).max() < 1e-13
    assert fast.controls(a).size == 0


@needs_compiled
def test_compiled_accepts_readonly_views():
    rng = np.random.default_rng(5)
    f = random_series(8, rng)
    f.setflags(write=False)
    g = random_series(8, rng)
    out = _speedups.truncated_product(f, g)
    assert out.shape == (17,)


def test_forced_python_backend(monkeypatch):
    # the selector honors MVSTAB_PURE_PYTHON at import time
    import importlib
    import mvstab.kernels as K
    monkeypatch.setenv("MVSTAB_PURE_PYTHON", "1")
    mod = importlib.reload(K)
    try:
        assert mod.BACKEND == "python"
    finally:
        monkeypatch.delenv("MVSTAB_PURE_PYTHON")
        importlib.reload(K)
