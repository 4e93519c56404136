#!/usr/bin/env python3
"""Compiled-vs-reference kernel benchmark.

Times the truncated product, the fused right-hand side, and a full
closed-loop integration on both backends.  Run from the repository root:

    python benchmarks/bench_kernels.py [--modes 64] [--repeat 2000]
"""

import argparse
import time

import numpy as np

from mvstab import _purekernels
from mvstab.models import ModelParams, make_model
from mvstab.operators import assemble, default_shapes
from mvstab.riccati import solve_are
from mvstab.rk import solve_dp54
from mvstab.simulate import _wconv_multiplier, initial_coords, \
    cosine_perturbed_uniform
from mvstab.spectral import project_zero_mean, real_basis_coords
from mvstab.stationary import uniform_state

try:
    from mvstab import _speedups
except ImportError:
    _speedups = None


def best_of(fn, repeat, inner=1):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn()
        best = min(best, (time.perf_counter() - t0) / inner)
    return best


def bench_backend(tag, impl, sys, gain, wmult, a0, t_end, repeat):
    L = sys.modes
    rng = np.random.default_rng(0)
    cf = rng.normal(size=2 * L + 1) + 1j * rng.normal(size=2 * L + 1)
    cg = rng.normal(size=2 * L + 1) + 1j * rng.normal(size=2 * L + 1)
    t_prod = best_of(lambda: impl.truncated_product(cf, cg), 5, repeat)

    rhs_ctl = impl.make_rhs(sys.A_unshifted, sys.N, sys.B, gain, wmult, L)
    t_rhs = best_of(lambda: rhs_ctl(0.0, a0), 5, repeat)

    t0 = time.perf_counter()
    out = solve_dp54(rhs_ctl, (0.0, t_end), a0, rtol=1e-8, atol=1e-10)
    t_sim = time.perf_counter() - t0
    print(f"  {tag:<9s} product {t_prod * 1e6:8.2f} us | controlled rhs "
          f"{t_rhs * 1e6:8.2f} us | integrate({out.accepted} steps) {t_sim:7.3f} s")
    return t_prod, t_rhs, t_sim


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--modes", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=2000)
    ap.add_argument("--t-end", type=float, default=2.0)
    args = ap.parse_args()

    L = args.modes
    model = make_model(ModelParams.kuramoto(5.0, 0.5), L)
    state = uniform_state(model)
    sys = assemble(model, state, default_shapes(L), 1.0, 1e6)
    gain = solve_are(sys).gain
    wmult = _wconv_multiplier(model)
    mu0 = cosine_perturbed_uniform(L, 0.1, 0.3)
    a0 = real_basis_coords(project_zero_mean(mu0 - state.mubar))

    print(f"Galerkin kernels at L = {L} (state dimension {2 * L}), "
          f"controlled K = 5 integration to t = {args.t_end}")
    ref = bench_backend("python", _purekernels, sys, gain, wmult, a0,
                        args.t_end, args.repeat)
    if _speedups is None:
        print("  compiled extension not built; reference backend only")
        return
    fast = bench_backend("compiled", _speedups, sys, gain, wmult, a0,
                         args.t_end, args.repeat)
    print(f"  speedups: product x{ref[0] / fast[0]:.1f}, "
          f"rhs x{ref[1] / fast[1]:.1f}, integration x{ref[2] / fast[2]:.1f}")


if __name__ == "__main__":
    main()
