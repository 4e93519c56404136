"""Stationary states of the uncontrolled dynamics.

Two routes are provided: a damped self-consistency fixed point for every
model, and the scalar order-parameter equation for the Kuramoto family,
which doubles as an independent cross-check and as a fast constructor
for synchronized branches.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .models import ModelSpec, bessel_i
from .spectral import (DEFAULT_MODES, GridFunction, SpectralField, TWO_PI,
                       convolve, differentiate, pointwise_product, to_coeffs,
                       to_grid)


class StationaryError(ValueError):
    pass


@dataclass(frozen=True)
class StationaryState:
    """Self-consistent density with a flux-defect certificate."""

    mubar: SpectralField
    residual: float
    iterations: int
    branch: str                 # "uniform" | "synchronized" | "other"
    phase: float | None = None  # argmax of the density, for non-uniform branches
    converged: bool = True

    def __post_init__(self):
        mass = self.mubar.mass
        if abs(mass - 1.0) > 1e-10:
            raise StationaryError(f"stationary state mass {mass} != 1")

    @property
    def modes(self) -> int:
        return self.mubar.modes

    def to_dict(self) -> dict:
        c = self.mubar.coeffs
        return {
            "modes": self.mubar.modes,
            "coeffs_re": c.real.tolist(),
            "coeffs_im": c.imag.tolist(),
            "residual": self.residual,
            "iterations": self.iterations,
            "branch": self.branch,
            "phase": self.phase,
            "converged": self.converged,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StationaryState":
        c = np.asarray(d["coeffs_re"]) + 1j * np.asarray(d["coeffs_im"])
        return cls(SpectralField(d["modes"], c), d["residual"], d["iterations"],
                   d["branch"], d.get("phase"), d.get("converged", True))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    @classmethod
    def load(cls, path) -> "StationaryState":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def uniform_density(modes: int = DEFAULT_MODES) -> SpectralField:
    return SpectralField.constant(modes, 1.0 / TWO_PI)


def uniform_state(model: ModelSpec) -> StationaryState:
    """Uniform density packaged with its residual under the given model."""
    mu = uniform_density(model.modes)
    res = stationarity_residual(mu, model)
    return StationaryState(mu, res, 0, "uniform")


def stationarity_residual(mu: SpectralField, model: ModelSpec) -> float:
    """L2 norm of the probability flux divergence at mu."""
    v = model.V + convolve(model.W, mu)
    flux = model.sigma * differentiate(mu) + pointwise_product(mu, differentiate(v))
    return differentiate(flux).norm_l2()


def _classify(mu: SpectralField, model: ModelSpec, n_grid: int):
    tail = np.abs(np.delete(mu.coeffs, mu.modes)).max()
    if tail < 1e-9:
        return "uniform", None
    g = to_grid(mu, n_grid)
    phase = float(g.nodes[np.argmax(g.values)])
    branch = "synchronized" if not model.has_confinement else "other"
    return branch, phase


def solve_self_consistent(model: ModelSpec, init: SpectralField,
                          tol: float = 1e-12, damping: float = 0.5,
                          max_iter: int = 10_000,
                          n_grid: int | None = None) -> StationaryState:
    """Damped fixed-point iteration on mu = Z^-1 exp(-(V + W*mu)/sigma).

    Iterates mu <- (1-damping) mu + damping T(mu) until the (undamped)
    map defect ||T(mu) - mu||_L2 drops below tol.  Returns the best
    iterate flagged ``converged=False`` if the budget is exhausted.
    """
    if not 0.0 < damping <= 1.0:
        raise StationaryError("damping must lie in (0, 1]")
    L = model.modes
    if init.modes != L:
        raise StationaryError("initial density truncation does not match model")
    n = n_grid or max(4 * L, 256)
    mu_vals = to_grid(init, n).values
    if mu_vals.min() <= 0 or abs(init.mass - 1.0) > 1e-8:
        raise StationaryError("init must be a positive probability density")

    mu = init
    defect = np.inf
    h = TWO_PI / n
    for it in range(1, max_iter + 1):
        v = model.V + convolve(model.W, mu)
        pot = to_grid(v, n).values
        pot = pot - pot.min()  # shift inside exp for overflow safety
        target_vals = np.exp(-pot / model.sigma)
        target_vals /= target_vals.sum() * h
        target = to_coeffs(GridFunction(target_vals), L)
        target = target * (1.0 / target.mass)
        defect = (target - mu).norm_l2()
        mu = mu + damping * (target - mu)
        mu = mu * (1.0 / mu.mass)
        if defect < tol:
            break
    converged = defect < tol
    res = stationarity_residual(mu, model)
    branch, phase = _classify(mu, model, n)
    return StationaryState(mu, res, it, branch, phase, converged)


# -- Kuramoto order parameter -------------------------------------------

def _psi(s: float) -> float:
    """Mean resultant length of the tilted circular exponential, I1/I0."""
    return bessel_i(1, s) / bessel_i(0, s)


def kuramoto_order_parameter(K: float, sigma: float) -> float:
    """Largest nonnegative root of r = Psi(K r / sigma).

    Returns 0 below the synchronization threshold K = 2*sigma; above it,
    the unique positive root is bracketed by bisection and polished with
    Newton iterations to 1e-12.
    """
    if K <= 0 or sigma <= 0:
        raise StationaryError("K and sigma must be positive")
    scale = K / sigma

    def f(r: float) -> float:
        return r - _psi(scale * r)

    # below threshold Psi'(0) = 1/2 makes r=0 the only root
    if f(1e-6) > 0.0:
        return 0.0
    lo, hi = 1e-6, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-13:
            break
    r = 0.5 * (lo + hi)
    for _ in range(5):
        # df/dr with Psi'(s) = 1 - Psi(s)/s - Psi(s)^2
        s = scale * r
        psi = _psi(s)
        dpsi = 1.0 - psi / s - psi * psi
        step = (r - psi) / (1.0 - scale * dpsi)
        r -= step
        if abs(step) < 1e-14:
            break
    return r


def kuramoto_synchronized_density(K: float, sigma: float,
                                  modes: int = DEFAULT_MODES,
                                  phase: float = 0.0,
                                  n_grid: int | None = None) -> SpectralField:
    """Normalized exp((K/sigma) r cos(x - phase)) built from the order parameter."""
    r = kuramoto_order_parameter(K, sigma)
    s = (K / sigma) * r
    n = n_grid or max(4 * modes, 256)
    x = TWO_PI * np.arange(n) / n
    vals = np.exp(s * np.cos(x - phase))
    mu = to_coeffs(GridFunction(vals), modes)
    return mu * (1.0 / mu.mass)


def kuramoto_synchronized_state(model: ModelSpec, K: float,
                                phase: float = 0.0) -> StationaryState:
    """Synchronized branch state with its residual certificate."""
    mu = kuramoto_synchronized_density(K, model.sigma, model.modes, phase)
    res = stationarity_residual(mu, model)
    branch = "uniform" if kuramoto_order_parameter(K, model.sigma) == 0.0 else "synchronized"
    ph = None if branch == "uniform" else phase
    return StationaryState(mu, res, 0, branch, ph)
