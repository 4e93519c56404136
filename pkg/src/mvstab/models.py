"""Benchmark potentials, scalar special functions, and physical diagnostics.

Four interacting-diffusion models on the circle are packaged here:

* ``kuramoto``          V = 0,              W = -K cos(x)
* ``cosine_potential``  V = A cos(2x),      W = -K cos(x)
* ``o2``                V = -eta cos(x),    W = -K cos(x)
* ``von_mises``         V = 0,              W = -exp(theta cos x)/I0(theta)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import (DEFAULT_MODES, SpectralField, SpectralError, TWO_PI,
                       convolve, inner_product, to_grid)

MODEL_KINDS = ("kuramoto", "cosine_potential", "o2", "von_mises")


class ModelError(ValueError):
    """Invalid model parameters or an ill-posed diagnostic request."""


# -- modified Bessel functions I0, I1 ----------------------------------

_SERIES_CUTOFF = 50.0


def _bessel_i_series(order: int, x: float) -> float:
    # all-positive-term power series; converges for every x, used below
    # the cutoff where its largest term stays comfortably inside double range
    half = x / 2.0
    term = 1.0 if order == 0 else half
    total = term
    m = 0
    while True:
        m += 1
        term *= half * half / (m * (m + order))
        total += term
        if term < 1e-17 * total:
            return total
        if m > 500:  # pragma: no cover - series converges long before this
            return total


def _bessel_i_asymptotic(order: int, x: float) -> float:
    # large-x expansion e^x/sqrt(2 pi x) * sum_k t_k, truncated at the
    # smallest term; far below 1e-15 relative error for x > 50
    mu = 4.0 * order * order
    t = 1.0
    total = t
    for k in range(1, 40):
        t *= -(mu - (2 * k - 1) ** 2) / (8.0 * k * x)
        if abs(t) > abs(total):
            break
        total += t
        if abs(t) < 1e-17 * abs(total):
            break
    return math.exp(x) / math.sqrt(TWO_PI * x) * total


def bessel_i(order: int, x: float) -> float:
    """Modified Bessel function I0 or I1 to <=1e-12 relative error."""
    if order not in (0, 1):
        raise ModelError("only orders 0 and 1 are supported")
    if not math.isfinite(x):
        raise ModelError("argument must be finite")
    if x < 0:
        # I0 even, I1 odd
        sign = -1.0 if order == 1 else 1.0
        return sign * bessel_i(order, -x)
    if x <= _SERIES_CUTOFF:
        return _bessel_i_series(order, x)
    return _bessel_i_asymptotic(order, x)


# -- model parameters and realized potentials ---------------------------

@dataclass(frozen=True)
class ModelParams:
    """Tagged parameter set for one benchmark model."""

    kind: str
    sigma: float
    coupling: float = 0.0       # K, for the three interacting variants
    amplitude: float = 1.0      # confining amplitude (cosine_potential)
    field: float = 0.0          # eta, external field (o2)
    concentration: float = 0.0  # theta, interaction width (von_mises)

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ModelError(f"unknown model kind {self.kind!r}")
        if self.sigma <= 0:
            raise ModelError("diffusion sigma must be positive")
        if self.kind in ("kuramoto", "cosine_potential", "o2") and self.coupling <= 0:
            raise ModelError("coupling K must be positive")
        if self.kind == "von_mises" and self.concentration <= 0:
            raise ModelError("concentration theta must be positive")

    @classmethod
    def kuramoto(cls, coupling: float, sigma: float = 0.5) -> "ModelParams":
        return cls("kuramoto", sigma, coupling=coupling)

    @classmethod
    def cosine_potential(cls, coupling: float = 1.0, amplitude: float = 1.0,
                         sigma: float = 0.5) -> "ModelParams":
        return cls("cosine_potential", sigma, coupling=coupling, amplitude=amplitude)

    @classmethod
    def o2(cls, coupling: float = 1.0, field: float = 0.05,
           sigma: float = 0.5) -> "ModelParams":
        return cls("o2", sigma, coupling=coupling, field=field)

    @classmethod
    def von_mises(cls, concentration: float = 1.0, sigma: float = 0.5) -> "ModelParams":
        return cls("von_mises", sigma, concentration=concentration)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "sigma": self.sigma, "coupling": self.coupling,
            "amplitude": self.amplitude, "field": self.field,
            "concentration": self.concentration,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        known = {"kind", "sigma", "coupling", "amplitude", "field", "concentration"}
        unknown = set(d) - known
        if unknown:
            raise ModelError(f"unknown model parameter(s): {sorted(unknown)}")
        if "kind" not in d or "sigma" not in d:
            raise ModelError("model block requires 'kind' and 'sigma'")
        return cls(**d)


@dataclass(frozen=True)
class ModelSpec:
    """Confining potential V, even interaction potential W, diffusion sigma."""

    V: SpectralField
    W: SpectralField
    sigma: float
    name: str

    def __post_init__(self):
        if self.sigma <= 0:
            raise ModelError("sigma must be positive")
        if self.V.modes != self.W.modes:
            raise SpectralError("V and W must share the truncation order")
        c = self.W.coeffs
        even_defect = np.abs(c - c[::-1]).max() + np.abs(c.imag).max()
        if even_defect > 1e-10 * max(np.abs(c).max(), 1.0):
            raise ModelError("interaction potential W must be even")

    @property
    def modes(self) -> int:
        return self.V.modes

    @property
    def has_confinement(self) -> bool:
        return bool(np.abs(self.V.coeffs).max() > 1e-14)


def make_model(params: ModelParams, modes: int = DEFAULT_MODES) -> ModelSpec:
    """Realize the tagged parameters as spectral potential fields."""
    L = modes
    K = params.coupling
    if params.kind == "kuramoto":
        V = SpectralField.zero(L)
        W = SpectralField.harmonic(L, 1, "cos", -K)
    elif params.kind == "cosine_potential":
        V = SpectralField.harmonic(L, 2, "cos", params.amplitude)
        W = SpectralField.harmonic(L, 1, "cos", -K)
    elif params.kind == "o2":
        V = SpectralField.harmonic(L, 1, "cos", -params.field)
        W = SpectralField.harmonic(L, 1, "cos", -K)
    elif params.kind == "von_mises":
        th = params.concentration
        norm = bessel_i(0, th)
        V = SpectralField.zero(L)
        W = SpectralField.from_function(
            lambda x: -np.exp(th * np.cos(x)) / norm, L)
    else:  # pragma: no cover - guarded by ModelParams
        raise ModelError(params.kind)
    return ModelSpec(V, W, params.sigma, params.kind)


# -- physical diagnostics ----------------------------------------------

def free_energy(mu: SpectralField, model: ModelSpec,
                n_grid: int | None = None) -> float:
    """sigma * int mu log mu + int V mu + 1/2 int (W*mu) mu.

    The entropy integral uses grid quadrature with a 1e-14 positivity
    floor inside the logarithm (spectral truncation can leave tiny
    negative excursions); the other two terms are exact coefficient
    algebra.
    """
    n = n_grid or max(4 * mu.modes, 256)
    vals = to_grid(mu, n).values
    if vals.min() < -1e-6:
        raise ModelError(
            f"density is non-positive (min {vals.min():.3e}); entropy undefined")
    entropy = float(np.mean(vals * np.log(np.maximum(vals, 1e-14))) * TWO_PI)
    potential = inner_product(model.V, mu).real
    interaction = 0.5 * inner_product(convolve(model.W, mu), mu).real
    return model.sigma * entropy + potential + interaction


def weighted_norm(y: SpectralField, mubar: SpectralField,
                  n_grid: int | None = None) -> float:
    """L2 norm of y weighted by 1/mubar, by grid quadrature."""
    n = n_grid or max(4 * y.modes, 256)
    w = to_grid(mubar, n).values
    if w.min() <= 0:
        raise ModelError(
            f"weight density vanishes on the grid (min {w.min():.3e})")
    yv = to_grid(y, n).values
    return float(np.sqrt(np.mean(yv * yv / w) * TWO_PI))
