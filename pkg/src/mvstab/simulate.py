"""Nonlinear closed-loop integration of the truncated dynamics.

The integrated equation is the physical (unshifted) one; the decay-rate
shift enters only through the Riccati solution, and the feedback acts
directly on the physical perturbation coordinates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import kernels
from .models import ModelSpec, free_energy, weighted_norm
from .operators import LinearizedSystem
from .riccati import FeedbackLaw, apply_feedback
from .rk import solve_dp54
from .spectral import (SpectralField, TWO_PI, field_from_real_coords,
                       pointwise_product, project_zero_mean,
                       real_basis_coords, to_grid, wavenumbers)
from .stationary import StationaryState, uniform_density


class SimulationError(ValueError):
    pass


def cosine_perturbed_uniform(modes: int, eps: float = 0.1,
                             phase: float = 0.3) -> SpectralField:
    """Normalized density proportional to 1 + eps*cos(x - phase)."""
    if not -1.0 < eps < 1.0:
        raise SimulationError("perturbation size must keep the density positive")
    base = uniform_density(modes)
    bump = SpectralField.harmonic(modes, 1, "cos", eps / TWO_PI).shift(phase)
    return base + bump


def cosine_perturbed(base: SpectralField, eps: float = 0.1,
                     phase: float = 0.3) -> SpectralField:
    """Multiplicatively perturbed copy of a positive density, renormalized."""
    one_plus = SpectralField.constant(base.modes, 1.0) + \
        SpectralField.harmonic(base.modes, 1, "cos", eps).shift(phase)
    mu = pointwise_product(base, one_plus)
    return mu * (1.0 / mu.mass)


@dataclass(frozen=True)
class SimulationSetup:
    """Everything one trajectory needs; ``law`` absent means uncontrolled."""

    sys: LinearizedSystem
    model: ModelSpec
    state: StationaryState
    mu0: SpectralField
    t_end: float
    law: FeedbackLaw | None = None
    rtol: float = 1e-8
    atol: float = 1e-10
    n_samples: int = 400
    grid_n: int | None = None

    def __post_init__(self):
        if self.t_end <= 0:
            raise SimulationError("t_end must be positive")
        if self.mu0.modes != self.sys.modes:
            raise SimulationError("initial density truncation mismatch")
        if abs(self.mu0.mass - 1.0) > 1e-10:
            raise SimulationError(f"initial density mass {self.mu0.mass} != 1")
        n = self.grid_n or max(4 * self.mu0.modes, 256)
        if to_grid(self.mu0, n).values.min() <= 0:
            raise SimulationError("initial density must be positive on the grid")
        if self.law is not None and self.law.dim != self.sys.dim:
            raise SimulationError("feedback law dimension mismatch")

    @property
    def controlled(self) -> bool:
        return self.law is not None


@dataclass(frozen=True)
class TrajectoryRecord:
    """Sampled trajectory with physical diagnostics per sample."""

    times: np.ndarray
    states: np.ndarray          # (samples, 2L) zero-mean coordinates of y
    controls: np.ndarray        # (samples, m)
    norm_weighted: np.ndarray
    norm_l2: np.ndarray
    free_energy: np.ndarray
    mass_defect: np.ndarray
    min_density: np.ndarray
    accepted: int
    rejected: int
    status: str
    warnings: tuple = ()

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise SimulationError("sample times must be strictly increasing")


def _wconv_multiplier(model: ModelSpec) -> np.ndarray:
    """Spectral multiplier of y -> (grad W) convolved with y."""
    k = wavenumbers(model.modes)
    return TWO_PI * 1j * k * model.W.coeffs


def nonlinear_term(a: np.ndarray, model: ModelSpec) -> np.ndarray:
    """Quadratic interaction term F(a) in zero-mean real coordinates.

    Computes div(y (grad W * y)) with the convolution by the exact
    spectral product and the pointwise factor dealiased, then projects
    back onto the trig basis; F is a quadratic form, so F(0) = 0 and
    F(s a) = s^2 F(a).
    """
    a = np.asarray(a, dtype=float)
    if a.shape != (2 * model.modes,):
        raise SimulationError(f"state has shape {a.shape}, expected {(2 * model.modes,)}")
    return kernels.nonlinear_coeffs(a, _wconv_multiplier(model), model.modes)


def build_rhs(setup: SimulationSetup):
    """Fast right-hand-side closure over the selected kernel backend."""
    sys = setup.sys
    wmult = _wconv_multiplier(setup.model)
    if setup.controlled:
        return kernels.make_rhs(sys.A_unshifted, sys.N, sys.B,
                                setup.law.gain, wmult, sys.modes)
    return kernels.make_rhs(sys.A_unshifted, None, None, None, wmult, sys.modes)


def rhs(a: np.ndarray, setup: SimulationSetup, t: float = 0.0) -> np.ndarray:
    """Physical-time right-hand side at state a (u = -gain a when controlled)."""
    return build_rhs(setup)(t, np.asarray(a, dtype=float))


def initial_coords(setup: SimulationSetup) -> np.ndarray:
    y0 = project_zero_mean(setup.mu0 - setup.state.mubar)
    return real_basis_coords(y0)


def simulate(setup: SimulationSetup) -> TrajectoryRecord:
    """Integrate the controlled or uncontrolled dynamics and record diagnostics."""
    f = build_rhs(setup)
    a0 = initial_coords(setup)
    times = np.linspace(0.0, setup.t_end, setup.n_samples)
    result = solve_dp54(f, (0.0, setup.t_end), a0, rtol=setup.rtol,
                        atol=setup.atol, sample_times=times)

    L = setup.sys.modes
    n_grid = setup.grid_n or max(4 * L, 256)
    mubar = setup.state.mubar
    m = setup.sys.m_controls
    S = times.size
    controls = np.zeros((S, m))
    nw = np.zeros(S)
    nl2 = np.zeros(S)
    fen = np.zeros(S)
    mdef = np.zeros(S)
    mind = np.zeros(S)
    for i in range(S):
        a = result.y_samples[i]
        y = field_from_real_coords(a, L)
        mu = mubar + y
        nl2[i] = y.norm_l2()
        nw[i] = weighted_norm(y, mubar, n_grid)
        mdef[i] = abs(mu.mass - 1.0)
        mind[i] = to_grid(mu, n_grid).values.min()
        # positivity is monitored, not enforced: past the warning threshold
        # the entropy is undefined and the sample records NaN
        if mind[i] >= -1e-6:
            fen[i] = free_energy(mu, setup.model, n_grid)
        else:
            fen[i] = np.nan
        if setup.controlled:
            controls[i] = apply_feedback(setup.law, a)

    notes = []
    if result.status != "done":
        notes.append(f"integration stopped early: {result.status} "
                     f"at t = {result.t_final:.6g}")
    if mind.min() < -1e-6:
        notes.append(f"density transiently negative (min {mind.min():.3e})")
    return TrajectoryRecord(times, result.y_samples, controls, nw, nl2, fen,
                            mdef, mind, result.accepted, result.rejected,
                            result.status, tuple(notes))


def decay_rate(record: TrajectoryRecord, window: tuple[float, float],
               use_weighted: bool = False) -> float:
    """Least-squares slope of log ||y(t)|| over the window.

    Samples with norms below the 1e-14 underflow floor are dropped
    (window auto-truncation).
    """
    t0, t1 = window
    if t0 < record.times[0] - 1e-12 or t1 > record.times[-1] + 1e-12:
        raise SimulationError("window must lie inside the trajectory")
    norms = record.norm_weighted if use_weighted else record.norm_l2
    mask = (record.times >= t0) & (record.times <= t1) & (norms > 1e-14)
    if mask.sum() < 2:
        raise SimulationError("fewer than two usable samples in the window")
    return float(np.polyfit(record.times[mask], np.log(norms[mask]), 1)[0])


# -- trajectory output --------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".16e")


def write_trajectory_csv(record: TrajectoryRecord, path) -> None:
    """CSV columns: t, ||y||_w, ||y||_2, F, mass_defect, min_density, u_j."""
    m = record.controls.shape[1]
    header = ["t", "norm_weighted", "norm_l2", "free_energy",
              "mass_defect", "min_density"] + [f"u_{j + 1}" for j in range(m)]
    lines = [",".join(header)]
    for i, t in enumerate(record.times):
        row = [t, record.norm_weighted[i], record.norm_l2[i],
               record.free_energy[i], record.mass_defect[i],
               record.min_density[i], *record.controls[i]]
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", newline="") as fh:
        fh.write("\r\n".join(lines) + "\r\n")


def sidecar_dict(setup: SimulationSetup, record: TrajectoryRecord) -> dict:
    return {
        "model": setup.model.name,
        "sigma": setup.model.sigma,
        "modes": setup.sys.modes,
        "delta": setup.sys.delta,
        "nu": setup.sys.nu,
        "controlled": setup.controlled,
        "t_end": setup.t_end,
        "rtol": setup.rtol,
        "atol": setup.atol,
        "n_samples": setup.n_samples,
        "kernel_backend": kernels.backend_name(),
        "accepted_steps": record.accepted,
        "rejected_steps": record.rejected,
        "status": record.status,
        "warnings": list(record.warnings),
    }


def write_sidecar(setup: SimulationSetup, record: TrajectoryRecord, path,
                  extra: dict | None = None) -> None:
    doc = sidecar_dict(setup, record)
    if extra:
        doc.update(extra)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
