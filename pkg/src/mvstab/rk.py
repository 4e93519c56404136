"""Embedded Dormand-Prince 5(4) integrator with PI step control.

Adaptive stepping with the FSAL property, a fourth-order dense-output
interpolant for sampling on a uniform reporting grid, and a fixed-step
entry point used by the convergence-order verification.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Butcher tableau (7 stages, order 5 propagating / 4 embedded)
C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# difference between the 5th- and embedded 4th-order weights
E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
              -17253 / 339200, 22 / 525, -1 / 40])
# quartic dense-output coefficients (Shampine's interpolant)
P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

SAFETY = 0.9
# PI controller (classic DOPRI5 values): h *= safety * err^-EXP1 * err_prev^BETA
BETA = 0.04
EXP1 = 0.2 - 0.75 * BETA
FAC_MIN = 0.2
FAC_MAX = 10.0


class IntegrationError(RuntimeError):
    pass


@dataclass
class IntegrationResult:
    t_samples: np.ndarray
    y_samples: np.ndarray       # (n_samples, dim)
    accepted: int
    rejected: int
    status: str                 # "done" | "step_underflow" | "max_steps"
    t_final: float
    y_final: np.ndarray


def dp54_step(f, t: float, y: np.ndarray, h: float, k1: np.ndarray | None = None):
    """One Dormand-Prince step: returns (y_new, error_vector, stages)."""
    K = np.empty((7, y.size))
    K[0] = f(t, y) if k1 is None else k1
    for s in range(1, 7):
        K[s] = f(t + C[s] * h, y + h * (A[s] @ K[:s]))
    y_new = y + h * (B5 @ K)
    err = h * (E @ K)
    return y_new, err, K


def _error_norm(err, y, y_new, rtol, atol) -> float:
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def _initial_step(f, t0, y0, f0, t1, rtol, atol) -> float:
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    f1 = f(t0 + h0, y1)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, t1 - t0)


def solve_dp54(f, t_span, y0, rtol: float = 1e-8, atol: float = 1e-10,
               sample_times: np.ndarray | None = None,
               max_steps: int = 5_000_000,
               first_step: float | None = None) -> IntegrationResult:
    """Adaptive integration with dense output at the requested samples."""
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t1 <= t0:
        raise IntegrationError("t_span must be increasing")
    y = np.asarray(y0, dtype=float).copy()
    if sample_times is None:
        sample_times = np.array([t1])
    sample_times = np.asarray(sample_times, dtype=float)
    if sample_times.size and (sample_times[0] < t0 or sample_times[-1] > t1 + 1e-12):
        raise IntegrationError("sample times must lie inside t_span")

    samples = np.empty((sample_times.size, y.size))
    s_idx = 0
    while s_idx < sample_times.size and sample_times[s_idx] <= t0:
        samples[s_idx] = y
        s_idx += 1

    t = t0
    k1 = f(t, y)
    h = first_step if first_step is not None else _initial_step(
        f, t0, y, k1, t1, rtol, atol)
    err_prev = 1e-4
    accepted = rejected = 0
    status = "max_steps"
    for _ in range(max_steps):
        if t >= t1 - 1e-14 * max(1.0, abs(t1)):
            status = "done"
            break
        h = min(h, t1 - t)
        if h < 1e-14 * max(1.0, abs(t)):
            status = "step_underflow"
            break
        y_new, err, K = dp54_step(f, t, y, h, k1)
        err_norm = _error_norm(err, y, y_new, rtol, atol)
        if err_norm <= 1.0:
            # dense output on the passed samples
            if s_idx < sample_times.size:
                t_new = t + h
                while s_idx < sample_times.size and sample_times[s_idx] <= t_new + 1e-14:
                    ts = sample_times[s_idx]
                    if abs(ts - t_new) <= 1e-13 * max(1.0, abs(t_new)):
                        samples[s_idx] = y_new
                    else:
                        theta = (ts - t) / h
                        p = theta ** np.arange(1, 5)
                        samples[s_idx] = y + h * ((K.T @ P) @ p)
                    s_idx += 1
            t += h
            y = y_new
            k1 = K[6]  # FSAL
            accepted += 1
            safe_err = max(err_norm, 1e-10)
            factor = SAFETY * safe_err ** (-EXP1) * err_prev ** BETA
            h *= min(FAC_MAX, max(FAC_MIN, factor))
            err_prev = max(err_norm, 1e-4)
        else:
            rejected += 1
            h *= max(FAC_MIN, min(1.0, SAFETY * err_norm ** (-EXP1)))
    else:
        status = "max_steps"

    # unfilled samples (early stop) hold the last state
    while s_idx < sample_times.size:
        samples[s_idx] = y
        s_idx += 1
    return IntegrationResult(sample_times, samples, accepted, rejected,
                             status, t, y)


def integrate_fixed(f, t_span, y0, n_steps: int) -> np.ndarray:
    """Fixed-step Dormand-Prince; used for convergence-order verification."""
    t0, t1 = float(t_span[0]), float(t_span[1])
    h = (t1 - t0) / n_steps
    y = np.asarray(y0, dtype=float).copy()
    t = t0
    k1 = f(t, y)
    for _ in range(n_steps):
        y, _, K = dp54_step(f, t, y, h, k1)
        k1 = K[6]
        t += h
    return y
