"""Algebraic Riccati synthesis and the stabilizing feedback law.

The stabilizing solution of A'P + PA - PBB'P + M = 0 is obtained from
the stable invariant subspace of the 2n x 2n Hamiltonian (real Schur
form), then polished by Newton-Kleinman iterations until the relative
Frobenius residual meets tolerance.  Every returned law is
self-certified: Hermitian, positive semidefinite, small residual, and a
strictly negative closed-loop abscissa.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .operators import LinearizedSystem, hautus_check


class RiccatiError(RuntimeError):
    pass


@dataclass(frozen=True)
class FeedbackLaw:
    """Riccati solution Pi with gain B'Pi; the applied control is u = -gain a."""

    Pi: np.ndarray
    gain: np.ndarray
    delta: float
    residual: float
    closed_loop_abscissa: float
    nu: float = np.nan

    def __post_init__(self):
        for name in ("Pi", "gain"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def m_controls(self) -> int:
        return self.gain.shape[0]

    @property
    def dim(self) -> int:
        return self.gain.shape[1]

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "m_controls": self.m_controls,
            "delta": self.delta,
            "nu": self.nu,
            "residual": self.residual,
            "closed_loop_abscissa": self.closed_loop_abscissa,
            "Pi": self.Pi.ravel(order="C").tolist(),
            "gain": self.gain.ravel(order="C").tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeedbackLaw":
        n, m = d["dim"], d["m_controls"]
        return cls(np.asarray(d["Pi"]).reshape(n, n),
                   np.asarray(d["gain"]).reshape(m, n),
                   d["delta"], d["residual"], d["closed_loop_abscissa"],
                   d.get("nu", np.nan))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "FeedbackLaw":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def lyapunov_solve(F: np.ndarray, Q: np.ndarray,
                   defect_tol: float = 1e-10) -> np.ndarray:
    """Hermitian X solving F'X + XF + Q = 0 for Hurwitz F."""
    F = np.asarray(F, dtype=float)
    Q = np.asarray(Q, dtype=float)
    abscissa = np.linalg.eigvals(F).real.max()
    if abscissa >= 0:
        raise RiccatiError(f"F is not Hurwitz (abscissa {abscissa:.3e})")
    X = scipy.linalg.solve_continuous_lyapunov(F.T, -Q)
    X = 0.5 * (X + X.T)
    qnorm = max(np.linalg.norm(Q), 1e-300)
    defect = np.linalg.norm(F.T @ X + X @ F + Q) / qnorm
    if defect > defect_tol:
        raise RiccatiError(f"Lyapunov defect {defect:.3e} exceeds {defect_tol:.1e}")
    return X


def _are_residual(A, B, M, Pi) -> float:
    R = A.T @ Pi + Pi @ A - Pi @ B @ (B.T @ Pi) + M
    denom = np.linalg.norm(M, "fro")
    return float(np.linalg.norm(R, "fro") / (denom if denom > 0 else 1.0))


def _schur_candidate(A, B, M) -> np.ndarray:
    """Stable-subspace solution from the scaled Hamiltonian pencil."""
    n = A.shape[0]
    gram = B @ B.T
    # scale Pi ~ s*Pi_tilde to balance BB' against M inside the Hamiltonian
    gnorm = np.linalg.norm(gram, "fro")
    mnorm = np.linalg.norm(M, "fro")
    s = np.sqrt(mnorm / gnorm) if (gnorm > 0 and mnorm > 0) else 1.0
    H = np.block([[A, -s * gram], [-M / s, -A.T]])
    T, Z, sdim = scipy.linalg.schur(H, sort=lambda re, im: re < 0.0)
    if sdim != n:
        raise RiccatiError(
            f"Hamiltonian stable subspace has dimension {sdim}, expected {n}; "
            "the pair may not be stabilizable")
    U11, U21 = Z[:n, :n], Z[n:, :n]
    if 1.0 / np.linalg.cond(U11) < 1e-13:
        raise RiccatiError("stable-subspace basis is numerically singular")
    Pi = s * np.linalg.solve(U11.T, U21.T).T
    return 0.5 * (Pi + Pi.T)


def _newton_refine(A, B, M, Pi, tol: float, max_iter: int = 20):
    """Newton-Kleinman polish; quadratically convergent from a stabilizing Pi."""
    res = _are_residual(A, B, M, Pi)
    for _ in range(max_iter):
        if res <= tol:
            break
        closed = A - B @ (B.T @ Pi)
        if np.linalg.eigvals(closed).real.max() >= 0:
            raise RiccatiError("Newton iterate lost closed-loop stability")
        Q = M + Pi @ B @ (B.T @ Pi)
        Pi = lyapunov_solve(closed, Q, defect_tol=1e-6)
        Pi = 0.5 * (Pi + Pi.T)
        res = _are_residual(A, B, M, Pi)
    return Pi, res


def solve_are_matrices(A: np.ndarray, B: np.ndarray, M: np.ndarray,
                       tol: float = 1e-9) -> tuple[np.ndarray, float]:
    """Stabilizing ARE solution at the matrix level: (Pi, relative residual).

    Primary route is the Hamiltonian Schur method; Newton-Kleinman serves
    both as residual polish and as the fallback path when the Schur
    subspace extraction is ill-conditioned.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    M = np.asarray(M, dtype=float)
    Pi = _schur_candidate(A, B, M)
    Pi, residual = _newton_refine(A, B, M, Pi, tol)
    if residual > tol:
        raise RiccatiError(f"ARE residual stagnated at {residual:.3e} > {tol:.1e}")
    return Pi, residual


def solve_are(sys: LinearizedSystem, tol: float = 1e-9) -> FeedbackLaw:
    """Stabilizing Riccati feedback for the delta-shifted linearization.

    Requires the Hautus test to pass and M positive definite.
    """
    hautus = hautus_check(sys)
    if not hautus.passed:
        raise RiccatiError(
            f"system fails the Hautus test ({hautus.unstable_count} modes "
            f"above -delta, min |B*phi| = {hautus.bstar_norms.min() if hautus.bstar_norms.size else 0.0:.3e})")
    if np.linalg.eigvalsh(sys.M).min() <= 0:
        raise RiccatiError("cost weight M must be positive definite")
    Pi, residual = solve_are_matrices(sys.A, sys.B, sys.M, tol)

    gain = sys.B.T @ Pi
    abscissa = float(np.linalg.eigvals(sys.A - sys.B @ gain).real.max())

    # self-certification of the FeedbackLaw invariants
    pnorm = np.linalg.norm(Pi, 2)
    sym_defect = np.linalg.norm(Pi - Pi.T) / max(pnorm, 1e-300)
    if sym_defect > 1e-10:
        raise RiccatiError(f"Pi symmetry defect {sym_defect:.3e}")
    min_eig = float(np.linalg.eigvalsh(Pi).min())
    if min_eig < -1e-10 * pnorm:
        raise RiccatiError(f"Pi indefinite (min eigenvalue {min_eig:.3e})")
    if abscissa >= 0:
        raise RiccatiError(f"closed loop not stable (abscissa {abscissa:.3e})")
    return FeedbackLaw(Pi, gain, sys.delta, residual, abscissa, sys.nu)


def apply_feedback(law: FeedbackLaw, a: np.ndarray) -> np.ndarray:
    """Physical control u = -B'Pi y evaluated on state coordinates.

    The exponential weight of the shifted problem cancels against the
    shifted state, so the same gain acts on the physical coordinates.
    """
    a = np.asarray(a, dtype=float)
    if a.shape != (law.dim,):
        raise RiccatiError(f"state has shape {a.shape}, expected ({law.dim},)")
    return -(law.gain @ a)
