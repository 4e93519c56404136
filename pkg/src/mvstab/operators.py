"""Finite-dimensional Galerkin operators on the zero-mean subspace.

Matrices are assembled in the orthonormal real trigonometric basis
{sin kx, cos kx}/sqrt(pi), k = 1..L (constant mode removed), so that the
linearization A, the control columns B and the bilinear coupling N are
real and the downstream Riccati problem is a real symmetric one.  Every
entry is an exact truncated inner product: products are dealiased and
convolutions use the convolution theorem.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .models import ModelParams, ModelSpec, make_model
from .spectral import (SpectralField, TWO_PI, convolve, differentiate,
                       field_from_real_coords, pointwise_product,
                       real_basis_coords, to_grid, wavenumbers)
from .stationary import (StationaryState, kuramoto_synchronized_state,
                         stationarity_residual)

GOLDSTONE_TOL = 1e-8


class OperatorError(ValueError):
    pass


# -- assembly ------------------------------------------------------------

def default_shapes(modes: int, m_count: int = 4) -> list[SpectralField]:
    """Low-harmonic control shape Ansatz sin(jx), cos(jx) over sqrt(4 pi).

    ``m_count = 4`` is the standard set {sin x, cos x, sin 2x, cos 2x};
    larger (even) counts extend the same pattern to higher harmonics.
    """
    if m_count < 0 or m_count > 2 * modes:
        raise OperatorError(f"m_count {m_count} outside 0..{2 * modes}")
    amp = 1.0 / np.sqrt(2.0 * TWO_PI)
    shapes = []
    for j in range(m_count):
        k, kind = j // 2 + 1, ("sin" if j % 2 == 0 else "cos")
        shapes.append(SpectralField.harmonic(modes, k, kind, amp))
    return shapes


@dataclass(frozen=True)
class LinearizedSystem:
    """Shifted linearization A = L + delta*I with control data on R^{2L}."""

    modes: int
    delta: float
    A: np.ndarray               # (2L, 2L)
    B: np.ndarray               # (2L, m)
    N: np.ndarray               # (m, 2L, 2L)
    M: np.ndarray               # (2L, 2L), nu * I
    nu: float
    basis: str
    model: ModelSpec
    state: StationaryState
    shapes: tuple
    goldstone: bool             # translation-invariant non-uniform target

    def __post_init__(self):
        for name in ("A", "B", "N", "M"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def dim(self) -> int:
        return 2 * self.modes

    @property
    def m_controls(self) -> int:
        return self.B.shape[1]

    @property
    def A_unshifted(self) -> np.ndarray:
        return self.A - self.delta * np.eye(self.dim)


def _linearized_apply(y: SpectralField, model: ModelSpec,
                      mubar: SpectralField, dv: SpectralField) -> SpectralField:
    """Flux form of the linearized drift-diffusion operator at mubar."""
    flux = (model.sigma * differentiate(y)
            + pointwise_product(y, dv)
            + pointwise_product(mubar, differentiate(convolve(model.W, y))))
    return differentiate(flux)


def _real_matrix(apply_field, modes: int) -> np.ndarray:
    dim = 2 * modes
    out = np.empty((dim, dim))
    for j in range(dim):
        e = np.zeros(dim)
        e[j] = 1.0
        out[:, j] = real_basis_coords(apply_field(field_from_real_coords(e, modes)))
    return out


def real_trig_transform(modes: int) -> np.ndarray:
    """Unitary map from real trig coordinates to orthonormal complex modes.

    Rows are ordered k = -L..-1, 1..L; Q @ a gives the coefficients over
    exp(ikx)/sqrt(2 pi), and Q M_real Q^H transports operator matrices
    between the two formulations.
    """
    L = modes
    Q = np.zeros((2 * L, 2 * L), dtype=complex)
    s = 1.0 / np.sqrt(2.0)
    for k in range(1, L + 1):
        js, jc = 2 * (k - 1), 2 * (k - 1) + 1
        Q[L + k - 1, js] = -1j * s   # row for +k
        Q[L + k - 1, jc] = s
        Q[L - k, js] = 1j * s        # row for -k
        Q[L - k, jc] = s
    return Q


def assemble(model: ModelSpec, state: StationaryState,
             shapes: list[SpectralField] | None = None,
             delta: float = 1.0, nu: float = 1e6,
             residual_tol: float = 1e-6) -> LinearizedSystem:
    """Build A, B, N_j and M = nu*I around a certified stationary state."""
    if shapes is None:
        shapes = default_shapes(model.modes)
    L = model.modes
    if state.modes != L or any(s.modes != L for s in shapes):
        raise OperatorError("model, state, and shapes must share the truncation")
    if delta < 0 or nu <= 0:
        raise OperatorError("require delta >= 0 and nu > 0")
    res = stationarity_residual(state.mubar, model)
    if res > residual_tol:
        raise OperatorError(
            f"linearization point is not stationary (residual {res:.3e} "
            f"> {residual_tol:.1e})")

    mubar = state.mubar
    dv = differentiate(model.V + convolve(model.W, mubar))
    lmat = _real_matrix(lambda y: _linearized_apply(y, model, mubar, dv), L)
    A = lmat + delta * np.eye(2 * L)

    m = len(shapes)
    B = np.zeros((2 * L, m))
    N = np.zeros((m, 2 * L, 2 * L))
    for j, alpha in enumerate(shapes):
        dalpha = differentiate(alpha)
        B[:, j] = real_basis_coords(
            differentiate(pointwise_product(mubar, dalpha)))
        N[j] = _real_matrix(
            lambda y, d=dalpha: differentiate(pointwise_product(y, d)), L)
    M = nu * np.eye(2 * L)

    goldstone = (not model.has_confinement) and state.branch != "uniform"
    return LinearizedSystem(L, delta, A, B, N, M, nu, "real_trig",
                            model, state, tuple(shapes), goldstone)


# -- spectra --------------------------------------------------------------

@dataclass(frozen=True)
class SpectrumReport:
    """Eigen-decomposition with biorthogonally normalized left vectors."""

    eigenvalues: np.ndarray     # sorted by descending real part
    right: np.ndarray           # unit-norm right eigenvectors (columns)
    left: np.ndarray            # scaled so left^H right = I per pair
    gap: float                  # from the unshifted operator
    unshifted: bool
    warnings: tuple = ()


def spectrum(sys: LinearizedSystem, unshifted: bool = True) -> SpectrumReport:
    """Dense nonsymmetric eigen-decomposition of the linearization.

    The spectral gap is always measured on the unshifted operator; for
    translation-invariant synchronized targets the zero translation mode
    is excluded from it.
    """
    lam, vl, vr = scipy.linalg.eig(sys.A_unshifted, left=True, right=True)
    order = np.lexsort((np.arange(lam.size), lam.imag, -lam.real))
    lam, vl, vr = lam[order], vl[:, order], vr[:, order]

    vr = vr / np.linalg.norm(vr, axis=0)
    notes = []
    pairing = np.einsum("ij,ij->j", np.conj(vl), vr)
    for i, d in enumerate(pairing):
        if abs(d) < 1e-8:
            notes.append(
                f"near-defective cluster at eigenvalue {lam[i]:.6g}: "
                f"left/right pairing {abs(d):.2e}")
        else:
            vl[:, i] = vl[:, i] / np.conj(d)

    gap_pool = lam[np.abs(lam) > GOLDSTONE_TOL] if sys.goldstone else lam
    gap = float(-np.max(gap_pool.real)) if gap_pool.size else 0.0
    if not unshifted:
        lam = lam + sys.delta
    return SpectrumReport(lam, vr, vl, gap, unshifted, tuple(notes))


@dataclass(frozen=True)
class HautusReport:
    """B* evaluated on every adjoint eigenfunction above the -delta line."""

    delta: float
    unstable_count: int
    eigenvalues: np.ndarray
    bstar_vectors: np.ndarray   # (unstable_count, m)
    bstar_norms: np.ndarray
    threshold: float
    passed: bool
    warnings: tuple = ()


def hautus_check(sys: LinearizedSystem, report: SpectrumReport | None = None,
                 threshold_factor: float = 1e-8) -> HautusReport:
    """Stabilizability test: no unstable adjoint mode annihilated by B*."""
    rep = report if report is not None else spectrum(sys, unshifted=True)
    lam = rep.eigenvalues if rep.unshifted else rep.eigenvalues - sys.delta
    unstable = np.flatnonzero(lam.real >= -sys.delta)
    bnorm = np.linalg.norm(sys.B, 2) if sys.B.size else 0.0
    threshold = threshold_factor * bnorm
    vecs = np.zeros((unstable.size, sys.m_controls), dtype=complex)
    norms = np.zeros(unstable.size)
    for row, i in enumerate(unstable):
        vecs[row] = sys.B.T @ np.conj(rep.left[:, i])
        norms[row] = np.linalg.norm(vecs[row])
    passed = bool(np.all(norms > threshold)) if unstable.size else True
    return HautusReport(sys.delta, int(unstable.size), lam[unstable],
                        vecs, norms, threshold, passed, rep.warnings)


def spectral_gap_sweep(K_values, sigma: float, modes: int = 64) -> list[dict]:
    """Gap of the synchronized-branch linearization per coupling value.

    Each row reports the computed gap; a slot for an externally supplied
    analytic lower bound is left to downstream writers.
    """
    rows = []
    for K in K_values:
        model = make_model(ModelParams.kuramoto(K, sigma), modes)
        state = kuramoto_synchronized_state(model, K)
        sys = assemble(model, state, shapes=[], delta=0.0, nu=1.0,
                       residual_tol=1e-6)
        rep = spectrum(sys, unshifted=True)
        rows.append({"K": float(K), "gap": rep.gap, "residual": state.residual,
                     "branch": state.branch})
    return rows


# -- shape functions from adjoint eigenfunctions ---------------------------

def _elliptic_matrix(mubar: SpectralField) -> np.ndarray:
    """Matrix of alpha -> div(mubar grad alpha) on the nonzero complex modes."""
    L = mubar.modes
    ks = np.concatenate([np.arange(-L, 0), np.arange(1, L + 1)])
    T = np.empty((2 * L, 2 * L), dtype=complex)
    for col, k in enumerate(ks):
        c = np.zeros(2 * L + 1, dtype=complex)
        c[L + k] = 1.0
        mode = SpectralField(L, c, is_real=False)
        img = differentiate(pointwise_product(mubar, differentiate(mode)))
        T[:, col] = np.delete(img.coeffs, L)
    return T


def solve_shape_from_eigenfunction(state: StationaryState,
                                   psi: SpectralField,
                                   defect_tol: float = 1e-8) -> SpectralField:
    """Zero-mean alpha solving div(mubar grad alpha) = psi.

    psi must have zero mean (solvability); the defect of the returned
    shape is verified by substitution.
    """
    L = state.modes
    if psi.modes != L:
        raise OperatorError("psi truncation does not match the state")
    scale = max(psi.norm_l2(), 1e-30)
    if abs(complex(TWO_PI * psi.coeffs[L])) > 1e-10 * scale:
        raise OperatorError("psi has nonzero mean; elliptic problem unsolvable")

    T = _elliptic_matrix(state.mubar)
    rhs = np.delete(psi.coeffs, L)
    try:
        sol = np.linalg.solve(T, rhs)
    except np.linalg.LinAlgError as exc:
        raise OperatorError(f"elliptic system singular beyond zero mode: {exc}")
    c = np.insert(sol, L, 0.0)
    if psi.is_real:
        c = 0.5 * (c + np.conj(c[::-1]))
    alpha = SpectralField(L, c, is_real=psi.is_real)
    defect_field = differentiate(
        pointwise_product(state.mubar, differentiate(alpha))) - psi
    defect = defect_field.norm_l2()
    if defect > defect_tol * max(1.0, scale):
        raise OperatorError(f"shape defect {defect:.3e} exceeds {defect_tol:.1e}")
    return alpha


def shapes_from_unstable_eigenfunctions(sys: LinearizedSystem) -> list[SpectralField]:
    """Solve the elliptic shape equation for every mode above -delta.

    Complex eigenpairs contribute their real and imaginary parts, so the
    returned shapes are real fields.
    """
    rep = spectrum(sys, unshifted=True)
    idx = np.flatnonzero(rep.eigenvalues.real >= -sys.delta)
    L = sys.modes
    shapes: list[SpectralField] = []
    seen: list[np.ndarray] = []
    for i in idx:
        vec = rep.right[:, i]
        for part in (vec.real, vec.imag):
            if np.linalg.norm(part) < 1e-10:
                continue
            part = part / np.linalg.norm(part)
            if any(abs(part @ s) > 1.0 - 1e-8 for s in seen):
                continue
            seen.append(part)
            psi = field_from_real_coords(part, L)
            shapes.append(solve_shape_from_eigenfunction(sys.state, psi))
    return shapes


# -- Schroedinger-form verification -----------------------------------------

@dataclass(frozen=True)
class SchrodingerReport:
    n_grid: int
    matching_error: float           # max_i min_j |lam_i(H) + lam_j(L)|
    hs_norm: float                  # Hilbert-Schmidt norm of the integral part
    hs_norm_refined: float          # same on the doubled grid
    h_eigenvalues: np.ndarray       # lowest n_eigs of the grid operator
    galerkin_eigenvalues: np.ndarray
    conjugation_hermiticity: float  # defect of the mode-side conjugated operator

    @property
    def hs_drift(self) -> float:
        return abs(self.hs_norm_refined - self.hs_norm)


def _spectral_d2(n: int) -> np.ndarray:
    k = np.fft.fftfreq(n, d=1.0 / n)
    F = np.fft.fft(np.eye(n), axis=0)
    return np.real(np.fft.ifft(-(k ** 2)[:, None] * F, axis=0))


def _grid_schrodinger(model: ModelSpec, mubar: SpectralField, n: int):
    """Grid discretization of the transformed operator and its kernel part."""
    v = model.V + convolve(model.W, mubar)
    vp = to_grid(differentiate(v), n).values
    vpp = to_grid(differentiate(differentiate(v)), n).values
    psi_pot = vp ** 2 / (4.0 * model.sigma) - 0.5 * vpp
    h_loc = -model.sigma * _spectral_d2(n) + np.diag(psi_pot)

    mu = to_grid(mubar, n).values
    if mu.min() <= 0:
        raise OperatorError("stationary density must be strictly positive")
    mup = to_grid(differentiate(mubar), n).values
    wp = to_grid(differentiate(model.W), n).values
    wpp = to_grid(differentiate(differentiate(model.W)), n).values
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    root = np.sqrt(mu)
    kernel = -(root[None, :] / root[:, None]) * (
        mup[:, None] * wp[idx] + mu[:, None] * wpp[idx])
    h = TWO_PI / n
    hs = float(np.sqrt(np.sum(kernel ** 2) * h * h))
    return h_loc + kernel * h, hs


def _full_complex_matrix(apply_field, modes: int) -> np.ndarray:
    dim = 2 * modes + 1
    out = np.empty((dim, dim), dtype=complex)
    for j in range(dim):
        c = np.zeros(dim, dtype=complex)
        c[j] = 1.0
        out[:, j] = apply_field(SpectralField(modes, c, is_real=False)).coeffs
    return out


def _conjugated_mode_matrix(model: ModelSpec, mubar: SpectralField,
                            n: int) -> np.ndarray:
    """Compression of the ground-state-transformed operator onto the
    orthonormal Fourier basis, entry by entry via weak-form quadrature.

    H_ik = <H phi_k, phi_i> with H = -U L U^{-1}; evaluating the weak form
    on a fine grid keeps the compression of the (self-adjoint, when the
    interaction vanishes) operator Hermitian to rounding.
    """
    L = mubar.modes
    x = TWO_PI * np.arange(n) / n
    h = TWO_PI / n
    k = wavenumbers(L)
    mu = to_grid(mubar, n).values
    if mu.min() <= 0:
        raise OperatorError("stationary density must be strictly positive")
    mup = to_grid(differentiate(mubar), n).values
    vbarp = to_grid(differentiate(model.V + convolve(model.W, mubar)), n).values
    root = np.sqrt(mu)

    phases = np.exp(1j * np.outer(x, k)) / np.sqrt(TWO_PI)   # (n, 2L+1)
    F = root[:, None] * phases                               # sqrt(mu) phi_k
    Fp = (mup / (2.0 * root))[:, None] * phases + 1j * k[None, :] * F
    # interaction transport of the lifted basis functions
    wp = to_grid(differentiate(model.W), n).values
    conv_mat = wp[(np.arange(n)[:, None] - np.arange(n)[None, :]) % n] * h
    convF = conv_mat @ F
    flux = model.sigma * Fp + vbarp[:, None] * F + mu[:, None] * convF

    G = phases / root[:, None]                               # phi_i / sqrt(mu)
    Gp = (1j * k[None, :] - (mup / (2.0 * mu))[:, None]) * G
    # <L y_k, conj side>: integration by parts leaves + flux . grad(test)
    return (np.conj(Gp).T @ flux) * h


def schrodinger_check(model: ModelSpec, state: StationaryState,
                      n_grid: int = 256, n_eigs: int = 10) -> SchrodingerReport:
    """Cross-validate the Galerkin linearization against its grid twin.

    Discretizes the ground-state-transformed operator (local Schroedinger
    part by spectral differentiation, integral part by Nystroem
    quadrature) and reports how well its low-lying spectrum matches the
    negated Galerkin spectrum, the Hilbert-Schmidt norm of the integral
    part under grid doubling, and the Hermiticity defect of the
    mode-side conjugated operator.
    """
    mubar = state.mubar
    L = state.modes
    h_mat, hs = _grid_schrodinger(model, mubar, n_grid)
    _, hs2 = _grid_schrodinger(model, mubar, 2 * n_grid)
    lam_h = np.linalg.eigvals(h_mat)
    lam_h = lam_h[np.argsort(lam_h.real)][:n_eigs]

    dv = differentiate(model.V + convolve(model.W, mubar))
    lfull = _full_complex_matrix(
        lambda y: _linearized_apply(y, model, mubar, dv), L)
    lam_l = np.linalg.eigvals(lfull)

    matching = float(max(np.min(np.abs(lh + lam_l)) for lh in lam_h))

    h_modes = _conjugated_mode_matrix(model, mubar, n_grid)
    herm = float(np.linalg.norm(h_modes - h_modes.conj().T)
                 / max(np.linalg.norm(h_modes), 1e-30))

    return SchrodingerReport(n_grid, matching, hs, hs2, lam_h, lam_l, herm)


# -- serialization -----------------------------------------------------------

def _matrix_to_dict(mat: np.ndarray) -> dict:
    return {"rows": mat.shape[0], "cols": mat.shape[1],
            "values": [float(v) for v in mat.ravel(order="C")]}


def system_to_dict(sys: LinearizedSystem) -> dict:
    """Documented JSON schema: dimension, basis label, row-major values."""
    return {
        "dimension": sys.dim,
        "modes": sys.modes,
        "basis": sys.basis,
        "delta": sys.delta,
        "nu": sys.nu,
        "goldstone": sys.goldstone,
        "A": _matrix_to_dict(sys.A),
        "B": _matrix_to_dict(sys.B),
        "M": _matrix_to_dict(sys.M),
        "N": [_matrix_to_dict(nj) for nj in sys.N],
    }


def spectrum_to_dict(rep: SpectrumReport) -> dict:
    return {
        "unshifted": rep.unshifted,
        "gap": rep.gap,
        "eigenvalues_re": rep.eigenvalues.real.tolist(),
        "eigenvalues_im": rep.eigenvalues.imag.tolist(),
        "warnings": list(rep.warnings),
    }


def save_system_json(sys: LinearizedSystem, path) -> None:
    with open(path, "w") as fh:
        json.dump(system_to_dict(sys), fh)
