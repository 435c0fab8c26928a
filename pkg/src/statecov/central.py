"""Central positive-real spectrum of a structured state-covariance.

Given a validated covariance with optimal predictor gain Gamma and error
variance Omega, the central spectrum is the positive-real function

    F(z) = Phi(z)^{-1} Psi(z) = D_psi + z C_o (I - z A_o)^{-1} B_o

whose Hermitian part on the circle is the distinguished (maximum-entropy)
spectral density consistent with R.  This module constructs the reduced
realization, splits it into a lossless part (spectral lines) and a strictly
stable lossy part (absolutely continuous density), extracts line masses from
the boundary residues, reconstructs R by quadrature, and builds the dual
(right-sided) functions of the second kind together with the identities
coupling the two sides.

Conventions fixed by the reconstruction identity
R = (1/2pi) Int G(e^{-j theta}) d(theta) G(e^{-j theta})* d theta + line sums
(a sinusoid e^{j theta k} excites the state through G at the conjugate
point, so physical frequencies enter G with a negative sign):

* the density reported at angle theta is F(w) + F(w)* at w = e^{-j theta}
  (twice the Hermitian part), which for R > 0 equals
  Phi(w)^{-1} Omega Phi(w)^{-*} pointwise;
* a boundary eigenvalue lambda of A_o contributes a spectral line at the
  physical angle theta = angle(lambda); the resolvent pole sits at the
  reciprocal point 1/lambda on the circle;
* the line mass is Herm{ (1/lambda) C1 B1 } assembled from the boundary
  partition of the diagonalized realization.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import covariance as _covariance
from . import linalg, prediction, system
from .errors import ConsistencyError, DimensionError
from .prediction import SpectralLine

UNIT_BAND = 1e-7
IDENTITY_TOL = 1e-8
GRID_POINTS = 128


@dataclass(frozen=True)
class Realization:
    """State-space data of the m x m transfer function D + C z (I - zA)^{-1} B."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    @property
    def order(self):
        return self.A.shape[0]

    def eval(self, z):
        if self.order == 0:
            return self.D.copy()
        M = np.eye(self.order) - z * self.A
        return self.D + z * self.C @ np.linalg.solve(M, self.B)


@dataclass(frozen=True)
class LosslessPart:
    """Boundary (lossless) component with its positive-real-lemma certificate."""

    realization: Realization
    P: np.ndarray
    boundary_eigenvalues: np.ndarray
    kyp_residual: float


@dataclass
class CentralSpectrum:
    """Reduced realization of the central spectrum bound to its covariance."""

    cov: _covariance.StructuredCovariance
    gamma: np.ndarray
    omega: np.ndarray
    D_psi: np.ndarray
    A_o: np.ndarray
    B_o: np.ndarray
    C_o: np.ndarray
    quadratic_residual: float
    displacement_residual: float
    inverse_closed_form: bool
    _split: tuple | None = field(default=None, repr=False)

    @property
    def pair(self):
        return self.cov.pair

    def eval_Phi(self, z):
        pair = self.pair
        return self.gamma @ np.linalg.solve(np.eye(pair.n) - z * pair.A, pair.B)

    def eval_Psi(self, z):
        pair = self.pair
        AHs = pair.A @ self.cov.H.conj().T
        return self.D_psi - z * self.gamma @ np.linalg.solve(
            np.eye(pair.n) - z * pair.A, AHs)

    def eval_F(self, z):
        n = self.pair.n
        M = np.eye(n) - z * self.A_o
        return self.D_psi + z * self.C_o @ np.linalg.solve(M, self.B_o)

    def eval_Phi_inv(self, z):
        """Inverse of Phi through the closed-loop resolvent, with a direct
        solve as fallback when the closed form failed its admission check."""
        if self.inverse_closed_form:
            n = self.pair.n
            M = np.eye(n) - z * self.A_o
            return np.eye(self.pair.m) - z * self.gamma @ self.pair.A @ (
                np.linalg.solve(M, self.pair.B))
        return np.linalg.inv(self.eval_Phi(z))


def _unit_grid(count):
    return np.exp(2j * np.pi * np.arange(count) / count)


def central_spectrum(cov, rank_tol=linalg.DEFAULT_RANK_TOL,
                     grid=GRID_POINTS, check_tol=IDENTITY_TOL):
    """Build the reduced realization of the central spectrum and verify its
    defining identities on a unit-circle grid."""
    pair = cov.pair
    A, B, R, H = pair.A, pair.B, cov.R, cov.H
    n, m = pair.n, pair.m
    sol = prediction.predict_forward(cov, rank_tol=rank_tol)
    gamma, omega = sol.gamma, sol.omega
    D_psi = -gamma @ (H.conj().T @ B.conj().T - R) @ B @ np.linalg.inv(
        B.conj().T @ B)
    A_o = (np.eye(n) - B @ gamma) @ A
    B_o = B @ D_psi + H.conj().T
    C_o = -gamma @ A

    moduli = np.abs(linalg.general_eig(A_o))
    if moduli.size and moduli.max() > 1.0 + UNIT_BAND:
        raise ConsistencyError(
            f"closed-loop eigenvalue outside the closed unit disc:"
            f" |lambda| = {moduli.max():.9g}")

    spec = CentralSpectrum(
        cov=cov, gamma=gamma, omega=omega, D_psi=D_psi,
        A_o=A_o, B_o=B_o, C_o=C_o,
        quadratic_residual=0.0, displacement_residual=0.0,
        inverse_closed_form=True)

    quad = 0.0
    inv_err = 0.0
    for z in _unit_grid(grid):
        Phi = spec.eval_Phi(z)
        Psi = spec.eval_Psi(z)
        quad = max(quad, np.linalg.norm(
            Psi @ Phi.conj().T + Phi @ Psi.conj().T - omega))
        closed = np.eye(m) - z * gamma @ A @ np.linalg.solve(
            np.eye(n) - z * A_o, B)
        inv_err = max(inv_err, np.linalg.norm(Phi @ closed - np.eye(m)))
    disp = float(np.linalg.norm(
        R - B @ omega @ B.conj().T - A_o @ R @ A_o.conj().T))

    spec.quadratic_residual = float(quad)
    spec.displacement_residual = disp
    spec.inverse_closed_form = bool(inv_err <= 1e-9)

    scale = max(float(np.linalg.norm(R, 2)), 1.0)
    if quad > check_tol * scale:
        raise ConsistencyError(
            f"first/second-kind quadratic identity residual {quad:.3g}"
            f" exceeds {check_tol:.1g} (scale {scale:.3g})")
    if disp > check_tol * scale:
        raise ConsistencyError(
            f"closed-loop displacement residual {disp:.3g} exceeds tolerance")
    return spec


def _group_by_angle(values, tol=1e-6):
    """Group indices of unit-modulus eigenvalues by angle."""
    groups = []
    for i, lam in enumerate(values):
        for g in groups:
            if abs(np.angle(values[g[0]] / lam)) < tol:
                g.append(i)
                break
        else:
            groups.append([i])
    return groups


def lossless_split(spec, unit_band=UNIT_BAND, check_tol=IDENTITY_TOL,
                   cond_limit=1e8):
    """Split the central spectrum into lossless and strictly stable parts.

    A Schur form of A_o sorted by distance of the eigenvalues from the unit
    circle isolates the boundary invariant subspace; a Sylvester equation
    decouples it from the stable block, and diagonalization makes the
    boundary state matrix exactly unitary.  The positive-real-lemma
    certificate P is recovered per boundary frequency and the lossless
    feedthrough is D1 = B1* P B1 / 2.  Returns (LosslessPart, Realization).
    """
    if spec._split is not None:
        return spec._split
    n, m = spec.pair.n, spec.pair.m
    A_o = spec.A_o

    T, Z, sdim = scipy.linalg.schur(
        A_o.astype(complex), output="complex",
        sort=lambda lam: abs(abs(lam) - 1.0) <= unit_band)

    if sdim == 0:
        lossy = Realization(A=A_o.copy(), B=spec.B_o.copy(),
                            C=spec.C_o.copy(), D=spec.D_psi.copy())
        empty = Realization(
            A=np.zeros((0, 0), dtype=complex), B=np.zeros((0, m), dtype=complex),
            C=np.zeros((m, 0), dtype=complex), D=np.zeros((m, m), dtype=complex))
        part = LosslessPart(realization=empty, P=np.zeros((0, 0), dtype=complex),
                            boundary_eigenvalues=np.zeros(0, dtype=complex),
                            kyp_residual=0.0)
        spec._split = (part, lossy)
        return spec._split

    T11, T12, T22 = T[:sdim, :sdim], T[:sdim, sdim:], T[sdim:, sdim:]
    if sdim < n:
        Y = scipy.linalg.solve_sylvester(T11, -T22, -T12)
    else:
        Y = np.zeros((sdim, 0), dtype=complex)
    w, Vv = np.linalg.eig(T11)
    if np.linalg.cond(Vv) > cond_limit:
        raise ConsistencyError(
            "non-simple boundary pole: boundary block is not diagonalizable")
    decouple = np.block([
        [np.eye(sdim), Y],
        [np.zeros((n - sdim, sdim)), np.eye(n - sdim)],
    ])
    Tfull = Z @ decouple @ scipy.linalg.block_diag(Vv, np.eye(n - sdim))
    Tinv = np.linalg.inv(Tfull)

    lams = w / np.abs(w)                      # snap to the circle exactly
    A1 = np.diag(lams)
    B1 = (Tinv @ spec.B_o)[:sdim]
    C1 = (spec.C_o @ Tfull)[:, :sdim]
    A2 = T22.copy()
    B2 = (Tinv @ spec.B_o)[sdim:]
    C2 = (spec.C_o @ Tfull)[:, sdim:]

    # positive-real-lemma certificate: P block-diagonal over equal-frequency
    # groups, from C1* = A1* P B1
    P = np.zeros((sdim, sdim), dtype=complex)
    for g in _group_by_angle(lams):
        idx = np.array(g)
        lam = lams[idx[0]]
        Cg = C1[:, idx].conj().T              # r x m
        Bg = B1[idx, :]                       # r x m
        P[np.ix_(idx, idx)] = lam * Cg @ linalg.pinv(Bg)
    P = linalg.hermitize(P)
    vals = np.linalg.eigvalsh(P) if sdim else np.zeros(0)
    kyp = max(
        float(np.linalg.norm(P - A1.conj().T @ P @ A1)),
        float(np.linalg.norm(C1.conj().T - A1.conj().T @ P @ B1)),
    )
    D1 = linalg.hermitize(0.5 * B1.conj().T @ P @ B1)
    kyp = max(kyp, float(np.linalg.norm(D1 + D1.conj().T - B1.conj().T @ P @ B1)))
    scale = max(float(np.linalg.norm(spec.cov.R, 2)), 1.0)
    if kyp > check_tol * scale:
        raise ConsistencyError(
            f"positive-real-lemma residual {kyp:.3g} exceeds tolerance")
    if vals.size and vals[0] < -check_tol * scale:
        raise ConsistencyError(
            f"lossless certificate P has negative eigenvalue {vals[0]:.3g}")

    lossless = Realization(A=A1, B=B1, C=C1, D=D1)
    lossy = Realization(A=A2, B=B2, C=C2, D=spec.D_psi - D1)
    if A2.size and linalg.spectral_radius(A2) >= 1.0 - unit_band:
        raise ConsistencyError("lossy part is not strictly stable")

    # lossless means vanishing Hermitian part away from the poles
    herm_max = 0.0
    for z in _unit_grid(37):
        if np.min(np.abs(z * lams - 1.0)) < 1e-3:
            continue
        F1 = lossless.eval(z)
        herm_max = max(herm_max, np.linalg.norm(F1 + F1.conj().T))
    if herm_max > 1e-7 * scale:
        raise ConsistencyError(
            f"boundary part is not lossless: Hermitian part {herm_max:.3g}")

    part = LosslessPart(realization=lossless, P=P,
                        boundary_eigenvalues=lams, kyp_residual=float(kyp))
    spec._split = (part, lossy)
    return spec._split


def residues(lossless, mass_tol=1e-8):
    """Spectral lines from the boundary residues of the lossless part.

    The boundary eigenvalue lambda places a pole of the spectrum at the
    reciprocal point 1/lambda, seen at the physical angle theta = arg lambda;
    the line mass is the Hermitian part of (1/lambda) C1 B1 restricted to
    the eigenvalue's partition.
    Returns SpectralLine entries sorted by angle.
    """
    real = lossless.realization
    lams = lossless.boundary_eigenvalues
    if lams.size == 0:
        return []
    lines = []
    for g in _group_by_angle(lams):
        idx = np.array(g)
        pole = 1.0 / lams[idx[0]]
        # physical line angle: conjugate of the pole's angle
        theta = float(np.angle(lams[idx[0]])) % (2 * np.pi)
        X = pole * real.C[:, idx] @ real.B[idx, :]
        M = linalg.hermitize(X)
        vals, vecs = linalg.herm_eig(M)
        if vals.size and vals[0] < -mass_tol * max(1.0, abs(vals[-1])):
            raise ConsistencyError(
                f"negative line mass {vals[0]:.3g} at angle {theta:.6g}")
        keep = [i for i in range(len(vals) - 1, -1, -1)
                if vals[i] > mass_tol * max(abs(vals[-1]), 1e-30)]
        V = vecs[:, keep]
        rho = np.diag(vals[keep]).astype(complex)
        lines.append(SpectralLine(theta=theta, V=V, rho=rho))
    lines.sort(key=lambda line: line.theta)
    return lines


def density(spec, thetas):
    """Absolutely continuous part of the spectrum on a grid of angles.

    Evaluates the lossy component only; the lossless component carries
    point masses and contributes nothing to the density.  Values are
    normalized so that (1/2pi) Int G d G* dtheta recovers the lossy share
    of R; for R > 0 this equals Phi^{-1} Omega Phi^{-*} pointwise.
    """
    _, lossy = lossless_split(spec)
    out = []
    for theta in np.atleast_1d(np.asarray(thetas, dtype=float)):
        F2 = lossy.eval(np.exp(-1j * theta))
        out.append(F2 + F2.conj().T)
    return out


def reconstruct(spec, quad_order=1024):
    """Reassemble R from the density quadrature plus the spectral lines.

    Returns (R_tilde, relative_error).
    """
    lossless, _ = lossless_split(spec)
    pair = spec.pair
    n = pair.n
    thetas = 2 * np.pi * np.arange(quad_order) / quad_order
    R_tilde = np.zeros((n, n), dtype=complex)
    for theta, d in zip(thetas, density(spec, thetas)):
        G = system.eval_G(pair, np.exp(-1j * theta))
        R_tilde += G @ d @ G.conj().T
    R_tilde /= quad_order
    for line in residues(lossless):
        G = system.eval_G(pair, np.exp(-1j * line.theta))
        R_tilde += (G @ line.V) @ line.rho @ (G @ line.V).conj().T
    R_tilde = linalg.hermitize(R_tilde)
    rel = float(np.linalg.norm(R_tilde - spec.cov.R) /
                max(np.linalg.norm(spec.cov.R), 1e-30))
    return R_tilde, rel


@dataclass(frozen=True)
class RightFunctions:
    """Dual (right-sided) first/second-kind functions and identity residuals.

    The right functions are the central-spectrum functions of the reversed
    time arrow: the dual pair (A*, C*) with displacement factor L*.  On the
    circle they satisfy their own quadratic identity with the postdiction
    error variance Omega_r, and they cohere with the left functions through
    the inner completion:

        Herm F_dual(e^{j theta})
            = V(e^{-j theta}) Herm F(e^{-j theta}) V(e^{-j theta})*.
    """

    dual_spectrum: CentralSpectrum
    omega_left: np.ndarray
    omega_right: np.ndarray
    quadratic_residual: float
    coherence_residual: float
    omega_residual: float

    def eval_Phi_r(self, z):
        """Right first-kind function: paraconjugate of the dual Phi; on the
        circle this is the conjugate transpose of the dual evaluation."""
        return self.dual_spectrum.eval_Phi(1.0 / np.conj(z)).conj().T

    def eval_Psi_r(self, z):
        return self.dual_spectrum.eval_Psi(1.0 / np.conj(z)).conj().T


def second_kind_right(cov, completion=None, rank_tol=linalg.DEFAULT_RANK_TOL,
                      grid=GRID_POINTS, check_tol=1e-7):
    """Dual-side functions of the second kind with the two-sided identities.

    Builds the dual covariance structure (A*, C*, L*), runs the central
    construction on it, and verifies on a unit-circle grid: the dual
    quadratic identity against Omega_r, the inner-function coherence with
    the left spectrum, and the pseudo-inverse formulas for both error
    variances.  Raises ``ConsistencyError`` when any residual exceeds
    ``check_tol`` (scaled by ``‖R‖``).
    """
    if completion is None:
        completion = cov.completion
    if completion is None:
        raise ValueError("second_kind_right requires an inner completion")
    if cov.L is None:
        raise ValueError("covariance is missing its output-side factor")
    pair = cov.pair
    n, m = pair.n, pair.m
    A, B, C, R = pair.A, pair.B, completion.C, cov.R

    dual_pair = system.new_pair(A.conj().T, C.conj().T)
    dual_cov = _covariance.StructuredCovariance(
        R=R, pair=dual_pair, H=cov.L.conj().T, psd_margin=cov.psd_margin)
    left = central_spectrum(cov, rank_tol=rank_tol, grid=grid)
    dual = central_spectrum(dual_cov, rank_tol=rank_tol, grid=grid)

    Rp = linalg.pinv(R, rank_tol)
    omega_left = linalg.pinv(B.conj().T @ Rp @ B, rank_tol)
    omega_right = linalg.pinv(C @ Rp @ C.conj().T, rank_tol)
    # the pseudo-inverse closed forms hold only when the gain columns stay
    # inside the range of R; otherwise the variational solution differs and
    # the comparison is skipped
    Pi_N = linalg.null_projector(R, rank_tol)
    omega_resid = 0.0
    if np.linalg.norm(Pi_N @ B) <= rank_tol * max(1.0, np.linalg.norm(B)):
        omega_resid = float(np.linalg.norm(left.omega - omega_left))
    if np.linalg.norm(Pi_N @ C.conj().T) <= rank_tol * max(
            1.0, np.linalg.norm(C)):
        omega_resid = max(omega_resid,
                          float(np.linalg.norm(dual.omega - omega_right)))

    quad = dual.quadratic_residual
    coher = 0.0
    for z in _unit_grid(grid):
        Fd = dual.eval_F(z)
        Vz = system.eval_V(completion, np.conj(z))
        Fl = left.eval_F(np.conj(z))
        lhs = 0.5 * (Fd + Fd.conj().T)
        rhs = Vz @ (0.5 * (Fl + Fl.conj().T)) @ Vz.conj().T
        # normalize by the full function values: near a boundary pole the
        # Hermitian parts stay bounded while F itself grows, so rounding in
        # the evaluation is proportional to ||F||, not ||Herm F||
        local = max(1.0, float(np.linalg.norm(Fd)), float(np.linalg.norm(Fl)))
        coher = max(coher, float(np.linalg.norm(lhs - rhs)) / local)

    scale = max(float(np.linalg.norm(R, 2)), 1.0)
    result = RightFunctions(
        dual_spectrum=dual, omega_left=omega_left, omega_right=omega_right,
        quadratic_residual=float(quad), coherence_residual=float(coher),
        omega_residual=float(omega_resid))
    if max(quad, coher, omega_resid) > check_tol * scale:
        raise ConsistencyError(
            f"two-sided identity residuals exceed tolerance:"
            f" quadratic {quad:.3g}, coherence {coher:.3g},"
            f" variances {omega_resid:.3g}")
    return result


def interpolation_matrix(cov):
    """The matrix W with W - A W A* = H* B*; its Hermitian part doubles to R."""
    pair = cov.pair
    return linalg.stein_solve(pair.A, cov.H.conj().T @ pair.B.conj().T)


def gauge_sensitivity(cov, seed=0, grid=64):
    """Diagnostic: density change under a different valid displacement factor.

    The factor H is determined only up to H + jSB* with S Hermitian; this
    shifts the central spectrum by the skew constant jS and leaves its
    Hermitian part untouched.  Returns the maximal observed density
    difference over a grid (expected at rounding level).
    """
    pair = cov.pair
    m = pair.m
    rng = np.random.default_rng(seed)
    S = linalg.hermitize(rng.standard_normal((m, m))
                         + 1j * rng.standard_normal((m, m)))
    H_alt = cov.H + 1j * S @ pair.B.conj().T
    cov_alt = _covariance.StructuredCovariance(
        R=cov.R, pair=pair, H=H_alt, psd_margin=cov.psd_margin,
        L=cov.L, completion=cov.completion)
    base = central_spectrum(cov)
    alt = central_spectrum(cov_alt)
    diff = 0.0
    for z in _unit_grid(grid):
        Fb = base.eval_F(z)
        Fa = alt.eval_F(z)
        diff = max(diff, float(np.linalg.norm(
            (Fb + Fb.conj().T) - (Fa + Fa.conj().T))))
    return diff
