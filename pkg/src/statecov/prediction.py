"""Optimal one-step prediction and postdiction from a state-covariance.

The gain Gamma minimizes Gamma R Gamma* in the positive-semidefinite order
over the affine set Gamma B = I; the minimum Omega is the error variance of
one-step prediction of the driving input.  Postdiction (prediction backwards
in time) is the same problem with B replaced by C*.  When the error variance
vanishes the covariance pins down a unique, purely deterministic input
spectrum; the singleton test and the line extraction below detect and
recover that case.
"""

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import ConsistencyError, ToleranceAmbiguityError

GAIN_TOL = 1e-10
UNIT_BAND = 1e-7


@dataclass(frozen=True)
class PredictorSolution:
    gamma: np.ndarray
    omega: np.ndarray
    method: str                       # full_rank | pseudo_inverse
    unique: bool
    epsilon_check: dict = field(repr=False, default_factory=dict)


@dataclass(frozen=True)
class SingletonReport:
    is_singleton: bool
    gap_forward: float
    gap_backward: float | None
    witness_forward: float
    witness_backward: float | None


@dataclass(frozen=True)
class SpectralLine:
    theta: float
    V: np.ndarray                     # m x r, orthonormal columns
    rho: np.ndarray                   # r x r, Hermitian positive definite

    @property
    def mass(self):
        return self.V @ self.rho @ self.V.conj().T


def _min_gain(R, B, rank_tol):
    """Minimizing gain and minimal value of Gamma R Gamma* s.t. Gamma B = I.

    Returns (gamma, omega, method, unique).  Handles singular R through
    pseudo-inverses; the full-rank branch uses the closed form
    Omega = (B* R^{-1} B)^{-1}, Gamma = Omega B* R^{-1}.
    """
    n = R.shape[0]
    m = B.shape[1]
    norm = max(float(np.linalg.norm(R, 2)), 1.0)
    values, _ = linalg.herm_eig(R)
    full_rank = values[0] > rank_tol * max(values[-1], 1.0)
    unique = linalg.numerical_rank(np.hstack([R, B]), rank_tol) == n

    if full_rank:
        Rinv_B = np.linalg.solve(R, B)
        omega = np.linalg.inv(B.conj().T @ Rinv_B)
        gamma = omega @ Rinv_B.conj().T
        method = "full_rank"
    else:
        Pi_N = linalg.null_projector(R, rank_tol)
        Rs = linalg.pinv(R, rank_tol)
        M = B.conj().T @ Pi_N @ B                    # m x m
        Ms = linalg.pinv(M, rank_tol)
        Pi_N0 = linalg.null_projector(M, rank_tol)   # kernel of M in C^m
        B1 = B @ Pi_N0
        core = B1.conj().T @ Rs @ B1
        omega = linalg.pinv(core, rank_tol)
        gamma0 = Ms @ B.conj().T @ Pi_N
        gamma = gamma0 + omega @ B1.conj().T @ Rs @ (np.eye(n) - B @ gamma0)
        method = "pseudo_inverse"

    resid = np.linalg.norm(gamma @ B - np.eye(m))
    if resid > 1e-8:
        raise ConsistencyError(f"gain constraint residual {resid:.3g}")
    omega = linalg.hermitize(gamma @ R @ gamma.conj().T)
    ocheck = np.linalg.norm(omega - linalg.hermitize(omega))
    if ocheck > 1e-8 * norm:
        raise ConsistencyError(f"variance not Hermitian: {ocheck:.3g}")
    return gamma, omega, method, unique


def _epsilon_path(R, B, rank_tol, epsilons=(1e-4, 1e-6)):
    """Regularized check path: invert R + eps * null-projector."""
    Pi_N = linalg.null_projector(R, rank_tol)
    out = {}
    for eps in epsilons:
        Reps = R + eps * Pi_N
        Rinv_B = np.linalg.solve(Reps, B)
        omega = np.linalg.inv(B.conj().T @ Rinv_B)
        gamma = omega @ Rinv_B.conj().T
        out[eps] = (gamma, linalg.hermitize(omega))
    return out

def predict_forward(cov, rank_tol=linalg.DEFAULT_RANK_TOL):
    """Optimal one-step prediction gain and error variance."""
    gamma, omega, method, unique = _min_gain(cov.R, cov.pair.B, rank_tol)
    eps = _epsilon_path(cov.R, cov.pair.B, rank_tol)
    check = {e: float(np.linalg.norm(omega - om, 2)) for e, (_, om) in eps.items()}
    return PredictorSolution(gamma=gamma, omega=omega, method=method,
                             unique=unique,
                             epsilon_check=check)


def predict_backward(cov, completion=None, rank_tol=linalg.DEFAULT_RANK_TOL):
    """Optimal postdiction gain Gamma_r (n x m) and error variance.

    The returned gain satisfies Gamma_r* C* = I and
    Omega_r = Gamma_r* R Gamma_r.
    """
    completion = completion or cov.completion
    if completion is None:
        raise ValueError("predict_backward requires an inner completion")
    Cstar = completion.C.conj().T
    gamma_t, omega, method, unique = _min_gain(cov.R, Cstar, rank_tol)
    eps = _epsilon_path(cov.R, Cstar, rank_tol)
    check = {e: float(np.linalg.norm(omega - om, 2)) for e, (_, om) in eps.items()}
    return PredictorSolution(gamma=gamma_t.conj().T, omega=omega, method=method,
                             unique=unique, epsilon_check=check)


def singleton_test(cov, completion=None, rank_tol=linalg.DEFAULT_RANK_TOL,
                   margin=1e-8):
    """Decide whether the covariance admits exactly one consistent spectrum.

    Evaluates the equivalent conditions: the directed gap from range(B) to
    null(R) below one, invertibility of B* Pi_null(R) B, and (when an inner
    completion is supplied) their output-side duals.  Raises when the
    conditions disagree near the tolerance threshold.
    """
    completion = completion or cov.completion
    R, B = cov.R, cov.pair.B
    N = linalg.null_basis(R, rank_tol)
    Pi_N = N @ N.conj().T
    B_basis = linalg.range_basis(B)
    gap_f = linalg.directed_gap(B_basis, N) if N.shape[1] else 1.0
    M_f = linalg.hermitize(B.conj().T @ Pi_N @ B)
    wit_f = float(linalg.herm_eig(M_f).values[0])
    bnorm = float(np.linalg.norm(B, 2)) ** 2
    cond_gap_f = gap_f < 1.0 - margin
    cond_wit_f = wit_f > margin * bnorm
    if cond_gap_f != cond_wit_f:
        raise ToleranceAmbiguityError(
            f"rank tolerance ambiguity: gap={gap_f:.6g}, witness={wit_f:.3g}")

    gap_b = wit_b = None
    if completion is not None:
        C = completion.C
        Cb = linalg.range_basis(C.conj().T)
        gap_b = linalg.directed_gap(Cb, N) if N.shape[1] else 1.0
        M_b = linalg.hermitize(C @ Pi_N @ C.conj().T)
        wit_b = float(linalg.herm_eig(M_b).values[0])
        cnorm = float(np.linalg.norm(C, 2)) ** 2
        cond_wit_b = wit_b > margin * cnorm
        cond_gap_b = gap_b < 1.0 - margin
        if cond_gap_b != cond_wit_b or cond_wit_b != cond_wit_f:
            raise ToleranceAmbiguityError(
                f"rank tolerance ambiguity: forward witness {wit_f:.3g},"
                f" backward witness {wit_b:.3g}, gaps ({gap_f:.6g}, {gap_b:.6g})")

    return SingletonReport(is_singleton=cond_wit_f, gap_forward=gap_f,
                           gap_backward=gap_b, witness_forward=wit_f,
                           witness_backward=wit_b)


def closed_loop_matrix(cov, rank_tol=linalg.DEFAULT_RANK_TOL):
    """(I - B Gamma) A for the optimal prediction gain."""
    sol = predict_forward(cov, rank_tol)
    A, B = cov.pair.A, cov.pair.B
    return (np.eye(cov.n) - B @ sol.gamma) @ A, sol


def _solve_line_masses(cov, thetas, V_list, resid_tol):
    """Least-squares fit of the Hermitian masses in the moment equations
    sum_l G_l V_l rho_l V_l* G_l* = R."""
    from . import system as _system
    R = cov.R
    n = cov.n
    cols = []
    shapes = []
    from .covariance import _hermitian_basis
    for theta, V in zip(thetas, V_list):
        G = _system.eval_G(cov.pair, np.exp(-1j * theta))
        GV = G @ V
        r = V.shape[1]
        shapes.append(r)
        for E in _hermitian_basis(r):
            cols.append((GV @ E @ GV.conj().T).ravel())
    Acols = np.array(cols).T                       # n^2 x total, complex
    Areal = np.vstack([Acols.real, Acols.imag])
    breal = np.concatenate([R.ravel().real, R.ravel().imag])
    coeffs, *_ = np.linalg.lstsq(Areal, breal, rcond=None)
    # unpack Hermitian masses, clip tiny negative eigenvalues
    masses = []
    pos = 0
    recon = np.zeros_like(R)
    for theta, V, r in zip(thetas, V_list, shapes):
        basis = _hermitian_basis(r)
        rho = sum(c * E for c, E in zip(coeffs[pos:pos + len(basis)], basis))
        pos += len(basis)
        rho = linalg.hermitize(rho)
        vals, vecs = linalg.herm_eig(rho)
        rho = vecs @ np.diag(np.clip(vals, 0.0, None)) @ vecs.conj().T
        G = _system.eval_G(cov.pair, np.exp(-1j * theta))
        recon += (G @ V) @ rho @ (G @ V).conj().T
        masses.append(linalg.hermitize(rho))
    resid = np.linalg.norm(recon - R)
    if resid > resid_tol * max(np.linalg.norm(R), 1.0):
        raise ConsistencyError(
            f"moment system residual {resid:.3g} exceeds tolerance")
    return masses


def line_spectrum(cov, rank_tol=linalg.DEFAULT_RANK_TOL, unit_band=None,
                  resid_tol=None, check_singleton=True):
    """Extract the spectral lines of a singleton covariance.

    Line angles are the angles of the unit-modulus eigenvalues of
    the closed-loop matrix (I - B Gamma) A, i.e. the points where the
    resolvent of the reduced spectrum has a boundary pole; direction
    matrices span the null
    space of B* Pi_null(R) (I - e^{-j theta} A)^{-1} B; masses are fitted to
    the moment equations by least squares.  Returns a list of SpectralLine,
    sorted by angle.

    ``unit_band`` (how far off the circle a pole may sit) and ``resid_tol``
    (acceptable moment-fit residual) default to scaling with ``rank_tol`` so
    that noisy, estimated covariances can be processed by loosening a single
    knob.
    """
    if unit_band is None:
        unit_band = max(UNIT_BAND, 10.0 * rank_tol)
    if resid_tol is None:
        resid_tol = max(1e-6, 10.0 * rank_tol)
    if check_singleton:
        report = singleton_test(cov, rank_tol=rank_tol)
        if not report.is_singleton:
            raise ConsistencyError(
                "covariance does not determine a unique spectrum")
    Ao, _ = closed_loop_matrix(cov, rank_tol)
    eigvals = linalg.general_eig(Ao)
    on_circle = [lam for lam in eigvals if abs(1.0 - abs(lam)) <= unit_band]
    # collapse numerically repeated eigenvalues to distinct angles
    thetas = []
    for lam in on_circle:
        # a physical sinusoid e^{j theta k} excites the resolvent at the
        # conjugate point, so the eigenvalue's own angle is the line angle
        th = float(np.angle(lam)) % (2 * np.pi)
        if not any(abs(np.angle(np.exp(1j * (th - t)))) < 1e-6 for t in thetas):
            thetas.append(th)
    thetas.sort()
    if not thetas:
        return []

    n, m = cov.n, cov.m
    Pi_N = linalg.null_projector(cov.R, rank_tol)
    B, A = cov.pair.B, cov.pair.A
    V_list = []
    for th in thetas:
        M = B.conj().T @ Pi_N @ np.linalg.solve(
            np.eye(n) - np.exp(-1j * th) * A, B)
        # absolute-scale cutoff: the matrix vanishes entirely at a true line
        _, s, Vh = np.linalg.svd(M)
        r = int(np.count_nonzero(s > max(rank_tol, 1e-8) * max(s[0], 1.0)))
        V = Vh[r:].conj().T
        if V.shape[1] == 0:
            raise ConsistencyError(
                f"no direction found at angle {th:.6g}")
        V_list.append(V)
    if sum(V.shape[1] for V in V_list) > n - m:
        raise ConsistencyError("total line rank exceeds n - m")
    masses = _solve_line_masses(cov, thetas, V_list, resid_tol)
    lines = []
    for th, V, rho in zip(thetas, V_list, masses):
        # rotate V so that rho is diagonal with decreasing positive entries
        vals, vecs = linalg.herm_eig(rho)
        order = np.argsort(vals)[::-1]
        keep = [i for i in order if vals[i] > max(rank_tol, 1e-12) * max(vals[order[0]], 1e-30)]
        Vrot = V @ vecs[:, keep]
        rho_d = np.diag(vals[keep]).astype(complex)
        lines.append(SpectralLine(theta=th, V=Vrot, rho=rho_d))
    return lines
