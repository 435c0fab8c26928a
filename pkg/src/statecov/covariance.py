"""Structured state-covariance admission and estimation.

A Hermitian R is a stationary state-covariance of the filter pair (A, B)
exactly when the displacement R - A R A* lies in the range of the map
H -> B H + H* B*, equivalently when the bordered rank test

    rank [[R - A R A*, B], [B*, 0]] = 2 m

passes.  This module admits candidate matrices, produces the canonical
displacement factors H (input side) and L (output side), assembles
block-Toeplitz covariances, estimates covariances from simulated input
series, and projects noisy estimates back onto the admissible set.
"""

from dataclasses import dataclass, field

import numpy as np

from . import linalg, system
from .errors import DimensionError, NotStateCovarianceError

RESIDUAL_TOL = 1e-9


@dataclass(frozen=True)
class AdmissionReport:
    psd_margin: float
    displacement_rank: int
    rank_ok: bool
    psd_ok: bool
    norm: float

    @property
    def admissible(self):
        return self.rank_ok and self.psd_ok


@dataclass(frozen=True)
class StructuredCovariance:
    """A validated state-covariance bound to its filter pair."""

    R: np.ndarray
    pair: system.SystemPair
    H: np.ndarray
    psd_margin: float
    L: np.ndarray | None = None
    completion: system.InnerCompletion | None = field(default=None, repr=False)

    @property
    def n(self):
        return self.pair.n

    @property
    def m(self):
        return self.pair.m


def displacement(R, pair):
    """Forward displacement R - A R A*."""
    return R - pair.A @ R @ pair.A.conj().T


def dual_displacement(R, pair):
    """Backward displacement R - A* R A."""
    return R - pair.A.conj().T @ R @ pair.A


def validate(R, pair, tol=linalg.DEFAULT_RANK_TOL):
    """Admission test: PSD check plus the bordered displacement rank test."""
    R = linalg.hermitize(R)
    n, m = pair.n, pair.m
    if R.shape != (n, n):
        raise DimensionError(f"R has shape {R.shape}, expected {(n, n)}")
    norm = float(np.linalg.norm(R, 2))
    values, _ = linalg.herm_eig(R)
    psd_margin = float(values[0]) if values.size else 0.0
    bordered = np.block([
        [displacement(R, pair), pair.B],
        [pair.B.conj().T, np.zeros((m, m), dtype=complex)],
    ])
    # scale-aware rank: singular values compared against the border scale
    s = np.linalg.svd(bordered, compute_uv=False)
    ref = max(s[0], 1.0) if s.size else 1.0
    disp_rank = int(np.count_nonzero(s > tol * ref))
    return AdmissionReport(
        psd_margin=psd_margin,
        displacement_rank=disp_rank,
        rank_ok=disp_rank == 2 * m,
        psd_ok=psd_margin >= -10 * tol * max(norm, 1.0),
        norm=norm,
    )


def solve_H(R, pair, tol=linalg.DEFAULT_RANK_TOL):
    """Canonical input-side displacement factor with B H + H* B* = R - A R A*.

    Uses the gauge H = B^# Delta (I - B B^# / 2) with B^# the left inverse of
    B; exact whenever the admission test passes.
    """
    R = linalg.hermitize(R)
    report = validate(R, pair, tol)
    if not report.rank_ok:
        raise NotStateCovarianceError(
            f"displacement rank {report.displacement_rank} != {2 * pair.m}:"
            " not a state-covariance of this pair")
    Delta = displacement(R, pair)
    B = pair.B
    Bsharp = np.linalg.solve(B.conj().T @ B, B.conj().T)
    H = Bsharp @ Delta @ (np.eye(pair.n) - 0.5 * B @ Bsharp)
    resid = np.linalg.norm(B @ H + H.conj().T @ B.conj().T - Delta)
    if resid > RESIDUAL_TOL * max(report.norm, 1.0):
        raise NotStateCovarianceError(
            f"displacement factor residual {resid:.3g} exceeds tolerance")
    return H


def solve_L(R, pair, completion, tol=linalg.DEFAULT_RANK_TOL):
    """Canonical output-side factor with C* L* + L C = R - A* R A."""
    R = linalg.hermitize(R)
    report = validate(R, pair, tol)
    if not report.rank_ok:
        raise NotStateCovarianceError(
            f"displacement rank {report.displacement_rank} != {2 * pair.m}:"
            " not a state-covariance of this pair")
    C = completion.C
    Delta_d = dual_displacement(R, pair)
    Csharp = C.conj().T @ np.linalg.inv(C @ C.conj().T)
    L = (np.eye(pair.n) - 0.5 * Csharp @ C) @ Delta_d @ Csharp
    resid = np.linalg.norm(C.conj().T @ L.conj().T + L @ C - Delta_d)
    if resid > RESIDUAL_TOL * max(report.norm, 1.0):
        raise NotStateCovarianceError(
            f"dual displacement residual {resid:.3g} exceeds tolerance")
    return L


def structured(R, pair, completion=None, tol=linalg.DEFAULT_RANK_TOL):
    """Validate R and bundle it with its canonical factors."""
    R = linalg.hermitize(R)
    report = validate(R, pair, tol)
    if not report.admissible:
        raise NotStateCovarianceError(
            f"admission failed: rank_ok={report.rank_ok},"
            f" psd_margin={report.psd_margin:.3g}")
    H = solve_H(R, pair, tol)
    L = solve_L(R, pair, completion, tol) if completion is not None else None
    return StructuredCovariance(R=R, pair=pair, H=H, L=L,
                                psd_margin=report.psd_margin,
                                completion=completion)


def toeplitz_assemble(blocks, tol=linalg.DEFAULT_RANK_TOL):
    """Assemble R0..Rl into the block-Toeplitz covariance with (i, j) block
    R_{j-i} (R_{-k} = R_k*), validated against the matching shift pair."""
    blocks = [linalg.as_matrix(Rk) for Rk in blocks]
    m = blocks[0].shape[0]
    lags = len(blocks) - 1
    if lags < 1:
        raise DimensionError("need at least two blocks (R0 and R1)")
    for Rk in blocks:
        if Rk.shape != (m, m):
            raise DimensionError("all blocks must be square of equal size")
    R0h = linalg.hermitize(blocks[0])
    if np.linalg.norm(R0h - blocks[0]) > 1e-12 * max(1.0, np.linalg.norm(blocks[0])):
        raise ValueError("R0 must be Hermitian")
    n = (lags + 1) * m
    R = np.zeros((n, n), dtype=complex)
    for i in range(lags + 1):
        for j in range(lags + 1):
            k = j - i
            R[i * m:(i + 1) * m, j * m:(j + 1) * m] = (
                blocks[k] if k >= 0 else blocks[-k].conj().T)
    pair = system.block_toeplitz_pair(m, lags)
    report = validate(R, pair, tol)
    if not report.psd_ok:
        raise NotStateCovarianceError(
            f"assembled matrix is not PSD: smallest eigenvalue {report.psd_margin:.3g}")
    return structured(R, pair, tol=tol)


def toeplitz_blocks(R, m):
    """Extract R0..Rl from the first block row of a block-Toeplitz matrix."""
    R = linalg.as_matrix(R)
    n = R.shape[0]
    if n % m:
        raise DimensionError("matrix size is not a multiple of the block size")
    return [R[:m, k * m:(k + 1) * m].copy() for k in range(n // m)]


def sample_covariance(series, pair, burn_in=None):
    """Empirical state covariance (1/N) sum x_k x_k* from an input series.

    Propagates x_k = A x_{k-1} + B u_k from x_0 = 0 and discards the first
    ``burn_in`` states (default 10 n).
    """
    series = np.asarray(series, dtype=complex)
    if series.ndim == 1:
        series = series[:, None]
    if series.shape[1] != pair.m:
        raise DimensionError(
            f"series has {series.shape[1]} channels, pair expects {pair.m}")
    if burn_in is None:
        burn_in = 10 * pair.n
    if series.shape[0] <= burn_in + 10 * pair.n:
        raise ValueError(
            f"series too short: {series.shape[0]} samples for burn_in={burn_in}")
    A, B = pair.A, pair.B
    x = np.zeros(pair.n, dtype=complex)
    acc = np.zeros((pair.n, pair.n), dtype=complex)
    count = 0
    for k, u in enumerate(series):
        x = A @ x + B @ u
        if k >= burn_in:
            acc += np.outer(x, x.conj())
            count += 1
    return linalg.hermitize(acc / count)


def _hermitian_basis(n):
    """Real basis of the n x n Hermitian matrices (n^2 elements)."""
    basis = []
    for i in range(n):
        E = np.zeros((n, n), dtype=complex)
        E[i, i] = 1.0
        basis.append(E)
    for i in range(n):
        for j in range(i + 1, n):
            E = np.zeros((n, n), dtype=complex)
            E[i, j] = E[j, i] = 1.0 / np.sqrt(2)
            basis.append(E)
            E = np.zeros((n, n), dtype=complex)
            E[i, j] = 1j / np.sqrt(2)
            E[j, i] = -1j / np.sqrt(2)
            basis.append(E)
    return basis


def project_to_structure(R_hat, pair, tol=linalg.DEFAULT_RANK_TOL):
    """Nearest (Frobenius) admissible covariance to a noisy Hermitian estimate.

    Enforces the linear structure constraint
    (I - Pi_B)(R - A R A*)(I - Pi_B) = 0 by least squares over the Hermitian
    matrices, clips negative eigenvalues, and re-projects once.  This repair
    step is a policy of this implementation, not part of the underlying
    characterization; reports should flag projected inputs.
    """
    R_hat = linalg.hermitize(R_hat)
    n = pair.n
    B = pair.B
    Pi_B = B @ np.linalg.solve(B.conj().T @ B, B.conj().T)
    Q = np.eye(n) - Pi_B

    basis = _hermitian_basis(n)
    constraint = lambda X: Q @ displacement(X, pair) @ Q

    # real-linear system: K maps Hermitian coords to Hermitian coords
    K = np.empty((n * n, n * n))
    for col, E in enumerate(basis):
        img = constraint(E)
        K[:, col] = [np.real(np.vdot(F, img)) for F in basis]

    def onto_constraint(X):
        img = np.array([np.real(np.vdot(F, constraint(X))) for F in basis])
        corr = np.linalg.lstsq(K, img, rcond=None)[0]
        return linalg.hermitize(X - sum(c * E for c, E in zip(corr, basis)))

    R1 = onto_constraint(R_hat)
    values, vectors = linalg.herm_eig(R1)
    if values.size and values[0] < 0:
        clipped = vectors @ np.diag(np.clip(values, 0.0, None)) @ vectors.conj().T
        R1 = onto_constraint(linalg.hermitize(clipped))
    # tiny residual negativity after re-projection is absorbed by the
    # admission tolerance
    return structured(R1, pair, tol=max(tol, 1e-8))
