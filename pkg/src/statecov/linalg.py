"""Dense complex linear-algebra kernels used throughout the package.

All matrices are numpy arrays with complex128 entries.  Every routine is a
pure function; nothing here mutates its arguments.
"""

from collections import namedtuple

import numpy as np
import scipy.linalg

from .errors import DimensionError, RankDeficientError, UnstableSystemError

DEFAULT_RANK_TOL = 1e-10

EigDecomp = namedtuple("EigDecomp", ["values", "vectors"])


def as_matrix(M):
    """Coerce to a finite 2-d complex array."""
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2:
        raise DimensionError(f"expected a matrix, got ndim={M.ndim}")
    if not (np.all(np.isfinite(M.real)) and np.all(np.isfinite(M.imag))):
        raise ValueError("matrix contains NaN or Inf entries")
    return M


def hermitize(M):
    """Return the Hermitian part (M + M*)/2 of a square matrix."""
    M = as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise DimensionError("hermitize requires a square matrix")
    return 0.5 * (M + M.conj().T)


def herm_eig(M):
    """Eigendecomposition of a Hermitian matrix.

    Returns an ``EigDecomp`` with real eigenvalues in ascending order and a
    unitary matrix of eigenvectors (columns).
    """
    M = hermitize(M)
    values, vectors = np.linalg.eigh(M)
    return EigDecomp(values, vectors)


def general_eig(A):
    """Eigenvalues (with multiplicity) of a general square matrix."""
    A = as_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise DimensionError("general_eig requires a square matrix")
    return np.linalg.eigvals(A)


def spectral_radius(A):
    return float(np.max(np.abs(general_eig(A)))) if A.size else 0.0


def numerical_rank(M, tol=DEFAULT_RANK_TOL):
    """Rank of M counting singular values above tol * sigma_max."""
    M = as_matrix(M)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))


def pinv(M, tol=DEFAULT_RANK_TOL):
    """Moore-Penrose pseudo-inverse with a relative singular-value cutoff."""
    M = as_matrix(M)
    if M.size == 0 or not np.any(M):
        return M.conj().T.copy()
    return np.linalg.pinv(M, rcond=tol)


def null_basis(M, tol=DEFAULT_RANK_TOL):
    """Orthonormal basis (columns) of the null space of M."""
    M = as_matrix(M)
    n = M.shape[1]
    if not np.any(M):
        return np.eye(n, dtype=complex)
    _, s, Vh = np.linalg.svd(M)
    r = int(np.count_nonzero(s > tol * s[0]))
    return Vh[r:].conj().T


def range_basis(M, tol=DEFAULT_RANK_TOL):
    """Orthonormal basis (columns) of the range of M."""
    M = as_matrix(M)
    if not np.any(M):
        return np.zeros((M.shape[0], 0), dtype=complex)
    U, s, _ = np.linalg.svd(M)
    r = int(np.count_nonzero(s > tol * s[0]))
    return U[:, :r]


def null_projector(M, tol=DEFAULT_RANK_TOL):
    """Orthogonal projector onto the null space of M."""
    N = null_basis(M, tol)
    return N @ N.conj().T


def range_projector(M, tol=DEFAULT_RANK_TOL):
    """Orthogonal projector onto the range of M."""
    U = range_basis(M, tol)
    return U @ U.conj().T


def stein_solve(A, Delta, tol=1e-9):
    """Solve X - A X A* = Delta for a strictly stable A.

    X is Hermitian whenever Delta is.  Raises ``UnstableSystemError`` when
    the spectral radius of A is not strictly below one.
    """
    A = as_matrix(A)
    Delta = as_matrix(Delta)
    n = A.shape[0]
    if A.shape != (n, n) or Delta.shape != (n, n):
        raise DimensionError("stein_solve requires square matrices of equal size")
    rho = spectral_radius(A)
    if rho >= 1.0 - tol:
        raise UnstableSystemError(f"unstable A: spectral radius {rho:.6g}")
    # scipy convention: solve_discrete_lyapunov returns X with A X A* - X + Q = 0
    X = scipy.linalg.solve_discrete_lyapunov(A, Delta)
    if np.allclose(Delta, Delta.conj().T, atol=1e-13 * max(1.0, np.linalg.norm(Delta))):
        X = hermitize(X)
    return X


def directed_gap(S1, S2, tol=1e-10):
    """Directed gap between subspaces given by orthonormal basis matrices.

    Computes the operator norm of the projection onto the orthogonal
    complement of span(S2) restricted to span(S1); the result lies in [0, 1].
    """
    S1 = as_matrix(S1)
    S2 = as_matrix(S2)
    if S1.shape[0] != S2.shape[0]:
        raise DimensionError("bases live in different ambient spaces")
    for name, S in (("S1", S1), ("S2", S2)):
        if S.shape[1]:
            G = S.conj().T @ S
            if np.linalg.norm(G - np.eye(S.shape[1])) > tol * 10:
                raise RankDeficientError(f"{name} is not orthonormal")
    if S1.shape[1] == 0:
        return 0.0
    P2 = S2 @ S2.conj().T
    M = S1 - P2 @ S1
    gap = float(np.linalg.norm(M, 2))
    return min(gap, 1.0)


def matrix_sqrt_psd(M, tol=DEFAULT_RANK_TOL):
    """Hermitian square root of a positive semidefinite matrix."""
    values, vectors = herm_eig(M)
    if values.size and values[-1] > 0 and values[0] < -tol * values[-1]:
        raise ValueError("matrix is not positive semidefinite")
    root = np.sqrt(np.clip(values, 0.0, None))
    return hermitize(vectors @ np.diag(root) @ vectors.conj().T)
