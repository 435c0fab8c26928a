"""State-space input-to-state filter pairs (A, B) and their inner completions.

A ``SystemPair`` models the recursion x_k = A x_{k-1} + B u_k with a strictly
stable A, full-column-rank B, and (A, B) reachable.  The ``normalized`` flag
marks pairs satisfying A A* + B B* = I, for which a unitary completion
U = [[A, B], [C, D]] exists; the completion realizes the inner transfer
function V(z) = D + z C (I - z A)^{-1} B.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import DimensionError, RankDeficientError, UnstableSystemError

NORMALIZATION_TOL = 1e-10


@dataclass(frozen=True)
class SystemPair:
    A: np.ndarray
    B: np.ndarray
    n: int
    m: int
    normalized: bool = False

    def __post_init__(self):
        object.__setattr__(self, "A", linalg.as_matrix(self.A))
        object.__setattr__(self, "B", linalg.as_matrix(self.B))


@dataclass(frozen=True)
class InnerCompletion:
    """Output pair (C, D) making [[A, B], [C, D]] unitary."""

    C: np.ndarray
    D: np.ndarray
    pair: SystemPair = field(repr=False)


def validate_pair(A, B):
    """Return a dict of diagnostics for the standing assumptions on (A, B)."""
    A = linalg.as_matrix(A)
    B = linalg.as_matrix(B)
    n = A.shape[0]
    m = B.shape[1]
    report = {"n": n, "m": m}
    if A.shape != (n, n) or B.shape[0] != n:
        raise DimensionError(f"inconsistent shapes A={A.shape} B={B.shape}")
    report["rank_B"] = linalg.numerical_rank(B)
    report["spectral_radius"] = linalg.spectral_radius(A)
    ctrb = np.hstack([np.linalg.matrix_power(A, k) @ B for k in range(n)])
    report["rank_ctrb"] = linalg.numerical_rank(ctrb)
    report["full_rank_B"] = report["rank_B"] == m
    report["reachable"] = report["rank_ctrb"] == n
    report["stable"] = report["spectral_radius"] < 1.0
    gram_defect = np.linalg.norm(A @ A.conj().T + B @ B.conj().T - np.eye(n))
    report["normalization_defect"] = float(gram_defect)
    return report


def new_pair(A, B):
    """Construct a validated SystemPair, raising on any failed assumption."""
    report = validate_pair(A, B)
    if not report["full_rank_B"]:
        raise RankDeficientError(
            f"rank(B) = {report['rank_B']} < m = {report['m']}")
    if not report["stable"]:
        raise UnstableSystemError(
            f"spectral radius {report['spectral_radius']:.6g} >= 1")
    if not report["reachable"]:
        raise RankDeficientError(
            f"(A, B) not reachable: controllability rank {report['rank_ctrb']}"
            f" < n = {report['n']}")
    normalized = report["normalization_defect"] <= NORMALIZATION_TOL
    return SystemPair(A=linalg.as_matrix(A), B=linalg.as_matrix(B),
                      n=report["n"], m=report["m"], normalized=normalized)


def controllability_gramian(pair):
    """Solution P of P - A P A* = B B*; positive definite by reachability."""
    return linalg.stein_solve(pair.A, pair.B @ pair.B.conj().T)


def normalize(pair):
    """Rescale the state basis so that A A* + B B* = I.

    Uses T = P^{1/2} with P the controllability Gramian: the returned pair is
    (T^{-1} A T, T^{-1} B).
    """
    if pair.normalized:
        return pair
    P = controllability_gramian(pair)
    T = linalg.matrix_sqrt_psd(P)
    Tinv = np.linalg.inv(T)
    return new_pair(Tinv @ pair.A @ T, Tinv @ pair.B)


def inner_complete(pair):
    """Complete a normalized pair to a unitary matrix [[A, B], [C, D]].

    The rows of [C D] span the orthogonal complement of the row space of
    [A B]; the completion is made deterministic by a QR factorization with
    nonnegative real diagonal.
    """
    if not pair.normalized:
        raise ValueError("inner_complete requires a normalized pair")
    n, m = pair.n, pair.m
    top = np.hstack([pair.A, pair.B])            # n x (n+m), orthonormal rows
    comp = linalg.null_basis(top)                # (n+m) x m, kernel of top
    if comp.shape[1] != m:
        raise RankDeficientError("orthogonal complement has wrong dimension")
    # fix the unitary gauge: QR with positive real diagonal of R
    Q, R = np.linalg.qr(comp)
    phases = np.diag(R).copy()
    phases[np.abs(phases) < 1e-14] = 1.0
    Q = Q * (phases / np.abs(phases)).conj()
    CD = Q.conj().T                              # m x (n+m)
    C, D = CD[:, :n], CD[:, n:]
    if linalg.numerical_rank(C) != m:
        raise RankDeficientError("completion C is rank deficient")
    return InnerCompletion(C=C, D=D, pair=pair)


def unitary_matrix(completion):
    pair = completion.pair
    return np.block([[pair.A, pair.B], [completion.C, completion.D]])


def eval_G(pair, z):
    """Input-to-state transfer function G(z) = (I - z A)^{-1} B."""
    n = pair.n
    M = np.eye(n) - z * pair.A
    if linalg.numerical_rank(M) < n:
        raise ValueError(f"resolvent singular at z = {z}")
    return np.linalg.solve(M, pair.B)


def eval_V(completion, z):
    """Inner function V(z) = D + z C (I - z A)^{-1} B."""
    return completion.D + z * completion.C @ eval_G(completion.pair, z)


def eval_Gr(completion, z):
    """Dual kernel G_r(z) = (z I - A*)^{-1} C*."""
    pair = completion.pair
    M = z * np.eye(pair.n) - pair.A.conj().T
    if linalg.numerical_rank(M) < pair.n:
        raise ValueError(f"dual resolvent singular at z = {z}")
    return np.linalg.solve(M, completion.C.conj().T)


def block_toeplitz_pair(m, lags):
    """Companion (block down-shift) pair whose state-covariances are
    (lags+1) x (lags+1) block-Toeplitz with m x m blocks."""
    if m < 1 or lags < 1:
        raise ValueError("need m >= 1 and lags >= 1")
    blocks = lags + 1
    n = blocks * m
    A = np.zeros((n, n), dtype=complex)
    for i in range(1, blocks):
        A[i * m:(i + 1) * m, (i - 1) * m:i * m] = np.eye(m)
    B = np.zeros((n, m), dtype=complex)
    B[:m, :] = np.eye(m)
    return new_pair(A, B)


def _complex_to_pairs(M):
    return [[[float(x.real), float(x.imag)] for x in row] for row in np.asarray(M, dtype=complex)]


def _pairs_to_complex(data):
    return np.array([[complex(re, im) for re, im in row] for row in data], dtype=complex)


def pair_to_json(pair):
    """Serialize to the {"n", "m", "A", "B"} schema with [re, im] entries."""
    return json.dumps({
        "n": pair.n,
        "m": pair.m,
        "A": _complex_to_pairs(pair.A),
        "B": _complex_to_pairs(pair.B),
    })


def pair_from_json(text):
    data = json.loads(text)
    pair = new_pair(_pairs_to_complex(data["A"]), _pairs_to_complex(data["B"]))
    if pair.n != data["n"] or pair.m != data["m"]:
        raise DimensionError("declared dimensions disagree with matrices")
    return pair
