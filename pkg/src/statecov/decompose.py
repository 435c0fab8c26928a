"""Convex signal-plus-noise decomposition of structured covariances.

Splits a state-covariance R into R_signal + R_noise where R_noise is the
state-covariance of the filter driven by noise alone and R_signal remains
positive semidefinite.  Supported noise models:

* white noise with (matricial) variance Q: R_noise solves the Stein
  equation R_noise - A R_noise A* = B Q B*, and the decomposition
  maximizes a linear objective (trace of R_noise, weighted trace, or
  trace of Q);
* moving-average noise of correlation range k: the noise spectrum is the
  trigonometric polynomial Herm{Q_0 + z Q_1 + ... + z^k Q_k}, whose
  nonnegativity on the circle is enforced through the positive-real-lemma
  linear matrix inequality on the k-step shift realization.

The semidefinite programs are dense and desk-scale; they are formulated
with cvxpy and solved with CLARABEL.  Every returned decomposition is
re-validated outside the solver from the raw variable values.
"""

from dataclasses import dataclass

import cvxpy as cp
import numpy as np

from . import linalg
from .errors import DimensionError, InfeasibleError, SolverError

DEFAULT_GAP = 1e-7
_OBJECTIVES = ("trace_noise", "trace_noise_weighted", "trace_q")


@dataclass(frozen=True)
class SdpProblem:
    """A maximization problem over Hermitian/complex matrix variables."""

    variables: dict
    objective: object
    constraints: list

    def __post_init__(self):
        if not self.objective.is_concave():
            raise ValueError("objective must be affine/concave")
        for c in self.constraints:
            if not c.is_dcp():
                raise ValueError(f"constraint is not convex: {c}")


@dataclass(frozen=True)
class NoiseDecomposition:
    R_signal: np.ndarray
    R_noise: np.ndarray
    noise_params: dict
    mode: str
    objective_value: float
    certificate: dict


def sdp_solve(problem, tol=DEFAULT_GAP):
    """Solve an ``SdpProblem``; returns (values dict, certificate dict).

    Raises ``InfeasibleError`` when the program is infeasible and
    ``SolverError`` when the solver stops without an accurate optimum.
    """
    prob = cp.Problem(cp.Maximize(problem.objective), problem.constraints)
    try:
        prob.solve(solver=cp.CLARABEL)
    except cp.error.SolverError as exc:
        raise SolverError(f"solver failure: {exc}") from exc
    status = prob.status
    if status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
        raise InfeasibleError("problem is infeasible", margin=None)
    if status in (cp.UNBOUNDED, cp.UNBOUNDED_INACCURATE):
        raise SolverError("problem is unbounded")
    if status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        raise SolverError(f"no convergence: solver status {status}")
    stats = prob.solver_stats
    violation = 0.0
    for c in problem.constraints:
        v = c.violation()
        violation = max(violation, float(np.max(np.atleast_1d(v))))
    gap = None
    extra = getattr(stats, "extra_stats", None)
    if extra is not None:
        info = getattr(extra, "info", extra)
        for attr in ("gap_abs", "duality_gap", "gap"):
            if hasattr(info, attr):
                gap = float(getattr(info, attr))
                break
    certificate = {
        "status": status,
        "objective": float(prob.value),
        "max_violation": violation,
        "iterations": getattr(stats, "num_iters", None),
        "duality_gap": gap,
        "solver": getattr(stats, "solver_name", "CLARABEL"),
    }
    if status == cp.OPTIMAL_INACCURATE and violation > 1e-5:
        raise SolverError(
            f"no convergence: inaccurate solution, violation {violation:.3g}")
    values = {name: np.asarray(var.value) for name, var in problem.variables.items()}
    return values, certificate


def _stein_operator(A):
    """Matrix of X -> solution of X - A X A* = (input), on column-major vec."""
    n = A.shape[0]
    return np.linalg.inv(np.eye(n * n) - np.kron(A.conj(), A))


def _herm(expr):
    return 0.5 * (expr + expr.H)


def _noise_from_Q(pair, Q):
    """Affine cvxpy expression for stein_solve(A, B Q B*)."""
    n = pair.n
    K = _stein_operator(pair.A) @ np.kron(pair.B.conj(), pair.B)
    return cp.reshape(K @ cp.vec(Q, order="F"), (n, n), order="F")


def white_decompose(cov, weight=None, objective="trace_noise", tol=DEFAULT_GAP):
    """Maximal white-noise extraction from a validated covariance.

    The variance Q of the extracted white component is the variable; the
    noise covariance is the (linear) Stein image of B Q B*.  ``objective``
    selects trace(R_noise), trace(R_noise W) for a positive definite
    weight, or trace(Q).
    """
    if objective not in _OBJECTIVES:
        raise ValueError(f"unknown objective {objective!r}")
    pair = cov.pair
    n, m = pair.n, pair.m
    Q = cp.Variable((m, m), hermitian=True, name="Q")
    Rn = _herm(_noise_from_Q(pair, Q))
    constraints = [Q >> 0, Rn >> 0, cp.Constant(cov.R) - Rn >> 0]
    if objective == "trace_noise":
        obj = cp.real(cp.trace(Rn))
    elif objective == "trace_q":
        obj = cp.real(cp.trace(Q))
    else:
        if weight is None:
            weight = np.eye(n)
        W = linalg.hermitize(weight)
        if np.linalg.eigvalsh(W)[0] <= 0:
            raise ValueError("weight must be positive definite")
        obj = cp.real(cp.trace(Rn @ cp.Constant(W)))
    values, cert = sdp_solve(
        SdpProblem(variables={"Q": Q}, objective=obj, constraints=constraints),
        tol=tol)
    Qv = linalg.hermitize(values["Q"])
    vals, vecs = linalg.herm_eig(Qv)
    Qv = vecs @ np.diag(np.clip(vals, 0.0, None)) @ vecs.conj().T
    R_noise = linalg.stein_solve(pair.A, pair.B @ Qv @ pair.B.conj().T)
    _check_split(cov.R, R_noise)
    return NoiseDecomposition(
        R_signal=linalg.hermitize(cov.R - R_noise), R_noise=R_noise,
        noise_params={"Q": Qv}, mode="white",
        objective_value=float(cert["objective"]), certificate=cert)


def _check_split(R, R_noise, tol=1e-7):
    scale = max(float(np.linalg.norm(R, 2)), 1.0)
    lo_n = np.linalg.eigvalsh(linalg.hermitize(R_noise))[0]
    lo_s = np.linalg.eigvalsh(linalg.hermitize(R - R_noise))[0]
    if lo_n < -tol * scale or lo_s < -tol * scale:
        raise SolverError(
            f"decomposition violates positivity: noise {lo_n:.3g},"
            f" signal {lo_s:.3g}")


def scalar_white(cov):
    """Largest white-noise level for scalar input: the smallest generalized
    eigenvalue of the pencil (R, R0) with R0 the pure-white covariance."""
    pair = cov.pair
    if pair.m != 1:
        raise DimensionError("scalar_white requires a single-input pair")
    R0 = linalg.stein_solve(pair.A, pair.B @ pair.B.conj().T)
    import scipy.linalg
    vals = scipy.linalg.eigh(cov.R, R0, eigvals_only=True)
    return float(vals[0])


def _shift_realization(k, m):
    """k-step block shift realization carrying Q_0 + z Q_1 + ... + z^k Q_k."""
    ns = k * m
    A_s = np.zeros((ns, ns))
    for i in range(1, k):
        A_s[i * m:(i + 1) * m, (i - 1) * m:i * m] = np.eye(m)
    B_s = np.zeros((ns, m))
    if k:
        B_s[:m] = np.eye(m)
    return A_s, B_s


def _ma_structure(pair, k):
    """Constants for the MA-k displacement: H = sum_i Q_i B* (A*)^i."""
    A, B = pair.A, pair.B
    mats = []
    Ak = np.eye(pair.n, dtype=complex)
    for _ in range(k + 1):
        mats.append(B.conj().T @ Ak.conj().T)
        Ak = A @ Ak
    return mats


def _ma_variables_and_constraints(pair, k):
    """Shared MA-k setup: variables Q_0..Q_k (+P), the affine noise
    covariance, and the positive-real-lemma constraints."""
    n, m = pair.n, pair.m
    Qs = [cp.Variable((m, m), complex=True, name=f"Q{i}") for i in range(k + 1)]
    mats = _ma_structure(pair, k)
    BH = sum(pair.B @ Qs[i] @ mats[i] for i in range(k + 1))
    Delta = BH + BH.H
    K = _stein_operator(pair.A)
    Rn = _herm(cp.reshape(K @ cp.vec(Delta, order="F"), (n, n), order="F"))

    variables = {f"Q{i}": Qs[i] for i in range(k + 1)}
    constraints = []
    if k == 0:
        constraints.append(Qs[0] + Qs[0].H >> 0)
    else:
        A_s, B_s = _shift_realization(k, m)
        C_s = cp.hstack([Qs[i] for i in range(1, k + 1)])
        D_s = Qs[0]
        P = cp.Variable((k * m, k * m), hermitian=True, name="P")
        block = cp.bmat([
            [P - A_s.T @ P @ A_s, C_s.H - A_s.T @ P @ B_s],
            [C_s - B_s.T @ P @ A_s, D_s + D_s.H - B_s.T @ P @ B_s],
        ])
        constraints += [P >> 0, _herm(block) >> 0]
        variables["P"] = P
    return variables, Qs, Rn, constraints


def _ma_noise_matrices(pair, k, Q_values):
    """Recompute H, the displacement, and R_noise from raw variable values."""
    mats = _ma_structure(pair, k)
    H = sum(Q_values[i] @ mats[i] for i in range(k + 1))
    BH = pair.B @ H
    Delta = BH + BH.conj().T
    R_noise = linalg.stein_solve(pair.A, Delta)
    return H, Delta, R_noise


def ma_decompose(cov, k, tol=DEFAULT_GAP):
    """Maximal moving-average noise extraction of correlation range k.

    Maximizes trace(R_noise) over spectra of the form
    Herm{Q_0 + z Q_1 + ... + z^k Q_k} that are nonnegative on the circle
    (positive-real-lemma constraint) and keep both R_noise and
    R - R_noise positive semidefinite.  k = 0 reduces to the white
    problem with Q = Q_0 + Q_0*.
    """
    if k < 0:
        raise ValueError("correlation range must be nonnegative")
    pair = cov.pair
    variables, Qs, Rn, constraints = _ma_variables_and_constraints(pair, k)
    constraints += [Rn >> 0, cp.Constant(cov.R) - Rn >> 0]
    obj = cp.real(cp.trace(Rn))
    values, cert = sdp_solve(
        SdpProblem(variables=variables, objective=obj, constraints=constraints),
        tol=tol)
    Q_values = [values[f"Q{i}"] for i in range(k + 1)]
    H, Delta, R_noise = _ma_noise_matrices(pair, k, Q_values)
    _check_split(cov.R, R_noise)
    resid = np.linalg.norm(
        R_noise - pair.A @ R_noise @ pair.A.conj().T - Delta)
    if resid > 1e-7 * max(np.linalg.norm(cov.R), 1.0):
        raise SolverError(f"noise displacement residual {resid:.3g}")
    params = {f"Q{i}": Q_values[i] for i in range(k + 1)}
    if "P" in values:
        params["P_kyp"] = linalg.hermitize(values["P"])
    return NoiseDecomposition(
        R_signal=linalg.hermitize(cov.R - R_noise), R_noise=R_noise,
        noise_params=params, mode=f"ma({k})",
        objective_value=float(cert["objective"]), certificate=cert)


def correlation_range_check(cov, k, fit_tol=1e-6):
    """Whether R itself is generated by a moving-average spectrum of range k.

    Solves the feasibility program matching the full displacement of R by
    an admissible MA-k polynomial; returns (flag, witness) where the
    witness holds Q_0..Q_k on success and the solver certificate either
    way.
    """
    pair = cov.pair
    variables, Qs, Rn, constraints = _ma_variables_and_constraints(pair, k)
    mats = _ma_structure(pair, k)
    BH = sum(pair.B @ Qs[i] @ mats[i] for i in range(k + 1))
    target = cov.R - pair.A @ cov.R @ pair.A.conj().T
    mismatch = BH + BH.H - cp.Constant(target)
    scale = max(float(np.linalg.norm(cov.R)), 1.0)
    constraints.append(cp.norm(mismatch, "fro") <= fit_tol * scale)
    try:
        values, cert = sdp_solve(
            SdpProblem(variables=variables,
                       objective=cp.Constant(0.0),
                       constraints=constraints))
    except InfeasibleError as exc:
        return False, {"margin": exc.margin, "status": "infeasible"}
    witness = {f"Q{i}": values[f"Q{i}"] for i in range(k + 1)}
    witness["certificate"] = cert
    return True, witness
