"""Shared generators for random normalized pairs and admissible covariances."""

import numpy as np
import pytest

from statecov import covariance, linalg, system


def random_unitary(rng, size):
    Z = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R))).conj()


def random_pair(rng, n, m, max_tries=50):
    """Random normalized pair: (A, B) from the first n rows of a unitary.

    Rows of [A B] taken from an (n+m) x (n+m) unitary are orthonormal, so
    A A* + B B* = I automatically; retry until stability and reachability
    hold (they do generically).
    """
    for _ in range(max_tries):
        U = random_unitary(rng, n + m)
        A, B = U[:n, :n], U[:n, n:]
        try:
            return system.new_pair(A, B)
        except Exception:
            continue
    raise RuntimeError("could not draw a stable reachable pair")


def covariance_from_measure(pair, thetas, masses, density_weight=0.0,
                            quad=256, tol=1e-8):
    """Assemble R = sum_i G(e^{-j theta_i}) M_i G* + weight * gramian.

    A sinusoid e^{j theta k} drives the state through G evaluated at the
    conjugate point, hence the negative sign in the argument.

    A uniform density of the given weight contributes its Stein solution
    (the controllability Gramian scaled by the weight).
    """
    n = pair.n
    R = np.zeros((n, n), dtype=complex)
    for theta, M in zip(thetas, masses):
        G = system.eval_G(pair, np.exp(-1j * theta))
        R += G @ M @ G.conj().T
    if density_weight:
        R += density_weight * system.controllability_gramian(pair)
    return covariance.structured(linalg.hermitize(R), pair, tol=tol)


def random_psd(rng, m, rank=None):
    r = rank if rank is not None else m
    Z = rng.standard_normal((m, r)) + 1j * rng.standard_normal((m, r))
    return Z @ Z.conj().T / r


def random_covariance(rng, pair, singular=False, tol=1e-8, max_tries=50):
    """Random admissible covariance for the pair.

    Full-rank instances mix spectral lines with a white background;
    singular ones are pure sums of at most n - m rank-one lines.  Draws are
    rejected until the eigenvalue spectrum of R is crisp (no eigenvalues in
    the ambiguous band around the rank tolerance), so that rank decisions
    and boundary-pole locations are numerically unambiguous.
    """
    n, m = pair.n, pair.m
    for _ in range(max_tries):
        if singular:
            count = int(rng.integers(1, max(2, n - m + 1)))
            thetas = rng.uniform(0, 2 * np.pi, size=count)
            masses = []
            for _ in range(count):
                z = rng.standard_normal((m, 1)) + 1j * rng.standard_normal((m, 1))
                z *= rng.uniform(0.7, 1.5) / np.linalg.norm(z)
                masses.append(z @ z.conj().T)
            weight = 0.0
        else:
            count = int(rng.integers(0, 3))
            thetas = rng.uniform(0, 2 * np.pi, size=count)
            masses = [random_psd(rng, m) for _ in range(count)]
            weight = float(rng.uniform(0.2, 2.0))
        if count > 1 and np.min(np.diff(np.sort(thetas))) < 0.3:
            continue
        cov = covariance_from_measure(pair, thetas, masses, weight, tol=tol)
        vals = linalg.herm_eig(cov.R).values
        top = vals[-1]
        ambiguous = np.any((vals > 1e-9 * top) & (vals < 1e-5 * top))
        if not ambiguous:
            return cov
    raise RuntimeError("could not draw a well-conditioned covariance")


def shift_pair(m, lags):
    return system.block_toeplitz_pair(m, lags)


@pytest.fixture
def rng():
    return np.random.default_rng(20260823)
