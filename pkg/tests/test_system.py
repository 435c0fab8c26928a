import numpy as np
import pytest

from statecov import linalg, system
from statecov.errors import RankDeficientError, UnstableSystemError

from conftest import random_pair


def test_new_pair_rejects_unstable_and_unreachable():
    with pytest.raises(UnstableSystemError):
        system.new_pair(np.eye(2), np.ones((2, 1)))
    A = np.diag([0.5, 0.5]).astype(complex)
    B = np.array([[1.0], [0.0]], dtype=complex)
    with pytest.raises(RankDeficientError):
        system.new_pair(A, B)


def test_normalize_produces_isometry(rng):
    A = np.diag([0.3, -0.2 + 0.4j, 0.1]).astype(complex)
    B = (rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2)))
    pair = system.normalize(system.new_pair(A, B))
    defect = pair.A @ pair.A.conj().T + pair.B @ pair.B.conj().T - np.eye(3)
    assert np.linalg.norm(defect) < 1e-10
    assert pair.normalized


def test_inner_completion_is_unitary(rng):
    for n, m in [(3, 1), (5, 2), (6, 3)]:
        pair = random_pair(rng, n, m)
        U = system.unitary_matrix(system.inner_complete(pair))
        assert np.allclose(U @ U.conj().T, np.eye(n + m), atol=1e-12)


def test_V_is_inner_on_circle(rng):
    pair = random_pair(rng, 4, 2)
    comp = system.inner_complete(pair)
    for theta in np.linspace(0, 2 * np.pi, 17):
        V = system.eval_V(comp, np.exp(1j * theta))
        assert np.allclose(V.conj().T @ V, np.eye(2), atol=1e-11)


def test_G_factors_through_inner_function(rng):
    # G(z) = G_r(z) V(z) at 64 roots of unity, to 1e-9
    for n, m in [(3, 1), (6, 2), (9, 3)]:
        pair = random_pair(rng, n, m)
        comp = system.inner_complete(pair)
        worst = 0.0
        for k in range(64):
            z = np.exp(2j * np.pi * k / 64)
            G = system.eval_G(pair, z)
            Gr = system.eval_Gr(comp, z)
            V = system.eval_V(comp, z)
            worst = max(worst, np.linalg.norm(G - Gr @ V))
        assert worst < 1e-9


def test_block_toeplitz_pair_shape():
    pair = system.block_toeplitz_pair(2, 3)
    assert (pair.n, pair.m) == (8, 2)
    assert np.allclose(pair.A @ pair.A.conj().T
                       + pair.B @ pair.B.conj().T, np.eye(8))
    # tapped delay line: G(z) stacks I, zI, z^2 I, z^3 I
    z = 0.37 + 0.2j
    G = system.eval_G(pair, z)
    expected = np.vstack([z ** k * np.eye(2) for k in range(4)])
    assert np.allclose(G, expected)


def test_pair_json_roundtrip(rng):
    pair = random_pair(rng, 5, 2)
    clone = system.pair_from_json(system.pair_to_json(pair))
    assert np.allclose(clone.A, pair.A)
    assert np.allclose(clone.B, pair.B)


def test_gramian_identity_for_normalized_pair(rng):
    pair = random_pair(rng, 4, 2)
    P = system.controllability_gramian(pair)
    assert np.allclose(P, np.eye(4), atol=1e-9)
