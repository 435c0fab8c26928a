import numpy as np
import pytest

from statecov import central, covariance, linalg, prediction, system
from statecov.errors import ConsistencyError

from conftest import covariance_from_measure, random_covariance, random_pair


def _quadratic_residual(spec, count=64):
    worst = 0.0
    for theta in 2 * np.pi * np.arange(count) / count:
        z = np.exp(1j * theta)
        Phi, Psi = spec.eval_Phi(z), spec.eval_Psi(z)
        lhs = Psi @ Phi.conj().T + Phi @ Psi.conj().T
        worst = max(worst, float(np.linalg.norm(lhs - spec.omega)))
    return worst


def test_quadratic_identity_on_circle(rng):
    for singular in (False, True):
        pair = random_pair(rng, 6, 2)
        cov = random_covariance(rng, pair, singular=singular)
        spec = central.central_spectrum(cov)
        assert _quadratic_residual(spec) < 1e-8
        assert spec.quadratic_residual < 1e-8


def test_realization_displacement_identity(rng):
    # R = B Omega B* + A_o R A_o*
    pair = random_pair(rng, 5, 2)
    cov = random_covariance(rng, pair)
    spec = central.central_spectrum(cov)
    resid = cov.R - (pair.B @ spec.omega @ pair.B.conj().T
                     + spec.A_o @ cov.R @ spec.A_o.conj().T)
    assert np.linalg.norm(resid) < 1e-8 * np.linalg.norm(cov.R)


def test_spectrum_positive_real_inside_disc(rng):
    pair = random_pair(rng, 5, 1)
    cov = random_covariance(rng, pair)
    spec = central.central_spectrum(cov)
    for r in (0.5, 0.9, 0.99):
        for theta in np.linspace(0, 2 * np.pi, 24, endpoint=False):
            F = spec.eval_F(r * np.exp(1j * theta))
            assert linalg.herm_eig(F + F.conj().T).values[0] > -1e-8


def test_density_matches_omega_form(rng):
    # for R > 0 the density equals Phi^{-1} Omega Phi^{-*} on the circle
    pair = random_pair(rng, 4, 2)
    cov = random_covariance(rng, pair, singular=False)
    spec = central.central_spectrum(cov)
    thetas = np.linspace(0, 2 * np.pi, 9, endpoint=False)
    for theta, d in zip(thetas, central.density(spec, thetas)):
        # the physical angle theta enters the transfer functions conjugated
        z = np.exp(-1j * theta)
        Pinv = spec.eval_Phi_inv(z)
        ref = Pinv @ spec.omega @ Pinv.conj().T
        assert np.linalg.norm(d - ref) < 1e-8


def test_reconstruction_full_rank(rng):
    pair = random_pair(rng, 6, 3)
    cov = random_covariance(rng, pair, singular=False)
    spec = central.central_spectrum(cov)
    _, rel = central.reconstruct(spec)
    assert rel < 1e-8


def test_full_rank_central_spectrum_has_no_lines():
    # with R > 0 the central spectrum is purely absolutely continuous even
    # when the generating measure contained point masses
    pair = system.block_toeplitz_pair(1, 2)
    cov = covariance_from_measure(
        pair, [0.8], [np.array([[1.0]], dtype=complex)], density_weight=0.3)
    spec = central.central_spectrum(cov)
    lossless, _ = central.lossless_split(spec)
    assert lossless.boundary_eigenvalues.size == 0
    _, rel = central.reconstruct(spec)
    assert rel < 1e-8


def test_reconstruction_with_lines():
    pair = system.block_toeplitz_pair(1, 2)
    cov = covariance_from_measure(
        pair, [0.8, 2.1],
        [np.array([[1.0]], dtype=complex), np.array([[2.0]], dtype=complex)])
    spec = central.central_spectrum(cov)
    lossless, _ = central.lossless_split(spec)
    assert lossless.kyp_residual < 1e-7
    lines = central.residues(lossless)
    assert [round(l.theta, 6) for l in lines] == [0.8, 2.1]
    for line, power in zip(lines, (1.0, 2.0)):
        assert abs(line.mass[0, 0] - power) < 1e-8
    _, rel = central.reconstruct(spec)
    assert rel < 1e-8


def test_residue_path_agrees_with_subspace_path(rng):
    pair = random_pair(rng, 7, 2)
    Z = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    masses = [np.eye(2, dtype=complex), Z @ Z.conj().T]
    cov = covariance_from_measure(pair, [0.5, 3.0], masses)
    direct = prediction.line_spectrum(cov, rank_tol=1e-8)
    spec = central.central_spectrum(cov)
    lossless, _ = central.lossless_split(spec)
    via_residues = central.residues(lossless)
    assert len(direct) == len(via_residues) == 2
    for a, b in zip(direct, via_residues):
        assert abs(a.theta - b.theta) < 1e-7
        assert np.linalg.norm(a.mass - b.mass) < 1e-7


def test_interpolation_matrix_hermitian_part(rng):
    pair = random_pair(rng, 5, 2)
    cov = random_covariance(rng, pair)
    W = central.interpolation_matrix(cov)
    assert np.linalg.norm(W + W.conj().T - cov.R) < 1e-9 * np.linalg.norm(cov.R)


def test_fourier_coefficients_match_H(rng):
    # (1/2pi) Int G(e^{j theta}) F(e^{j theta})* d theta = H*
    pair = random_pair(rng, 4, 2)
    cov = random_covariance(rng, pair, singular=False)
    spec = central.central_spectrum(cov)
    quad = 1024
    acc = np.zeros((pair.n, pair.m), dtype=complex)
    for k in range(quad):
        z = np.exp(2j * np.pi * k / quad)
        acc += system.eval_G(pair, z) @ spec.eval_F(z).conj().T
    acc /= quad
    assert np.linalg.norm(acc - cov.H.conj().T) < 1e-6


def test_second_kind_right_consistency(rng):
    pair = random_pair(rng, 5, 2)
    cov = covariance.structured(random_covariance(rng, pair).R, pair,
                                completion=system.inner_complete(pair))
    right = central.second_kind_right(cov)
    assert right.quadratic_residual < 1e-8
    assert right.coherence_residual < 1e-8
    assert right.omega_residual < 1e-8


def test_gauge_freedom_leaves_density_invariant(rng):
    pair = random_pair(rng, 5, 2)
    cov = random_covariance(rng, pair)
    assert central.gauge_sensitivity(cov) < 1e-10


def test_lossless_split_rejects_nothing_on_the_circle(rng):
    pair = random_pair(rng, 4, 2)
    cov = random_covariance(rng, pair, singular=False)
    spec = central.central_spectrum(cov)
    lossless, lossy = central.lossless_split(spec)
    assert lossless.boundary_eigenvalues.size == 0
    z = 0.3 + 0.1j
    assert np.linalg.norm(spec.eval_F(z)
                          - (lossless.realization.eval(z) + lossy.eval(z))) < 1e-9
