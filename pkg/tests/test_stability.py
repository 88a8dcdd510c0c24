"""Decay certificates and static gain synthesis."""

import numpy as np
import pytest

import banditctrl as bc


def _plant(A, B, W=1.0):
    return bc.LinearPlant(A=np.asarray(A, dtype=float),
                          B=np.asarray(B, dtype=float), W=W)


def _random_stable(rng, n, rho=0.9):
    A = rng.standard_normal((n, n))
    A *= rho / max(abs(np.linalg.eigvals(A)))
    return A


def test_certify_zero_dynamics_is_trivial():
    cert = bc.certify(_plant(np.zeros((2, 2)), np.eye(2)), np.zeros((2, 2)))
    assert cert.kappa == 1.0
    assert cert.gamma == 1.0


def test_certify_scalar_frozen_values():
    cert = bc.certify(_plant([[0.9]], [[1.0]]), np.array([[0.5]]))
    assert cert.gamma == pytest.approx(0.6, abs=1e-15)
    assert cert.kappa == 1.0


def test_certify_factorization_reconstructs_closed_loop():
    rng = np.random.default_rng(23)
    for _ in range(20):
        plant = _plant(_random_stable(rng, 3), np.eye(3))
        cert = bc.certify(plant, np.zeros((3, 3)))
        Atil = bc.closed_loop(plant, np.zeros((3, 3)))
        rebuilt = cert.Q @ cert.L @ np.linalg.inv(cert.Q)
        assert np.linalg.norm(rebuilt - Atil, 2) <= 1e-8
        rho = max(abs(np.linalg.eigvals(Atil)))
        assert abs(cert.gamma - (1.0 - rho)) <= 1e-12
        assert cert.kappa >= 1.0
        assert cert.spectral_radius == pytest.approx(rho, abs=1e-12)


def test_certify_rejects_unstable_and_defective_loops():
    with pytest.raises(bc.StabilizationError):
        bc.certify(_plant([[1.1]], [[1.0]]), np.array([[0.0]]))
    jordan = _plant([[0.5, 1.0], [0.0, 0.5]], np.eye(2))
    with pytest.raises(bc.StabilizationError):
        bc.certify(jordan, np.zeros((2, 2)))


def test_certify_is_deterministic():
    plant = _plant([[0.3, 0.1], [0.0, 0.7]], np.eye(2))
    K = np.array([[0.1, 0.0], [0.0, 0.2]])
    a = bc.certify(plant, K)
    b = bc.certify(plant, K)
    assert a.kappa == b.kappa and a.gamma == b.gamma
    assert np.array_equal(a.Q, b.Q) and np.array_equal(a.L, b.L)


def test_synthesize_scalar_deadbeat():
    plant = _plant([[0.9]], [[1.0]])
    K = bc.synthesize_K0(plant, target_gamma=1.0)
    assert np.array_equal(K, np.array([[0.9]]))
    assert bc.certify(plant, K).gamma == 1.0


def test_synthesize_diagonal_pole_clipping():
    plant = _plant(np.diag([0.5, 0.8]), np.eye(2))
    K = bc.synthesize_K0(plant, target_gamma=0.7)
    assert np.allclose(K, np.diag([0.2, 0.5]), atol=1e-12)
    assert bc.certify(plant, K).gamma >= 0.7 - 1e-12


def test_synthesize_meets_target_decay():
    rng = np.random.default_rng(29)
    for _ in range(10):
        plant = _plant(np.diag(rng.uniform(-0.95, 0.95, size=3)), np.eye(3))
        K = bc.synthesize_K0(plant, target_gamma=0.6)
        assert bc.certify(plant, K).gamma >= 0.6 - 1e-12


def test_synthesize_unsupported_systems():
    tall = _plant(np.eye(2) * 0.5, [[1.0], [0.0]])
    with pytest.raises(bc.UnsupportedSystemError):
        bc.synthesize_K0(tall, target_gamma=0.5)
    degenerate = _plant([[0.9]], [[0.0]])
    with pytest.raises(bc.UnsupportedSystemError):
        bc.synthesize_K0(degenerate, target_gamma=0.5)
    singular_B = _plant(np.diag([0.5, 0.8]), [[1.0, 0.0], [0.0, 0.0]])
    with pytest.raises(bc.UnsupportedSystemError):
        bc.synthesize_K0(singular_B, target_gamma=0.7)


def test_synthesize_rejects_bad_target():
    plant = _plant([[0.9]], [[1.0]])
    for tg in (0.0, -0.5, 1.5):
        with pytest.raises(bc.StabilizationError):
            bc.synthesize_K0(plant, target_gamma=tg)


def test_certificate_bounds_closed_loop_excursion():
    W = 0.4
    plant = _plant([[0.5, 0.3], [0.0, 0.6]], np.eye(2), W=W)
    K = np.zeros((2, 2))
    cert = bc.certify(plant, K)
    proc = bc.NoiseProcess(kind="scaled_rademacher", W=W, seed=31)
    table = bc.generate_noise(proc, 10_000, 2)
    x = np.zeros(2)
    sup = 0.0
    for t in range(10_000):
        x = bc.step(plant, x, -K @ x, table[t])
        sup = max(sup, float(np.linalg.norm(x)))
    assert sup <= cert.kappa**2 * W / cert.gamma * (1 + 1e-6)


def test_closed_loop_validates_shapes():
    plant = _plant(np.eye(2) * 0.5, np.eye(2))
    with pytest.raises(bc.InputError):
        bc.closed_loop(plant, np.zeros((1, 2)))


def test_certificate_summary_keys():
    cert = bc.certify(_plant([[0.9]], [[1.0]]), np.array([[0.5]]))
    summary = cert.summary()
    assert set(summary) == {"kappa", "gamma", "spectral_radius"}
    assert summary["gamma"] == pytest.approx(0.6)
