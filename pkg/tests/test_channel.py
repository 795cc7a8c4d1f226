import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from securebf.antenna import ArrayGeometry, Direction, DirectivityParams, directivity_linear, steering_vector
from securebf.channel import (
    ChannelSet,
    CsiErrorModel,
    NotPSDError,
    PathComponent,
    UserChannelSpec,
    matrix_sqrt_psd,
    sample_csi_error,
    synthesize_channel,
)

GEOM = ArrayGeometry(2, 4)
D0 = Direction.from_degrees(80.0, 10.0)
D1 = Direction.from_degrees(100.0, -20.0)


def test_single_path_without_mask_is_steering():
    h = synthesize_channel(GEOM, DirectivityParams.isotropic(), UserChannelSpec(PathComponent(1.0, D0)))
    np.testing.assert_allclose(h, steering_vector(GEOM, D0))


def test_zero_gain_nlos_changes_nothing():
    p = DirectivityParams.for_array(GEOM)
    h0 = synthesize_channel(GEOM, p, UserChannelSpec(PathComponent(0.7j, D0)))
    h1 = synthesize_channel(GEOM, p, UserChannelSpec(PathComponent(0.7j, D0), (PathComponent(0.0, D1),)))
    np.testing.assert_allclose(h0, h1)


def test_single_path_norm():
    p = DirectivityParams.for_array(GEOM)
    rho = 0.4 - 0.3j
    h = synthesize_channel(GEOM, p, UserChannelSpec(PathComponent(rho, D0)))
    g = directivity_linear(p, D0.theta, D0.phi)
    assert np.vdot(h, h).real == pytest.approx(g * abs(rho) ** 2 * GEOM.n_elements, rel=1e-12)


@given(st.complex_numbers(max_magnitude=10, allow_nan=False), st.complex_numbers(max_magnitude=10, allow_nan=False))
def test_linear_in_path_gain(a, b):
    p = DirectivityParams.for_array(GEOM)

    def h(r0, r1):
        return synthesize_channel(GEOM, p, UserChannelSpec(PathComponent(r0, D0), (PathComponent(r1, D1),)))

    np.testing.assert_allclose(h(a, b), h(a, 0) + h(0, b), atol=1e-10)
    np.testing.assert_allclose(h(2 * a, 2 * b), 2 * h(a, b), atol=1e-10)


def test_sqrt_identity_and_diagonal():
    np.testing.assert_allclose(matrix_sqrt_psd(np.eye(3)), np.eye(3), atol=1e-14)
    np.testing.assert_allclose(matrix_sqrt_psd(np.diag([4.0, 1.0])), np.diag([2.0, 1.0]), atol=1e-14)


@settings(max_examples=30)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_sqrt_reconstructs_random_psd(n, seed):
    r = np.random.default_rng(seed)
    A = r.standard_normal((n, n)) + 1j * r.standard_normal((n, n))
    E = A @ A.conj().T
    S = matrix_sqrt_psd(E)
    assert np.linalg.norm(S @ S - E) <= 1e-10 * np.linalg.norm(E)


def test_sqrt_rejects_indefinite():
    with pytest.raises(NotPSDError):
        matrix_sqrt_psd(np.diag([1.0, -0.5]))
    with pytest.raises(NotPSDError):
        CsiErrorModel.scaled_identity(-1.0, 2)


def test_zero_covariance_draws_zero():
    m = CsiErrorModel(np.zeros((4, 4)))
    for seed in (0, 1, 99):
        assert not np.any(sample_csi_error(m, seed, 50))


def test_scaled_identity_variance():
    eps = 0.37
    d = sample_csi_error(CsiErrorModel.scaled_identity(eps, 4), 5, 100_000)
    var = np.mean(np.abs(d) ** 2, axis=0)
    assert np.all(np.abs(var - eps) <= 0.03 * eps)


def test_same_seed_same_draws():
    m = CsiErrorModel.scaled_identity(1.0, 3)
    np.testing.assert_array_equal(sample_csi_error(m, 42, 10), sample_csi_error(m, 42, 10))
    assert not np.array_equal(sample_csi_error(m, 42, 10), sample_csi_error(m, 43, 10))


def test_empirical_covariance_converges():
    r = np.random.default_rng(3)
    for n in (2, 8, 16):
        A = r.standard_normal((n, n)) + 1j * r.standard_normal((n, n))
        E = A @ A.conj().T / n
        d = sample_csi_error(CsiErrorModel(E), 11, 100_000)
        emp = d.T @ d.conj() / len(d)
        assert np.linalg.norm(emp - E) <= 0.05 * np.linalg.norm(E)


def _channels(eps=0.1):
    n = 2
    return ChannelSet(
        su=[[1.0, 0.0]],
        eve_est=[[0.0, 1.0]],
        pu_est=[[0.5, 0.5]],
        eve_err=[CsiErrorModel.scaled_identity(eps, n)],
        pu_err=[CsiErrorModel.scaled_identity(eps, n)],
        noise_su=1.0,
        noise_eve=1.0,
    )


def test_true_channel_is_estimate_plus_error():
    ch = _channels()
    eve, pu = ch.sample_true(np.random.default_rng(0))
    r = np.random.default_rng(0)
    np.testing.assert_allclose(eve[0], ch.eve_est[0] + sample_csi_error(ch.eve_err[0], r))
    np.testing.assert_allclose(pu[0], ch.pu_est[0] + sample_csi_error(ch.pu_err[0], r))


def test_perfect_csi_copy():
    ch = _channels().with_perfect_csi()
    assert all(e.is_zero for e in ch.eve_err + ch.pu_err)
    eve, pu = ch.sample_true(np.random.default_rng(0))
    np.testing.assert_array_equal(eve, ch.eve_est)


def test_channel_set_validation():
    with pytest.raises(ValueError):
        ChannelSet([[1, 0]], [[0, 1]], [], [], [], 1.0, 1.0)
    with pytest.raises(ValueError):
        ChannelSet([[1, 0]], [], [], [], [], 0.0, 1.0)
