import itertools

import numpy as np
import pytest

from nccpa.channel import ChannelSet, sample_covariance, steering_matrix, synthesize_channels
from nccpa.codebook import build_dft_codebook, build_polar_codebook
from nccpa.scenario import ScenarioConfig, place_uts
from nccpa.spectrum import farfield_spectrum, polar_projection_spectrum, somp, somp_spectrum

CFG = ScenarioConfig(num_antennas=16, num_uts=3, num_distance_samples=4, num_covariance_draws=40,
                     ut_distance_range=(0.2, 1.2), pilot_length=2)


def channelset(draws):
    draws = np.asarray(draws, dtype=complex)
    return ChannelSet(draws=draws, covariances=sample_covariance(draws),
                      large_scale_gain=np.ones(draws.shape[0]))


@pytest.fixture(scope="module")
def cb():
    return build_polar_codebook(CFG)


@pytest.fixture(scope="module")
def channels():
    rng = np.random.default_rng(11)
    return synthesize_channels(place_uts(CFG, rng), CFG, rng)


def test_projection_matches_double_loop(channels, cb):
    fs = polar_projection_spectrum(channels, cb)
    K, M, N = channels.draws.shape
    S = cb.num_rings
    oracle = np.zeros((K, M, S))
    for k in range(K):
        for m in range(M):
            for s in range(1, S + 1):
                w = cb.atoms[:, cb.column(m, s)]
                oracle[k, m, s - 1] = sum(abs(np.vdot(w, channels.draws[k, :, i])) ** 2
                                          for i in range(N)) / N
    np.testing.assert_allclose(fs.polar, oracle, rtol=1e-10, atol=1e-14)
    np.testing.assert_allclose(fs.farfield, oracle.sum(axis=2), rtol=1e-10)
    assert fs.method == "projection"
    assert np.all(fs.polar >= 0)


def test_projection_of_an_atom(cb):
    col = cb.column(5, 2)
    fs = polar_projection_spectrum(channelset(cb.atoms[:, col][None, :, None]), cb)
    vec = fs.polar_vectors()[0]
    assert vec[col] == pytest.approx(1.0, abs=1e-12)
    coh2 = np.abs(cb.atoms.conj().T @ cb.atoms[:, col]) ** 2
    np.testing.assert_allclose(vec, coh2, atol=1e-12)


def test_projection_of_zero_channel(cb):
    fs = polar_projection_spectrum(channelset(np.zeros((1, 16, 3))), cb)
    assert not fs.polar.any()


def test_dimension_mismatch(cb):
    with pytest.raises(ValueError):
        polar_projection_spectrum(channelset(np.ones((1, 8, 2))), cb)
    with pytest.raises(ValueError):
        farfield_spectrum(channelset(np.ones((1, 8, 2))), build_dft_codebook(16))


def test_global_phase_invariance(channels, cb):
    rotated = channelset(channels.draws * np.exp(1j * 0.77))
    np.testing.assert_allclose(polar_projection_spectrum(rotated, cb).polar,
                               polar_projection_spectrum(channels, cb).polar, rtol=1e-10, atol=1e-14)
    np.testing.assert_allclose(somp_spectrum(rotated, cb, 4).polar,
                               somp_spectrum(channels, cb, 4).polar, rtol=1e-8, atol=1e-12)
    D = build_dft_codebook(16)
    np.testing.assert_allclose(farfield_spectrum(rotated, D), farfield_spectrum(channels, D), rtol=1e-10)


def test_somp_single_atom(cb):
    col = cb.column(3, 3)
    gains = np.array([0.5 + 1.2j, -0.7j, 2.0])
    fs = somp_spectrum(channelset((cb.atoms[:, col][:, None] * gains[None, :])[None]), cb, 1)
    vec = fs.polar_vectors()[0]
    assert np.flatnonzero(vec).tolist() == [col]
    assert vec[col] == pytest.approx(np.mean(np.abs(gains) ** 2), rel=1e-10)


def test_somp_recovers_separated_support():
    cfg = ScenarioConfig(num_antennas=8, num_distance_samples=2, num_uts=2, pilot_length=2,
                         ut_distance_range=(0.01, 0.02))
    cb = build_polar_codebook(cfg)
    A = cb.atoms
    cols = [cb.column(0, 1), cb.column(4, 1), cb.column(6, 2)]
    rng = np.random.default_rng(4)
    X = rng.standard_normal((3, 30)) + 1j * rng.standard_normal((3, 30))
    Y = A[:, cols] @ X
    # exhaustive oracle: the unique 3-atom support with zero least-squares residual
    exact = []
    for sub in itertools.combinations(range(A.shape[1]), 3):
        sol = np.linalg.lstsq(A[:, sub], Y, rcond=None)[0]
        if np.linalg.norm(Y - A[:, sub] @ sol) < 1e-9 * np.linalg.norm(Y):
            exact.append(sorted(sub))
    assert exact == [sorted(cols)]
    support, _, R = somp(Y, A, 3)
    assert sorted(support) == exact[0]
    assert np.linalg.norm(R) < 1e-9 * np.linalg.norm(Y)


def test_somp_full_dictionary_spans():
    cfg = ScenarioConfig(num_antennas=4, num_distance_samples=2, num_uts=2, pilot_length=2,
                         ut_distance_range=(0.01, 0.02))
    cb = build_polar_codebook(cfg)
    rng = np.random.default_rng(0)
    Y = rng.standard_normal((4, 6)) + 1j * rng.standard_normal((4, 6))
    support, _, R = somp(Y, cb.atoms, 8)
    assert len(support) <= 8
    assert np.vdot(R, R).real < 1e-8 * np.vdot(Y, Y).real
    fs = somp_spectrum(channelset(Y[None]), cb, 8)
    assert np.count_nonzero(fs.polar) <= 8


def test_somp_support_bound(channels, cb):
    for n in (1, 5, 12):
        fs = somp_spectrum(channels, cb, n)
        assert all(np.count_nonzero(fs.polar[k]) <= n for k in range(3))
        assert fs.method == "somp"
    with pytest.raises(ValueError):
        somp_spectrum(channels, cb, 0)


def test_farfield_identity_covariance():
    M = 8
    D = build_dft_codebook(M)
    ch = ChannelSet(draws=np.zeros((1, M, 1)), covariances=np.eye(M)[None].astype(complex),
                    large_scale_gain=np.ones(1))
    np.testing.assert_allclose(farfield_spectrum(ch, D), np.ones((1, M)), atol=1e-12)


def test_farfield_on_grid_concentration():
    M = 32
    D = build_dft_codebook(M)
    h = steering_matrix(D.thetas[9], 1e9, M, 0.5, 1.0)  # far-field source on grid angle 9
    r = farfield_spectrum(channelset(h[None]), D)[0]
    assert r[9] / r.sum() >= 0.99


def test_farfield_trace_preservation(channels):
    r = farfield_spectrum(channels, build_dft_codebook(16))
    tr = np.einsum("kii->k", channels.covariances).real
    np.testing.assert_allclose(r.sum(axis=1), tr, rtol=1e-8)
