"""Near-field steering vectors, multipath channel draws and covariances."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .scenario import ScenarioConfig, UtGeometry, complex_normal, draw_paths


def steering_matrix(thetas, rhos, num_antennas: int, spacing: float, wavelength: float) -> np.ndarray:
    """Spherical-wave ULA responses, one column per ``(theta, rho)`` pair.

    Element ``n`` of a column is ``exp(-j 2pi/lambda (r_n - rho)) / sqrt(M)``
    where ``r_n`` is the exact distance from the source to antenna ``n``
    located at ``(n - (M-1)/2) d`` along the array. ``r_n - rho`` is
    evaluated in the cancellation-free form ``(r_n^2 - rho^2) / (r_n + rho)``
    so the planar-wave limit stays accurate for very large ``rho``.
    """
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    rhos = np.atleast_1d(np.asarray(rhos, dtype=float))
    thetas, rhos = np.broadcast_arrays(thetas, rhos)
    if np.any(np.abs(thetas) > 1.0):
        raise ValueError("direction sine must satisfy |theta| <= 1")
    if np.any(rhos <= 0):
        raise ValueError("distance rho must be positive")

    offsets = (np.arange(num_antennas) - (num_antennas - 1) / 2.0) * spacing
    x = offsets[:, None]
    t = thetas[None, :]
    r = rhos[None, :]
    num = x * x - 2.0 * r * t * x
    r_n = np.sqrt(r * r + num)
    delta = num / (r_n + r)
    phase = -(2.0 * math.pi / wavelength) * delta
    return np.exp(1j * phase) / math.sqrt(num_antennas)


def near_field_steering(theta: float, rho: float, config: ScenarioConfig) -> np.ndarray:
    """Unit-norm array response ``b(theta, rho)`` of length ``M``."""
    return steering_matrix(
        theta, rho, config.num_antennas, config.antenna_spacing, config.wavelength
    )[:, 0]


def farfield_steering_matrix(thetas, num_antennas: int, spacing: float, wavelength: float) -> np.ndarray:
    """Planar-wave responses ``exp(j 2pi/lambda theta delta_n d) / sqrt(M)``."""
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    offsets = (np.arange(num_antennas) - (num_antennas - 1) / 2.0) * spacing
    phase = (2.0 * math.pi / wavelength) * offsets[:, None] * thetas[None, :]
    return np.exp(1j * phase) / math.sqrt(num_antennas)


@dataclass
class ChannelSet:
    """Instantaneous channel draws and their sample covariances.

    ``draws`` has shape ``(K, M, N)``: column ``i`` of ``draws[k]`` is draw
    ``i`` of UT ``k``. ``covariances`` has shape ``(K, M, M)``.
    """

    draws: np.ndarray
    covariances: np.ndarray
    large_scale_gain: np.ndarray

    @property
    def num_uts(self) -> int:
        return self.draws.shape[0]

    @property
    def num_antennas(self) -> int:
        return self.draws.shape[1]

    @property
    def num_draws(self) -> int:
        return self.draws.shape[2]


def synthesize_channels(geom: UtGeometry, config: ScenarioConfig, rng: np.random.Generator) -> ChannelSet:
    """Draw ``num_covariance_draws`` channels per UT.

    Each draw is ``sqrt(xi_k / L) * sum_l g_l b(theta_l, rho_l)`` with fresh
    CN(0, 1) path gains, so ``E ||h_k||^2 = xi_k``. Path geometry is the
    fixed one in ``geom`` unless ``config.redraw_paths`` is set, in which case
    every draw scatters new paths around the UT's mean location.
    """
    K, L = geom.angles.shape
    if K != config.num_uts or L != config.num_paths:
        raise ValueError(
            f"geometry shape {(K, L)} does not match config ({config.num_uts}, {config.num_paths})"
        )
    M, N = config.num_antennas, config.num_covariance_draws
    draws = np.empty((K, M, N), dtype=complex)
    for k in range(K):
        amp = math.sqrt(geom.large_scale_gain[k] / L)
        if config.redraw_paths:
            az, dist = draw_paths(config, geom.mean_azimuths[k], geom.mean_distances[k], rng, (N, L))
            B = steering_matrix(np.sin(az).ravel(), dist.ravel(), M, config.antenna_spacing,
                                config.wavelength).reshape(M, N, L)
            G = complex_normal(rng, (N, L))
            draws[k] = amp * np.einsum("mnl,nl->mn", B, G)
        else:
            B = steering_matrix(geom.angles[k], geom.distances[k], M, config.antenna_spacing,
                                config.wavelength)
            G = complex_normal(rng, (L, N))
            draws[k] = amp * (B @ G)
    return ChannelSet(draws=draws, covariances=_gram(draws), large_scale_gain=geom.large_scale_gain.copy())


def _gram(draws: np.ndarray) -> np.ndarray:
    if draws.shape[-1] == 0:
        raise ValueError("at least one draw per UT is required")
    n = draws.shape[-1]
    cov = draws @ draws.conj().swapaxes(-1, -2) / n
    return 0.5 * (cov + cov.conj().swapaxes(-1, -2))


def sample_covariance(channels) -> np.ndarray:
    """``(1/N) sum h h^H`` per UT, symmetrized.

    Accepts a :class:`ChannelSet` or a raw ``(K, M, N)`` / ``(M, N)`` draw
    array.
    """
    draws = channels.draws if isinstance(channels, ChannelSet) else np.asarray(channels)
    return _gram(draws)


def write_covariances(path, covariances: np.ndarray):
    """Dump covariances as CSV.

    Header ``ut_id,M,v0,...``; each data line holds a UT index, ``M``, then
    the ``M*M`` entries in row-major order as interleaved ``re,im`` pairs.
    """
    covariances = np.asarray(covariances)
    K, M, _ = covariances.shape
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["ut_id", "M"] + [f"v{i}" for i in range(2 * M * M)])
        for k in range(K):
            flat = covariances[k].reshape(-1)
            inter = np.empty(2 * M * M)
            inter[0::2] = flat.real
            inter[1::2] = flat.imag
            w.writerow([k, M] + [repr(float(v)) for v in inter])


def read_covariances(path) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            M = int(row[1])
            vals = np.array([float(v) for v in row[2:]])
            rows.append((vals[0::2] + 1j * vals[1::2]).reshape(M, M))
    return np.array(rows)
