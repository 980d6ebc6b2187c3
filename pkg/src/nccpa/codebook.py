"""Polar-domain (near-field) and DFT (far-field) codebooks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import farfield_steering_matrix, steering_matrix
from .scenario import ScenarioConfig


@dataclass(frozen=True)
class PolarCodebook:
    """Near-field dictionary ``W = [W_1, ..., W_S]``.

    Columns are ring-major: atom ``(m, s)`` with ``s`` in ``1..S`` sits at
    column ``(s - 1) * M + m``.
    """

    atoms: np.ndarray
    thetas: np.ndarray
    rhos: np.ndarray
    num_rings: int
    beta_delta: float

    @property
    def num_antennas(self) -> int:
        return self.atoms.shape[0]

    def column(self, m: int, s: int) -> int:
        if not (1 <= s <= self.num_rings):
            raise IndexError(f"ring index {s} outside 1..{self.num_rings}")
        return (s - 1) * self.num_antennas + m


@dataclass(frozen=True)
class DftCodebook:
    matrix: np.ndarray
    thetas: np.ndarray


def angle_grid(M: int) -> np.ndarray:
    """Uniform direction-sine grid ``(2m - M + 1) / M`` for ``m = 0..M-1``."""
    m = np.arange(M)
    return (2.0 * m - M + 1) / M


def ring_distance(theta, s, M: int, spacing: float, wavelength: float, beta_delta: float):
    """Distance of ring ``s`` at angle ``theta``: ``M^2 d^2 (1 - theta^2) / (2 s lambda beta)``."""
    theta = np.asarray(theta, dtype=float)
    return M * M * spacing * spacing * (1.0 - theta * theta) / (2.0 * s * wavelength * beta_delta)


def build_polar_codebook(config: ScenarioConfig) -> PolarCodebook:
    M, S = config.num_antennas, config.num_distance_samples
    theta = angle_grid(M)
    s = np.arange(1, S + 1)
    thetas = np.tile(theta, S)
    rhos = ring_distance(thetas, np.repeat(s, M), M, config.antenna_spacing,
                         config.wavelength, config.beta_delta)
    if np.any(rhos <= 0):
        raise RuntimeError("non-positive ring distance in polar grid")
    atoms = steering_matrix(thetas, rhos, M, config.antenna_spacing, config.wavelength)
    return PolarCodebook(atoms=atoms, thetas=thetas, rhos=rhos, num_rings=S,
                         beta_delta=config.beta_delta)


def build_dft_codebook(M: int) -> DftCodebook:
    """Unitary far-field codebook: half-wavelength planar responses at the grid angles."""
    if M < 1:
        raise ValueError("M must be >= 1")
    theta = angle_grid(M)
    # half-wavelength spacing: 2 pi d / lambda = pi
    D = farfield_steering_matrix(theta, M, 0.5, 1.0)
    return DftCodebook(matrix=D, thetas=theta)


@dataclass(frozen=True)
class Coherence:
    max: float
    mean: float
    num_atoms_used: int


def codebook_coherence(cb: PolarCodebook | np.ndarray, max_atoms: int = 4096,
                       rng: np.random.Generator | None = None) -> Coherence:
    """Max and mean ``|w_i^H w_j|`` over distinct atom pairs.

    Dictionaries larger than ``max_atoms`` columns are evaluated on a random
    column subsample.
    """
    A = cb.atoms if isinstance(cb, PolarCodebook) else np.asarray(cb)
    n = A.shape[1]
    if n > max_atoms:
        rng = rng or np.random.default_rng(0)
        A = A[:, np.sort(rng.choice(n, size=max_atoms, replace=False))]
        n = max_atoms
    if n < 2:
        raise ValueError("coherence needs at least two atoms")
    G = np.abs(A.conj().T @ A)
    iu = np.triu_indices(n, k=1)
    off = G[iu]
    return Coherence(max=float(off.max()), mean=float(off.mean()), num_atoms_used=n)
