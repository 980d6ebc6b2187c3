"""Per-UT polar-domain and far-field power spectra."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .codebook import DftCodebook, PolarCodebook

log = logging.getLogger(__name__)


@dataclass
class FeatureSet:
    """Polar power spectra ``polar[k]`` (``M x S``) and their ring sums ``farfield[k]``."""

    polar: np.ndarray
    farfield: np.ndarray
    method: str

    @property
    def num_uts(self) -> int:
        return self.polar.shape[0]

    def polar_vectors(self) -> np.ndarray:
        """``vec`` of each spectrum (column-stacked), ordered like the codebook columns."""
        K, M, S = self.polar.shape
        return self.polar.transpose(0, 2, 1).reshape(K, M * S)


def _from_atom_powers(power: np.ndarray, M: int, S: int, method: str) -> FeatureSet:
    # power: (K, M*S) in ring-major column order
    K = power.shape[0]
    polar = power.reshape(K, S, M).transpose(0, 2, 1).copy()
    return FeatureSet(polar=polar, farfield=polar.sum(axis=2), method=method)


def _check_dims(channels: ChannelSet, M: int):
    if channels.num_antennas != M:
        raise ValueError(
            f"codebook has {M} rows but channels have {channels.num_antennas} antennas"
        )


def polar_projection_spectrum(channels: ChannelSet, cb: PolarCodebook) -> FeatureSet:
    """Average ``|W^H h|^2`` over draws for each UT.

    Evaluated as ``diag(W^H Phi_k W)`` on the sample covariance, which is the
    same quantity as the draw average.
    """
    W = cb.atoms
    M = W.shape[0]
    _check_dims(channels, M)
    Wc = W.conj()
    power = np.empty((channels.num_uts, W.shape[1]))
    for k, cov in enumerate(channels.covariances):
        power[k] = np.einsum("ma,ma->a", Wc, cov @ W).real
    np.maximum(power, 0.0, out=power)
    return _from_atom_powers(power, M, cb.num_rings, "projection")


def somp(Y: np.ndarray, A: np.ndarray, num_atoms: int, tol: float = 1e-14):
    """Simultaneous OMP of the columns of ``Y`` over dictionary ``A``.

    Returns ``(support, coefficients, residual)`` where ``coefficients`` has
    one row per support atom. An atom whose addition makes the support
    rank-deficient is dropped and excluded from later picks. Iteration stops
    early once the residual energy falls below ``tol`` times the input energy.
    """
    n_atoms = A.shape[1]
    if not (1 <= num_atoms <= n_atoms):
        raise ValueError(f"num_atoms must lie in [1, {n_atoms}]")
    energy0 = float(np.vdot(Y, Y).real)
    support: list[int] = []
    available = np.ones(n_atoms, dtype=bool)
    coef = np.zeros((0, Y.shape[1]), dtype=complex)
    R = Y.copy()
    Ac = A.conj()
    while len(support) < num_atoms and available.any():
        if float(np.vdot(R, R).real) <= tol * energy0:
            break
        Q = R @ R.conj().T
        score = np.einsum("ma,ma->a", Ac, Q @ A).real
        score[~available] = -np.inf
        pick = int(np.argmax(score))
        available[pick] = False
        trial = support + [pick]
        sol, _, rank, _ = np.linalg.lstsq(A[:, trial], Y, rcond=None)
        if rank < len(trial):
            log.debug("somp: atom %d makes the support rank-deficient; dropped", pick)
            continue
        support = trial
        coef = sol
        R = Y - A[:, support] @ coef
    return support, coef, R


def somp_spectrum(channels: ChannelSet, cb: PolarCodebook, num_atoms: int) -> FeatureSet:
    """Per-UT SOMP over all draws; average ``|coef|^2`` lands on the selected atoms."""
    W = cb.atoms
    M, n = W.shape
    _check_dims(channels, M)
    if not (1 <= num_atoms <= n):
        raise ValueError(f"num_atoms must lie in [1, {n}]")
    power = np.zeros((channels.num_uts, n))
    for k in range(channels.num_uts):
        support, coef, _ = somp(channels.draws[k], W, num_atoms)
        if support:
            power[k, support] = np.mean(np.abs(coef) ** 2, axis=1)
    return _from_atom_powers(power, M, cb.num_rings, "somp")


def farfield_spectrum(channels: ChannelSet, dft: DftCodebook | np.ndarray) -> np.ndarray:
    """``diag(D^H Phi_k D)`` for each UT, shape ``(K, M)``."""
    D = dft.matrix if isinstance(dft, DftCodebook) else np.asarray(dft)
    _check_dims(channels, D.shape[0])
    out = np.einsum("ma,kmn,na->ka", D.conj(), channels.covariances, D, optimize=True).real
    return np.maximum(out, 0.0)


def write_spectrum_csv(path, features: FeatureSet):
    """One row per (UT, angle index): ``ut_id,m,g_1..g_S``."""
    K, M, S = features.polar.shape
    with open(path, "w") as fh:
        fh.write("ut_id,m," + ",".join(f"g_{s}" for s in range(1, S + 1)) + "\n")
        for k in range(K):
            for m in range(M):
                vals = ",".join(repr(float(v)) for v in features.polar[k, m])
                fh.write(f"{k},{m},{vals}\n")
