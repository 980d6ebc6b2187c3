"""MMSE channel-estimation error and uplink sum rate under pilot reuse."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .allocation import PilotAssignment


@dataclass
class EvaluationResult:
    per_ut_mse: np.ndarray
    sum_mse: float
    sum_rate: float | None = None
    metadata: dict = field(default_factory=dict)


def _pilot_factor(covs: np.ndarray, group, zeta: float, tau: int):
    M = covs.shape[1]
    psi = covs[list(group)].sum(axis=0) + np.eye(M) / (zeta * tau)
    psi = 0.5 * (psi + psi.conj().T)
    try:
        return cho_factor(psi, lower=True)
    except LinAlgError as exc:
        raise RuntimeError(
            f"pilot covariance not positive definite (condition number {np.linalg.cond(psi):.3e})"
        ) from exc


def mmse_filters(assignment: PilotAssignment, covariances, zeta: float, tau: int):
    """Per-UT estimator ``Phi_k Psi_t^{-1}`` and error covariance ``Phi_k - Phi_k Psi_t^{-1} Phi_k``.

    ``Psi_t`` sums the covariances of every UT on pilot ``t``, the UT itself
    included, plus ``I / (zeta tau)``.
    """
    covs = np.asarray(covariances)
    if zeta <= 0:
        raise ValueError("zeta must be positive")
    K, M, _ = covs.shape
    filters = np.empty((K, M, M), dtype=complex)
    errors = np.empty((K, M, M), dtype=complex)
    for group in assignment.groups:
        fac = _pilot_factor(covs, group, zeta, tau)
        for k in group:
            X = cho_solve(fac, covs[k])  # Psi^{-1} Phi_k
            filters[k] = X.conj().T      # Phi_k Psi^{-1} (both Hermitian)
            err = covs[k] - covs[k] @ X
            errors[k] = 0.5 * (err + err.conj().T)
    return filters, errors


def closed_form_mse(assignment: PilotAssignment, covariances, zeta: float, tau: int) -> EvaluationResult:
    """``eps_k = tr(Phi_k - Phi_k Psi_t^{-1} Phi_k)`` for every UT."""
    _, errors = mmse_filters(assignment, covariances, zeta, tau)
    mse = np.maximum(np.einsum("kii->k", errors).real, 0.0)
    return EvaluationResult(
        per_ut_mse=mse, sum_mse=float(mse.sum()),
        metadata={"tau": tau, "snr": zeta, "algorithm": assignment.algorithm},
    )


def resample_channels(draws: np.ndarray, num_trials: int, rng: np.random.Generator) -> np.ndarray:
    """Fresh channel realizations, shape ``(T, K, M)``.

    Each realization picks a stored draw uniformly and applies a uniform
    random phase, so every UT has zero mean and second moment equal to its
    sample covariance, independently across UTs.
    """
    K, M, N = draws.shape
    idx = rng.integers(0, N, size=(num_trials, K))
    phase = np.exp(2j * math.pi * rng.random((num_trials, K)))
    h = draws[np.arange(K)[None, :], :, idx]  # (T, K, M)
    return h * phase[:, :, None]


def _pilot_observations(h: np.ndarray, assignment: PilotAssignment, zeta: float, tau: int,
                        rng: np.random.Generator) -> np.ndarray:
    """Despread pilot observation ``y_t`` seen by each UT, shape ``(T, K, M)``."""
    T, K, M = h.shape
    sigma = math.sqrt(1.0 / (zeta * tau)) if math.isfinite(zeta) else 0.0
    y = np.empty_like(h)
    for group in assignment.groups:
        g = list(group)
        noise = sigma * (rng.standard_normal((T, M)) + 1j * rng.standard_normal((T, M))) / math.sqrt(2.0)
        y_t = h[:, g].sum(axis=1) + noise
        y[:, g] = y_t[:, None, :]
    return y


def monte_carlo_mse_oracle(assignment: PilotAssignment, channels, covariances, zeta: float, tau: int,
                           num_trials: int, rng: np.random.Generator) -> np.ndarray:
    """Empirical per-UT ``E ||h_hat_k - h_k||^2`` from simulated pilot observations."""
    if num_trials < 1:
        raise ValueError("num_trials must be >= 1")
    filters, _ = mmse_filters(assignment, covariances, zeta, tau)
    h = resample_channels(channels.draws, num_trials, rng)
    y = _pilot_observations(h, assignment, zeta, tau, rng)
    h_hat = np.einsum("kmn,tkn->tkm", filters, y)
    err = h_hat - h
    return np.mean(np.sum(np.abs(err) ** 2, axis=2), axis=0)


def mmse_sinr(estimates: np.ndarray, error_cov_sum: np.ndarray, zeta: float) -> np.ndarray:
    """Uplink SINR of each UT under MMSE combining with imperfect CSI.

    ``estimates`` is ``(..., K, M)``; ``error_cov_sum`` is ``sum_l C_l``.
    ``SINR_k = h_k^H (sum_{l != k} h_l h_l^H + sum_l C_l + I/zeta)^{-1} h_k``,
    evaluated as ``q / (1 - q)`` with ``q = h_k^H A^{-1} h_k`` where ``A``
    includes UT ``k``'s own term.
    """
    est = np.asarray(estimates)
    M = est.shape[-1]
    A = np.einsum("...km,...kn->...mn", est, est.conj())
    A = A + error_cov_sum + np.eye(M) / zeta
    sol = np.linalg.solve(A, np.swapaxes(est, -1, -2))  # (..., M, K)
    q = np.einsum("...km,...mk->...k", est.conj(), sol).real
    q = np.clip(q, 0.0, 1.0 - 1e-15)
    return q / (1.0 - q)


def sum_rate(assignment: PilotAssignment, channels, covariances, zeta: float, tau: int,
             num_trials: int, rng: np.random.Generator) -> float:
    """Average uplink sum rate (bits/s/Hz) with a robust MMSE receiver.

    Each trial estimates all channels from simulated pilots, then evaluates
    ``sum_k log2(1 + SINR_k)`` treating the estimation error covariances as
    extra noise. Data-phase noise power is ``1 / zeta``.
    """
    if num_trials < 1:
        raise ValueError("num_trials must be >= 1")
    filters, errors = mmse_filters(assignment, covariances, zeta, tau)
    h = resample_channels(channels.draws, num_trials, rng)
    y = _pilot_observations(h, assignment, zeta, tau, rng)
    h_hat = np.einsum("kmn,tkn->tkm", filters, y)
    sinr = mmse_sinr(h_hat, errors.sum(axis=0), zeta)
    return float(np.mean(np.sum(np.log2(1.0 + sinr), axis=-1)))
