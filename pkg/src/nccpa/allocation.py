"""Pilot allocation: chart-guided NCC/FCC procedures, random baseline, P1 objective.

UT and pilot indices are 0-based throughout; pilot 0 is the pilot of the
seed UT.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .charting import ChartCoordinates, pairwise_distances


@dataclass(frozen=True)
class PilotAssignment:
    groups: tuple
    algorithm: str = ""

    @property
    def tau(self) -> int:
        return len(self.groups)

    @property
    def num_uts(self) -> int:
        return sum(len(g) for g in self.groups)

    def pilot_of(self) -> np.ndarray:
        out = np.full(self.num_uts, -1, dtype=int)
        for t, g in enumerate(self.groups):
            out[list(g)] = t
        return out

    def validate(self, K: int | None = None):
        """Check cover, non-emptiness and disjointness; raise ``ValueError`` otherwise."""
        K = self.num_uts if K is None else K
        seen = [u for g in self.groups for u in g]
        if any(len(g) == 0 for g in self.groups):
            raise ValueError("empty pilot group")
        if len(seen) != len(set(seen)):
            raise ValueError("a UT appears in more than one pilot group")
        if set(seen) != set(range(K)):
            raise ValueError("pilot groups do not cover every UT")

    @classmethod
    def from_pilots(cls, pilots, tau: int, algorithm: str = "") -> "PilotAssignment":
        groups = [[] for _ in range(tau)]
        for k, t in enumerate(pilots):
            groups[int(t)].append(k)
        return cls(tuple(tuple(g) for g in groups), algorithm)


def _check_tau(K: int, tau: int):
    if tau < 2:
        raise ValueError(f"pilot length {tau} < 2")
    if tau > K:
        raise ValueError(f"pilot length {tau} exceeds the number of UTs {K}")


def _nearest(dist_row: np.ndarray, unassigned: list) -> int:
    # unassigned is kept sorted, so argmin breaks ties toward the smallest index
    return unassigned[int(np.argmin(dist_row[unassigned]))]


def chart_pilot_allocation(coords, tau: int, algorithm: str = "ncc", seed_ut: int = 0) -> PilotAssignment:
    """Nearest-neighbour pilot allocation on chart coordinates.

    Starting from ``seed_ut`` as the centre node on pilot 0, each pass gives
    pilots ``1..tau-1`` to the UTs nearest the current centre; the next
    nearest unassigned UT then becomes the new centre and takes pilot 0.
    A pass stops early once every UT is assigned.
    """
    C = coords.coords if isinstance(coords, ChartCoordinates) else np.asarray(coords, dtype=float)
    if C.ndim == 1:
        C = C[None, :]
    K = C.shape[1]
    _check_tau(K, tau)
    if not (0 <= seed_ut < K):
        raise ValueError(f"seed UT {seed_ut} out of range")
    dist = pairwise_distances(C)

    groups = [[] for _ in range(tau)]
    groups[0].append(seed_ut)
    unassigned = [k for k in range(K) if k != seed_ut]
    center = seed_ut
    while unassigned:
        for t in range(1, tau):
            if not unassigned:
                break
            k = _nearest(dist[center], unassigned)
            groups[t].append(k)
            unassigned.remove(k)
        if not unassigned:
            break
        center = _nearest(dist[center], unassigned)
        groups[0].append(center)
        unassigned.remove(center)
    return PilotAssignment(tuple(tuple(g) for g in groups), algorithm)


def ncc_pa(coords, tau: int, seed_ut: int = 0) -> PilotAssignment:
    """Pilot allocation on the near-field chart."""
    return chart_pilot_allocation(coords, tau, "ncc", seed_ut)


def fcc_pa(coords_farfield, tau: int, seed_ut: int = 0) -> PilotAssignment:
    """Same procedure as :func:`ncc_pa`, applied to the far-field chart."""
    return chart_pilot_allocation(coords_farfield, tau, "fcc", seed_ut)


def random_pa(K: int, tau: int, rng: np.random.Generator) -> PilotAssignment:
    """Random permutation of UTs dealt cyclically onto the pilots."""
    _check_tau(K, tau)
    perm = rng.permutation(K)
    groups = tuple(tuple(sorted(int(u) for u in perm[t::tau])) for t in range(tau))
    return PilotAssignment(groups, "random")


def pair_interference(covariances: np.ndarray) -> np.ndarray:
    """``||Phi_k Phi_j^H||_2`` for every UT pair, as a ``K x K`` matrix."""
    covs = np.asarray(covariances)
    K = covs.shape[0]
    out = np.zeros((K, K))
    for k in range(K):
        for j in range(k + 1, K):
            out[k, j] = out[j, k] = np.linalg.norm(covs[k] @ covs[j].conj().T, 2)
    return out


def p1_objective(assignment: PilotAssignment, covariances, pairwise: np.ndarray | None = None) -> float:
    """Sum of spectral norms ``||Phi_k Phi_j^H||_2`` over same-pilot pairs ``k < j``.

    Pass a precomputed ``pairwise`` matrix from :func:`pair_interference` to
    score many assignments cheaply.
    """
    total = 0.0
    for g in assignment.groups:
        g = sorted(g)
        for a in range(len(g)):
            for b in range(a + 1, len(g)):
                k, j = g[a], g[b]
                if pairwise is not None:
                    total += pairwise[k, j]
                else:
                    total += np.linalg.norm(covariances[k] @ covariances[j].conj().T, 2)
    return float(total)


def set_partitions(K: int, tau: int):
    """Yield every partition of ``range(K)`` into exactly ``tau`` non-empty blocks.

    Blocks are ordered by their smallest element.
    """
    labels = [0] * K

    def rec(i, used):
        if K - i < tau - used:
            return
        if i == K:
            if used == tau:
                groups = [[] for _ in range(tau)]
                for k, t in enumerate(labels):
                    groups[t].append(k)
                yield tuple(tuple(g) for g in groups)
            return
        for t in range(min(used + 1, tau)):
            labels[i] = t
            yield from rec(i + 1, max(used, t + 1))

    yield from rec(0, 0)


def exhaustive_optimum(covariances, tau: int):
    """Best P1 objective over all valid partitions; returns ``(value, assignment)``."""
    covs = np.asarray(covariances)
    K = covs.shape[0]
    _check_tau(K, tau)
    pw = pair_interference(covs)
    best, best_groups = np.inf, None
    for groups in set_partitions(K, tau):
        val = p1_objective(PilotAssignment(groups), covs, pairwise=pw)
        if val < best:
            best, best_groups = val, groups
    return best, PilotAssignment(best_groups, "exhaustive")


def write_assignment_csv(path, assignment: PilotAssignment):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["ut_id", "pilot_id"])
        for k, t in enumerate(assignment.pilot_of()):
            w.writerow([k, int(t)])


def read_assignment_csv(path, algorithm: str = "") -> PilotAssignment:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    pilots = [0] * len(rows)
    for r in rows:
        pilots[int(r["ut_id"])] = int(r["pilot_id"])
    return PilotAssignment.from_pilots(pilots, max(pilots) + 1, algorithm)
