"""Cosine dissimilarities and Isomap channel charts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components, csgraph_from_dense, dijkstra
from scipy.stats import spearmanr
from sklearn.manifold import trustworthiness


def dissimilarity(features) -> np.ndarray:
    """Pairwise ``2 - 2 |e_i^H e_j| / (||e_i|| ||e_j||)`` over the rows of ``features``."""
    E = np.asarray(features)
    if E.ndim != 2:
        raise ValueError("features must be a (K, F) array")
    norms = np.linalg.norm(E, axis=1)
    bad = np.flatnonzero(norms == 0)
    if bad.size:
        raise ValueError(f"zero-norm feature vector for UT {int(bad[0])}")
    U = E / norms[:, None]
    D = 2.0 - 2.0 * np.abs(U.conj() @ U.T)
    D = np.clip(0.5 * (D + D.T), 0.0, 2.0)
    np.fill_diagonal(D, 0.0)
    return D


def default_neighbors(K: int) -> int:
    return max(8, math.ceil(math.log2(K)) + 1)


def euclidean(a, b) -> float:
    """Chart-space distance ``sqrt(sum (a_i - b_i)^2)``."""
    diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return float(np.sqrt(np.sum(diff * diff)))


def pairwise_distances(coords: np.ndarray) -> np.ndarray:
    """Euclidean distances between the columns of a ``D x K`` coordinate array."""
    C = np.asarray(coords, dtype=float)
    diff = C[:, :, None] - C[:, None, :]
    return np.sqrt(np.sum(diff * diff, axis=0))


@dataclass
class ChartCoordinates:
    """Chart embedding ``coords`` (``D x K``) plus diagnostics."""

    coords: np.ndarray
    eigenvalues: np.ndarray = field(default_factory=lambda: np.zeros(0))
    geodesics: np.ndarray | None = None
    bridges: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    @property
    def num_uts(self) -> int:
        return self.coords.shape[1]

    @property
    def residual_mass(self) -> float:
        """Share of positive eigenvalue mass outside the kept dimensions."""
        pos = self.eigenvalues[self.eigenvalues > 0]
        total = pos.sum()
        if total <= 0:
            return 0.0
        kept = np.clip(self.eigenvalues[: self.coords.shape[0]], 0, None).sum()
        return float(1.0 - kept / total)


def knn_graph(dis: np.ndarray, k_neighbors: int) -> np.ndarray:
    """Symmetric k-NN graph as a dense matrix with ``inf`` for missing edges."""
    K = dis.shape[0]
    k = min(k_neighbors, K - 1)
    G = np.full((K, K), np.inf)
    for i in range(K):
        order = [j for j in np.argsort(dis[i], kind="stable") if j != i][:k]
        G[i, order] = dis[i, order]
        G[order, i] = dis[i, order]
    np.fill_diagonal(G, np.inf)
    return G


def bridge_components(G: np.ndarray, dis: np.ndarray) -> list:
    """Join disconnected components by their shortest inter-component edge, in place."""
    bridges = []
    while True:
        n_comp, labels = connected_components(csgraph_from_dense(G, null_value=np.inf), directed=False)
        if n_comp <= 1:
            return bridges
        cross = labels[:, None] != labels[None, :]
        cand = np.where(cross, dis, np.inf)
        i, j = np.unravel_index(int(np.argmin(cand)), cand.shape)
        G[i, j] = G[j, i] = dis[i, j]
        bridges.append((int(i), int(j), float(dis[i, j])))


def geodesic_distances(dis: np.ndarray, k_neighbors: int):
    G = knn_graph(dis, k_neighbors)
    bridges = bridge_components(G, dis)
    graph = csgraph_from_dense(G, null_value=np.inf)
    return dijkstra(graph, directed=False), bridges


def classical_mds(dist: np.ndarray, dim: int):
    """Classical MDS of a distance matrix.

    Returns ``(coords, eigenvalues, notes)`` with ``coords`` shaped
    ``dim x n`` and eigenvalues in descending order. Each eigenvector's
    largest-magnitude entry is made positive. Non-positive eigenvalues among
    the top ``dim`` yield a zero coordinate row.
    """
    n = dist.shape[0]
    J = np.eye(n) - np.full((n, n), 1.0 / n)
    B = -0.5 * J @ (dist * dist) @ J
    B = 0.5 * (B + B.T)
    vals, vecs = np.linalg.eigh(B)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    coords = np.zeros((dim, n))
    notes = []
    scale = max(abs(vals[0]), 1e-300)
    for r in range(dim):
        v = vecs[:, r]
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        if vals[r] <= 1e-12 * scale:
            notes.append(f"eigenvalue {r} = {vals[r]:.3e} is not positive; coordinate row zeroed")
            continue
        coords[r] = v * math.sqrt(vals[r])
    return coords, vals, notes


def isomap_embed(dis, dim: int = 2, k_neighbors: int | None = None) -> ChartCoordinates:
    """Isomap chart of UTs from a dissimilarity matrix.

    Builds a symmetric k-NN graph on ``dis``, bridges disconnected components,
    computes graph geodesics and embeds them by classical MDS.
    """
    dis = np.asarray(dis, dtype=float)
    K = dis.shape[0]
    if dis.shape != (K, K):
        raise ValueError("dissimilarity matrix must be square")
    if K <= dim:
        raise ValueError(f"need more UTs ({K}) than chart dimensions ({dim})")
    if k_neighbors is None:
        k_neighbors = default_neighbors(K)
    if k_neighbors < 1:
        raise ValueError("k_neighbors must be >= 1")
    if not np.any(dis):
        return ChartCoordinates(
            coords=np.zeros((dim, K)), eigenvalues=np.zeros(K), geodesics=np.zeros((K, K)),
            diagnostics=["all dissimilarities are zero; chart collapsed to the origin"],
        )
    geo, bridges = geodesic_distances(dis, k_neighbors)
    coords, vals, notes = classical_mds(geo, dim)
    diagnostics = [f"bridged components via edge ({i}, {j}) weight {w:.6g}" for i, j, w in bridges]
    diagnostics += notes
    return ChartCoordinates(coords=coords, eigenvalues=vals, geodesics=geo,
                            bridges=bridges, diagnostics=diagnostics)


@dataclass
class ChartQuality:
    spearman: float | None
    trustworthiness: float | None
    continuity: float | None


def chart_quality(coords, reference_positions, n_neighbors: int = 5) -> ChartQuality:
    """Rank agreement between chart distances and true UT distances.

    ``None`` marks a statistic that is undefined for the given size.
    """
    C = coords.coords if isinstance(coords, ChartCoordinates) else np.asarray(coords, dtype=float)
    P = np.asarray(reference_positions, dtype=float)
    K = C.shape[1]
    if P.shape[1] != K:
        raise ValueError("coordinate and reference UT counts differ")
    iu = np.triu_indices(K, k=1)
    rho = None
    if K >= 3:
        dc, dp = pairwise_distances(C)[iu], pairwise_distances(P)[iu]
        if np.ptp(dc) > 0 and np.ptp(dp) > 0:
            rho = float(spearmanr(dc, dp).statistic)
    trust = cont = None
    if n_neighbors < K / 2:
        trust = float(trustworthiness(P.T, C.T, n_neighbors=n_neighbors))
        cont = float(trustworthiness(C.T, P.T, n_neighbors=n_neighbors))
    return ChartQuality(spearman=rho, trustworthiness=trust, continuity=cont)
