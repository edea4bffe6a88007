"""Per-candidate summary graph, its normalized Laplacian and a square-root factor.

The summary graph weights each node pair by edge popularity::

    A[i, j] = max(1{(i, j) in E_candidate}, fraction of neighbours containing (i, j))

Laplacian work happens per connected component; isolated nodes carry no
network penalty.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation
from .model import Edge, NetworkDatabase, effective_edges


@dataclass(frozen=True, eq=False)
class SummaryGraph:
    A: np.ndarray
    deg: np.ndarray
    components: tuple[tuple[int, ...], ...]

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def edges(self) -> list[Edge]:
        i, j = np.nonzero(np.triu(self.A, 1))
        return list(zip(i.tolist(), j.tolist()))


@dataclass(frozen=True, eq=False)
class LaplacianFactor:
    """``L = S.T @ S`` with ``S = sqrt(diag(eigenvalues)) @ U.T``."""

    L: np.ndarray
    S: np.ndarray
    eigenvalues: np.ndarray


def components_of(adjacency: np.ndarray) -> tuple[tuple[int, ...], ...]:
    """Connected components of the nonzero pattern, each sorted, ordered by first node."""
    n = adjacency.shape[0]
    nbrs = [np.flatnonzero(row).tolist() for row in np.asarray(adjacency) != 0]
    seen = [False] * n
    comps = []
    for start in range(n):
        if seen[start]:
            continue
        seen[start] = True
        comp, queue = [start], deque([start])
        while queue:
            for v in nbrs[queue.popleft()]:
                if not seen[v]:
                    seen[v] = True
                    comp.append(v)
                    queue.append(v)
        comps.append(tuple(sorted(comp)))
    return tuple(comps)


def graph_from_weights(A: np.ndarray) -> SummaryGraph:
    A = np.asarray(A, dtype=np.float64)
    A.setflags(write=False)
    deg = A.sum(axis=1)
    deg.setflags(write=False)
    return SummaryGraph(A, deg, components_of(A))


def build_summary_graph(
    db: NetworkDatabase, candidate_id: str, neighbor_ids: list[str] | tuple[str, ...]
) -> SummaryGraph:
    """Summary graph of the candidate and its neighbours."""
    if not neighbor_ids:
        raise ValueError("neighbor_ids must be nonempty")
    if candidate_id in neighbor_ids:
        raise ValueError("the candidate cannot be its own neighbour")
    n = db.n
    K = len(neighbor_ids)
    own = effective_edges(db, candidate_id)
    nbr_sets = [effective_edges(db, s) for s in neighbor_ids]
    A = np.zeros((n, n))
    if all(e is own for e in nbr_sets):
        # shared topology everywhere: max(1, 1) on every edge
        weights = {e: 1.0 for e in own}
    else:
        counts = Counter(e for es in nbr_sets for e in es)
        weights = {e: c / K for e, c in counts.items()}
        for e in own:
            weights[e] = 1.0
    for (i, j), a in weights.items():
        A[i, j] = A[j, i] = a
    return graph_from_weights(A)


def normalized_laplacian(g: SummaryGraph, component: list[int] | tuple[int, ...]) -> np.ndarray:
    """Normalized Laplacian restricted to one component (unit diagonal, no self-loops)."""
    idx = np.asarray(component, dtype=int)
    if idx.size < 2:
        raise ValueError("a Laplacian component needs at least 2 nodes")
    deg = g.deg[idx]
    if np.any(deg <= 0):
        raise RuntimeError(f"zero-degree node inside component {list(idx)}")
    inv = 1.0 / np.sqrt(deg)
    L = -g.A[np.ix_(idx, idx)] * inv[:, None] * inv[None, :]
    np.fill_diagonal(L, 1.0)
    return (L + L.T) / 2.0


def laplacian_factor(L: np.ndarray) -> LaplacianFactor:
    """Eigen-factor a symmetric PSD matrix; tiny negative eigenvalues are clamped to 0."""
    L = np.asarray(L, dtype=np.float64)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ContractViolation(f"expected a square matrix, got shape {L.shape}")
    scale = max(1.0, float(np.abs(L).max())) if L.size else 1.0
    if not np.allclose(L, L.T, rtol=0.0, atol=1e-12 * scale):
        raise ContractViolation("matrix is not symmetric")
    if L.size == 0:
        return LaplacianFactor(L, L.copy(), np.zeros(0))
    ev, U = np.linalg.eigh((L + L.T) / 2.0)
    ev = np.clip(ev, 0.0, None)
    S = np.sqrt(ev)[:, None] * U.T
    return LaplacianFactor(L, S, ev)


def block_factor(L: np.ndarray) -> LaplacianFactor:
    """Factor a block-diagonal PSD matrix one block at a time.

    Blocks are the connected components of the off-diagonal pattern.  The
    returned ``S`` is ``n x n`` with each block's factor placed on that
    block's rows and columns, so ``S.T @ S`` reassembles ``L``.
    """
    L = np.asarray(L, dtype=np.float64)
    n = L.shape[0]
    S = np.zeros((n, n))
    ev = np.zeros(n)
    off = L.copy()
    np.fill_diagonal(off, 0.0)
    for comp in components_of(off):
        idx = np.asarray(comp)
        if len(idx) == 1:
            v = max(float(L[idx[0], idx[0]]), 0.0)
            S[idx[0], idx[0]] = np.sqrt(v)
            ev[idx[0]] = v
            continue
        f = laplacian_factor(L[np.ix_(idx, idx)])
        S[np.ix_(idx, idx)] = f.S
        ev[idx] = f.eigenvalues
    return LaplacianFactor(L, S, ev)


def network_factor(g: SummaryGraph) -> LaplacianFactor:
    """Full ``n x n`` Laplacian (zero rows for isolated nodes) and its block factor."""
    n = g.n
    L = np.zeros((n, n))
    for comp in g.components:
        if len(comp) < 2:
            continue
        idx = np.asarray(comp)
        L[np.ix_(idx, idx)] = normalized_laplacian(g, comp)
    return block_factor(L)


def quadratic_penalty(w: np.ndarray, g: SummaryGraph | None, L: np.ndarray) -> float:
    """Network smoothness penalty ``w.T @ L @ w``."""
    w = np.asarray(w, dtype=np.float64)
    return float(w @ L @ w)
