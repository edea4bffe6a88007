"""Nearest-neighbour selection, candidate upsampling and the raw regression design."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DistanceError, ParameterError
from .model import NetworkDatabase

SeedLike = int | np.random.SeedSequence | np.random.Generator | None


def cosine_distance(x: np.ndarray, y: np.ndarray) -> float:
    """``1 - cos(x, y)``, clipped to ``[0, 2]``.

    Raises
    ------
    DistanceError
        If either vector is all zeros.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx == 0.0 or ny == 0.0:
        raise DistanceError("cosine distance is undefined for a zero vector")
    return float(np.clip(1.0 - np.dot(x, y) / (nx * ny), 0.0, 2.0))


def cosine_distances_to(values: np.ndarray, row: int) -> np.ndarray:
    """Cosine distance from sample ``row`` to every sample (zero vectors count as distance 2)."""
    norms = np.linalg.norm(values, axis=1)
    x = values[row]
    nx = norms[row]
    out = np.full(values.shape[0], 2.0)
    if nx == 0.0:
        out[row] = 0.0
        return out
    ok = norms > 0
    out[ok] = np.clip(1.0 - (values[ok] @ x) / (norms[ok] * nx), 0.0, 2.0)
    return out


def _check_k(db: NetworkDatabase, K: int) -> None:
    if int(K) != K or K < 1:
        raise ParameterError(f"K must be a positive integer, got {K!r}")
    if K > db.m - 1:
        raise ParameterError(f"K={K} violates K <= m-1 = {db.m - 1}")


def neighbor_order(db: NetworkDatabase, candidate_id: str) -> list[str]:
    """All other sample ids sorted by cosine distance, ties by ascending id."""
    row = db.index_of(candidate_id)
    dist = cosine_distances_to(db.values, row)
    ids = db.sample_ids
    others = [k for k in range(db.m) if k != row]
    others.sort(key=lambda k: (dist[k], ids[k]))
    return [ids[k] for k in others]


def k_nearest(db: NetworkDatabase, candidate_id: str, K: int) -> list[str]:
    """The ``K`` samples closest to the candidate by cosine distance."""
    _check_k(db, K)
    return neighbor_order(db, candidate_id)[:K]


def upsample(candidate: np.ndarray, neighbors: np.ndarray, seed: SeedLike = None) -> np.ndarray:
    """Draw ``K - 1`` synthetic replicas of the candidate.

    Each replica is ``candidate + N(0, diag(v))`` where ``v`` is the per-node
    sample variance (ddof=1) over the ``K`` neighbour rows.  Returns an array
    of shape ``(K - 1, n)``; empty when ``K == 1``.
    """
    candidate = np.asarray(candidate, dtype=np.float64)
    neighbors = np.atleast_2d(np.asarray(neighbors, dtype=np.float64))
    K, n = neighbors.shape
    if candidate.shape != (n,):
        raise ValueError(f"candidate length {candidate.size} != neighbour width {n}")
    if K < 2:
        return np.empty((0, n))
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    sd = np.sqrt(neighbors.var(axis=0, ddof=1))
    return candidate + rng.standard_normal((K - 1, n)) * sd


@dataclass(frozen=True, eq=False)
class DesignSet:
    """Regression design for one candidate: ``K`` neighbour rows then ``K`` outlier-class rows."""

    X: np.ndarray
    z: np.ndarray
    neighbor_ids: tuple[str, ...]
    candidate_id: str

    @property
    def K(self) -> int:
        return len(self.neighbor_ids)

    @property
    def n(self) -> int:
        return self.X.shape[1]


def candidate_seed(seed: int, candidate_index: int, K: int) -> np.random.SeedSequence:
    """Independent random stream per (run seed, candidate, K); order-free for parallel runs."""
    return np.random.SeedSequence([int(seed), int(candidate_index), int(K)])


def assemble_design(
    db: NetworkDatabase,
    candidate_id: str,
    K: int,
    seed: SeedLike = 0,
    *,
    neighbor_ids: list[str] | None = None,
) -> DesignSet:
    """Stack neighbours, the candidate and its replicas into the ``2K x n`` design.

    ``seed`` may be an int (mixed with the candidate index and ``K``) or an
    explicit ``SeedSequence``/``Generator``.
    """
    _check_k(db, K)
    if neighbor_ids is None:
        neighbor_ids = k_nearest(db, candidate_id, K)
    elif len(neighbor_ids) != K:
        raise ParameterError(f"expected {K} neighbour ids, got {len(neighbor_ids)}")
    if isinstance(seed, (int, np.integer)) or seed is None:
        seed = candidate_seed(seed or 0, db.index_of(candidate_id), K)
    x_o = db.values[db.index_of(candidate_id)]
    nbrs = db.values[[db.index_of(s) for s in neighbor_ids]]
    X = np.vstack([nbrs, x_o[None, :], upsample(x_o, nbrs, seed)])
    z = np.concatenate([np.ones(K), -np.ones(K)])
    X.setflags(write=False)
    z.setflags(write=False)
    return DesignSet(X, z, tuple(neighbor_ids), candidate_id)
