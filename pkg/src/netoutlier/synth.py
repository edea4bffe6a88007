"""Synthetic network databases with planted anomalous connected subgraphs."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, FormatError
from .graph import components_of
from .model import Edge, NetworkDatabase, NetworkSample, normalize_edge

TOPOLOGIES = ("ring", "grid")


@dataclass(frozen=True)
class SynthConfig:
    n_nodes: int = 100
    n_samples: int = 120
    n_outliers: int = 10
    topology: str = "ring"
    # ring lattice: each node links to the next ``ring_reach`` nodes, each link rewired with this probability
    rewire_p: float = 0.1
    ring_reach: int = 2
    signal_strength: float = 3.0
    planted_size: int = 10
    heterogeneity: int = 2
    # standard deviation of the per-cluster node means
    cluster_spread: float = 2.0
    two_sided: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_nodes < 2 or self.n_samples < 2:
            raise ConfigError("need at least 2 nodes and 2 samples")
        if not 0 <= self.n_outliers < self.n_samples:
            raise ConfigError("n_outliers must satisfy 0 <= n_outliers < n_samples")
        if not 1 <= self.planted_size <= self.n_nodes:
            raise ConfigError("planted_size must lie in [1, n_nodes]")
        if self.signal_strength < 0:
            raise ConfigError("signal_strength must be >= 0")
        if self.heterogeneity < 1:
            raise ConfigError("heterogeneity must be >= 1")
        if self.topology not in TOPOLOGIES:
            raise ConfigError(f"topology must be one of {TOPOLOGIES}")
        if not 0 <= self.rewire_p <= 1:
            raise ConfigError("rewire_p must lie in [0, 1]")
        if self.ring_reach < 1:
            raise ConfigError("ring_reach must be >= 1")


@dataclass(frozen=True)
class GroundTruth:
    labels: dict[str, int]
    planted: dict[str, tuple[int, ...]]

    def __post_init__(self) -> None:
        outliers = {s for s, v in self.labels.items() if v == 1}
        if set(self.planted) != outliers:
            raise ConfigError("planted keys must be exactly the outlier samples")

    def to_json(self) -> str:
        body = {"labels": self.labels, "planted": {k: list(v) for k, v in self.planted.items()}}
        return json.dumps(body, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> GroundTruth:
        raw = json.loads(text)
        labels = {str(k): int(v) for k, v in raw["labels"].items()}
        planted = {str(k): tuple(int(i) for i in v) for k, v in raw.get("planted", {}).items()}
        return cls(labels, planted)


def ring_lattice(n: int, reach: int, rewire_p: float, rng: np.random.Generator) -> set[Edge]:
    edges: set[Edge] = set()
    for i in range(n):
        for d in range(1, reach + 1):
            j = (i + d) % n
            if rng.random() < rewire_p:
                j = int(rng.integers(n))
            if j != i:
                edges.add(normalize_edge(i, j, n))
    return edges


def grid_lattice(n: int) -> set[Edge]:
    """4-neighbour grid with as many rows as the largest divisor of ``n`` not above sqrt(n)."""
    rows = max(r for r in range(1, int(np.sqrt(n)) + 1) if n % r == 0)
    cols = n // rows
    edges: set[Edge] = set()
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                edges.add((i, i + 1))
            if r + 1 < rows:
                edges.add((i, i + cols))
    return edges


def adjacency_lists(n: int, edges) -> list[list[int]]:
    adj: list[list[int]] = [[] for _ in range(n)]
    for i, j in sorted(edges):
        adj[i].append(j)
        adj[j].append(i)
    return adj


def grow_connected(adj: list[list[int]], size: int, rng: np.random.Generator) -> tuple[int, ...]:
    """Randomised breadth-first growth of a connected node set of the given size.

    Raises
    ------
    ConfigError
        No connected component has ``size`` nodes.
    """
    n = len(adj)
    A = np.zeros((n, n), dtype=bool)
    for i, nbrs in enumerate(adj):
        A[i, nbrs] = True
    eligible = [v for comp in components_of(A) if len(comp) >= size for v in comp]
    if not eligible:
        raise ConfigError(f"planted_size={size} exceeds the largest connected component")
    chosen = {int(rng.choice(sorted(eligible)))}
    while len(chosen) < size:
        frontier = sorted({v for u in chosen for v in adj[u]} - chosen)
        chosen.add(int(rng.choice(frontier)))
    return tuple(sorted(chosen))


def generate_synthetic(cfg: SynthConfig) -> tuple[NetworkDatabase, GroundTruth]:
    """Clustered inliers plus outliers that copy an inlier and shift one connected subgraph."""
    rng = np.random.default_rng(cfg.seed)
    n, m = cfg.n_nodes, cfg.n_samples
    if cfg.topology == "ring":
        edges = ring_lattice(n, cfg.ring_reach, cfg.rewire_p, rng)
    else:
        edges = grid_lattice(n)
    adj = adjacency_lists(n, edges)

    means = rng.normal(0.0, cfg.cluster_spread, size=(cfg.heterogeneity, n))
    cluster = rng.integers(cfg.heterogeneity, size=m)
    X = means[cluster] + rng.standard_normal((m, n))

    outliers = np.sort(rng.choice(m, cfg.n_outliers, replace=False))
    inliers = np.setdiff1d(np.arange(m), outliers)
    width = len(str(m - 1))
    ids = [f"s{k:0{width}d}" for k in range(m)]
    planted: dict[str, tuple[int, ...]] = {}
    for o in outliers:
        X[o] = X[int(rng.choice(inliers))]
        nodes = grow_connected(adj, cfg.planted_size, rng)
        # drawn in both modes so the flag leaves every other draw unchanged
        flip = float(rng.choice([-1.0, 1.0]))
        sign = flip if cfg.two_sided else 1.0
        X[o, list(nodes)] += sign * cfg.signal_strength
        planted[ids[o]] = nodes

    labels = {sid: 0 for sid in ids}
    for o in outliers:
        labels[ids[o]] = 1
    node_width = len(str(n - 1))
    node_ids = tuple(f"v{i:0{node_width}d}" for i in range(n))
    samples = tuple(NetworkSample(sid, row) for sid, row in zip(ids, X))
    db = NetworkDatabase(node_ids, frozenset(edges), samples, labels)
    return db, GroundTruth(labels, planted)


def write_truth(truth: GroundTruth, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(truth.to_json())
    return path


def read_truth(path: str | Path) -> GroundTruth:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    try:
        return GroundTruth.from_json(text)
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"malformed truth file {path}: {exc}") from exc
