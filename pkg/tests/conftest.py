from __future__ import annotations

import numpy as np
import pytest

from netoutlier.graph import graph_from_weights, network_factor
from netoutlier.model import NetworkDatabase, NetworkSample
from netoutlier.neighbors import DesignSet
from netoutlier.objective import build_problem


def random_graph(rng: np.random.Generator, n: int, p: float = 0.3):
    """Symmetric weighted adjacency with weights in (0, 1]."""
    mask = np.triu(rng.random((n, n)) < p, 1)
    W = np.where(mask, rng.uniform(0.05, 1.0, (n, n)), 0.0)
    return graph_from_weights(W + W.T)


def random_design(rng: np.random.Generator, n: int, K: int, scale: float = 1.0) -> DesignSet:
    X = rng.normal(size=(2 * K, n)) * scale
    X[K:] += rng.normal(size=n) * scale
    z = np.concatenate([np.ones(K), -np.ones(K)])
    return DesignSet(X, z, tuple(f"n{k}" for k in range(K)), "c")


def random_problem(rng, n=8, K=3, lambda1=1.0, lambda2=1.0, scale=0.3):
    design = random_design(rng, n, K, scale)
    factor = network_factor(random_graph(rng, n)) if lambda1 > 0 else None
    return build_problem(design, factor, lambda1, lambda2)


def make_db(values, edges=(), labels=None, overrides=None) -> NetworkDatabase:
    values = np.asarray(values, dtype=float)
    m, n = values.shape
    overrides = overrides or {}
    samples = tuple(
        NetworkSample(f"s{k}", values[k], overrides.get(f"s{k}")) for k in range(m)
    )
    return NetworkDatabase(tuple(f"v{i}" for i in range(n)), frozenset(edges), samples, labels)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
