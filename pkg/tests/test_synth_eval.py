from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.metrics import roc_auc_score

from netoutlier.errors import ConfigError, EvaluationError
from netoutlier.evaluate import roc_auc, subnetwork_recovery
from netoutlier.synth import GroundTruth, SynthConfig, adjacency_lists, generate_synthetic, grow_connected


def is_connected(nodes, adj):
    nodes = set(nodes)
    start = next(iter(nodes))
    seen, stack = {start}, [start]
    while stack:
        for v in adj[stack.pop()]:
            if v in nodes and v not in seen:
                seen.add(v)
                stack.append(v)
    return seen == nodes


def test_deterministic_in_seed():
    cfg = SynthConfig(n_nodes=30, n_samples=20, n_outliers=3, planted_size=5, seed=8)
    a, ta = generate_synthetic(cfg)
    b, tb = generate_synthetic(cfg)
    assert a.equals(b) and ta == tb
    c, _ = generate_synthetic(SynthConfig(n_nodes=30, n_samples=20, n_outliers=3, planted_size=5, seed=9))
    assert not a.equals(c)


@pytest.mark.parametrize("topology", ["ring", "grid"])
def test_planted_sets_connected(topology):
    cfg = SynthConfig(n_nodes=36, n_samples=25, n_outliers=6, planted_size=7, topology=topology, seed=2)
    db, truth = generate_synthetic(cfg)
    adj = adjacency_lists(db.n, db.shared_edges)
    assert set(truth.planted) == {s for s, v in truth.labels.items() if v == 1}
    assert sum(truth.labels.values()) == 6
    for nodes in truth.planted.values():
        assert len(nodes) == 7 and is_connected(nodes, adj)


def test_zero_signal_outliers_copy_an_inlier():
    db, truth = generate_synthetic(SynthConfig(n_nodes=20, n_samples=15, n_outliers=3, planted_size=4, signal_strength=0.0, seed=1))
    vals = {s.sample_id: s.values for s in db.samples}
    inliers = [s for s, v in truth.labels.items() if v == 0]
    for o in truth.planted:
        assert any(np.array_equal(vals[o], vals[i]) for i in inliers)


def test_shift_direction():
    cfg = dict(n_nodes=20, n_samples=15, n_outliers=4, planted_size=4, signal_strength=5.0)
    db, truth = generate_synthetic(SynthConfig(seed=3, **cfg))
    db2, truth2 = generate_synthetic(SynthConfig(seed=3, two_sided=True, **cfg))
    assert truth.planted == truth2.planted
    for o, nodes in truth2.planted.items():
        diff = db2.sample(o).values - db.sample(o).values
        # two-sided shifts are either equal to the one-sided ones or their mirror
        assert np.allclose(diff[list(nodes)], 0.0) or np.allclose(diff[list(nodes)], -10.0)
    # one-sided outliers differ from their zero-signal version by +signal exactly on the planted set
    base, _ = generate_synthetic(SynthConfig(seed=3, **{**cfg, "signal_strength": 0.0}))
    for o, nodes in truth.planted.items():
        diff = db.sample(o).values - base.sample(o).values
        np.testing.assert_allclose(diff[list(nodes)], 5.0)
        np.testing.assert_array_equal(np.delete(diff, list(nodes)), 0.0)


def test_config_errors():
    with pytest.raises(ConfigError):
        SynthConfig(n_outliers=120, n_samples=120)
    with pytest.raises(ConfigError):
        SynthConfig(planted_size=101)
    # two components of 3 nodes each cannot host a connected set of 4
    adj = adjacency_lists(6, {(0, 1), (1, 2), (3, 4), (4, 5)})
    with pytest.raises(ConfigError, match="largest connected component"):
        grow_connected(adj, 4, np.random.default_rng(0))
    assert len(grow_connected(adj, 3, np.random.default_rng(0))) == 3


def test_truth_json_roundtrip():
    _, truth = generate_synthetic(SynthConfig(n_nodes=15, n_samples=10, n_outliers=2, planted_size=3))
    assert GroundTruth.from_json(truth.to_json()) == truth


def test_auc_examples():
    labels = {"a": 1, "b": 1, "c": 0, "d": 0}
    _, auc = roc_auc({"a": 4, "b": 3, "c": 2, "d": 1}, labels)
    assert auc == 1.0
    _, auc = roc_auc({"a": 1, "b": 2, "c": 3, "d": 4}, labels)
    assert auc == 0.0
    curve, auc = roc_auc({"a": 1, "b": 1, "c": 1, "d": 1}, labels)
    assert auc == 0.5 and curve == [(0.0, 0.0), (1.0, 1.0)]
    with pytest.raises(EvaluationError):
        roc_auc({"a": 1, "b": 2}, {"a": 1, "b": 1})


def test_auc_monte_carlo():
    rng = np.random.default_rng(0)
    ids = [f"x{i}" for i in range(10_000)]
    labels = {s: int(rng.random() < 0.3) for s in ids}
    scores = {s: float(rng.random()) for s in ids}
    _, auc = roc_auc(scores, labels)
    assert abs(auc - 0.5) <= 0.02


def rank_statistic(scores, labels):
    pos = [scores[s] for s in labels if labels[s] == 1]
    neg = [scores[s] for s in labels if labels[s] == 0]
    wins = sum((p > q) + 0.5 * (p == q) for p in pos for q in neg)
    return wins / (len(pos) * len(neg))


@settings(max_examples=80, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 6), st.booleans()), min_size=2, max_size=40))
def test_auc_equals_rank_statistic_with_ties(pairs):
    labels = {f"s{i}": int(b) for i, (_, b) in enumerate(pairs)}
    if len(set(labels.values())) < 2:
        return
    scores = {f"s{i}": float(v) for i, (v, _) in enumerate(pairs)}
    curve, auc = roc_auc(scores, labels)
    assert auc == pytest.approx(rank_statistic(scores, labels), abs=1e-12)
    ids = sorted(labels)
    assert auc == pytest.approx(roc_auc_score([labels[s] for s in ids], [scores[s] for s in ids]), abs=1e-12)
    assert curve[0] == (0.0, 0.0) and curve[-1] == (1.0, 1.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=30, unique=True), st.integers(0, 2**31 - 1))
def test_auc_negation_complement(values, seed):
    rng = np.random.default_rng(seed)
    labels = {f"s{i}": int(b) for i, b in enumerate(rng.permutation([0, 1] * (len(values) // 2) + [0] * (len(values) % 2)))}
    scores = {f"s{i}": v for i, v in enumerate(values)}
    neg = {s: -v for s, v in scores.items()}
    assert roc_auc(scores, labels)[1] + roc_auc(neg, labels)[1] == pytest.approx(1.0, abs=1e-12)


def test_recovery_examples():
    t = {1, 2, 3, 4}
    assert subnetwork_recovery(t, t) == {"precision": 1.0, "recall": 1.0, "f1": 1.0}
    assert subnetwork_recovery({7, 8}, t) == {"precision": 0.0, "recall": 0.0, "f1": 0.0}
    r = subnetwork_recovery({1, 2}, t)
    assert r["precision"] == 1.0 and r["recall"] == 0.5 and r["f1"] == pytest.approx(2 / 3)
    assert subnetwork_recovery(set(), t)["precision"] == 0.0
    with pytest.raises(EvaluationError):
        subnetwork_recovery({1}, set())


@settings(max_examples=80, deadline=None)
@given(st.sets(st.integers(0, 15)), st.sets(st.integers(0, 15), min_size=1), st.integers(0, 15))
def test_recovery_bounded_and_monotone(found, truth, extra):
    r = subnetwork_recovery(found, truth)
    assert all(0.0 <= v <= 1.0 for v in r.values())
    if extra in truth and extra not in found:
        # adding a true node while also removing a false one raises the overlap, sizes fixed
        false = sorted(found - truth)
        if false:
            more = (found - {false[0]}) | {extra}
            r2 = subnetwork_recovery(more, truth)
            assert r2["precision"] >= r["precision"] and r2["recall"] >= r["recall"] and r2["f1"] >= r["f1"]
