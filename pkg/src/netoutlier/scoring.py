"""Subspace LOF scoring, explanatory subnetworks and the (K, lambda1) ensemble."""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .errors import EmptySupport, NumericalFailure, ParameterError
from .graph import LaplacianFactor, SummaryGraph, build_summary_graph, components_of, network_factor
from .model import NetworkDatabase, impute_missing
from .neighbors import _check_k, assemble_design, neighbor_order
from .objective import build_problem, objective_value, with_lambda1
from .solver import ModelCoefficients, SolverOptions, recover_coefficients, solve

DEFAULT_K_LIST = (10, 15, 20, 25, 30)
DEFAULT_LAMBDA1_LIST = (0.1, 0.5, 1.0, 2.5, 5.0, 10.0)
DEFAULT_LAMBDA2 = 1.0
SCALINGS = ("rms", "maxabs", "none")

# guards the 1 / mean-reachability division for duplicated points
_LRD_EPS = 1e-10


@dataclass(frozen=True)
class DetectConfig:
    k_list: tuple[int, ...] = DEFAULT_K_LIST
    lambda1_list: tuple[float, ...] = DEFAULT_LAMBDA1_LIST
    lambda2: float = DEFAULT_LAMBDA2
    seed: int = 0
    scaling: str = "rms"
    solver: SolverOptions = field(default_factory=SolverOptions)
    shrinking: bool = True
    trace: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "k_list", tuple(int(k) for k in self.k_list))
        object.__setattr__(self, "lambda1_list", tuple(float(v) for v in self.lambda1_list))
        if not self.k_list or not self.lambda1_list:
            raise ParameterError("k_list and lambda1_list must be nonempty")
        if any(k < 1 for k in self.k_list):
            raise ParameterError("every K must be a positive integer")
        if any(not (v >= 0 and math.isfinite(v)) for v in self.lambda1_list):
            raise ParameterError("lambda1 values must be finite and nonnegative")
        if not (self.lambda2 >= 0 and math.isfinite(self.lambda2)):
            raise ParameterError("lambda2 must be finite and nonnegative")
        if self.scaling not in SCALINGS:
            raise ParameterError(f"scaling must be one of {SCALINGS}")

    @property
    def grid(self) -> list[tuple[int, float]]:
        """Grid points in winner tie-break order: smaller K first, then smaller lambda1."""
        return sorted({(k, v) for k in self.k_list for v in self.lambda1_list})

    def to_dict(self) -> dict:
        return {
            "k_list": list(self.k_list),
            "lambda1_list": list(self.lambda1_list),
            "lambda2": float(self.lambda2),
            "seed": int(self.seed),
            "scaling": self.scaling,
            "shrinking": self.shrinking,
            "solver": {
                "max_iterations": self.solver.max_iterations,
                "gradient_tolerance": self.solver.gradient_tolerance,
                "sparsify_threshold": self.solver.sparsify_threshold,
                "line_search_shrink": self.solver.line_search_shrink,
                "armijo_constant": self.solver.armijo_constant,
                "newton_system": self.solver.newton_system,
            },
        }


@dataclass(frozen=True)
class Explanation:
    candidate_id: str
    selected_nodes: tuple[int, ...]
    subnetworks: tuple[tuple[int, ...], ...]
    weights: dict[int, float]
    fallback: bool = False


@dataclass(frozen=True)
class SampleResult:
    sample_id: str
    score: float
    k: int
    lambda1: float
    explanation: Explanation
    trace: list[dict] | None = None
    error: str | None = None

    @property
    def fallback(self) -> bool:
        return self.explanation.fallback


@dataclass
class OutlierReport:
    samples: dict[str, SampleResult]
    ranking: list[str]
    config: dict = field(default_factory=dict)
    # per-sample score at every grid point; kept in memory only
    grid_scores: dict[str, dict[tuple[int, float], float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        out: dict = {"config": self.config, "ranking": list(self.ranking), "samples": {}}
        failures = {}
        for sid, r in self.samples.items():
            ex = r.explanation
            rec = {
                "score": r.score,
                "config": {"k": r.k, "lambda1": r.lambda1},
                "nodes": list(ex.selected_nodes),
                "subnetworks": [list(c) for c in ex.subnetworks],
                "weights": [ex.weights[i] for i in ex.selected_nodes],
                "fallback": ex.fallback,
            }
            if r.trace is not None:
                rec["trace"] = r.trace
            out["samples"][sid] = rec
            if r.error is not None:
                failures[sid] = r.error
        if failures:
            out["failures"] = failures
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> OutlierReport:
        raw = json.loads(text)
        failures = raw.get("failures", {})
        samples = {}
        for sid, rec in raw["samples"].items():
            nodes = tuple(int(i) for i in rec["nodes"])
            ex = Explanation(
                sid,
                nodes,
                tuple(tuple(int(i) for i in c) for c in rec["subnetworks"]),
                dict(zip(nodes, (float(v) for v in rec.get("weights", [])))),
                bool(rec.get("fallback", False)),
            )
            samples[sid] = SampleResult(
                sid, float(rec["score"]), int(rec["config"]["k"]),
                float(rec["config"]["lambda1"]), ex, rec.get("trace"), failures.get(sid),
            )
        return cls(samples, list(raw["ranking"]), raw.get("config", {}))


def extract_subnetworks(
    coeffs: ModelCoefficients | None, g: SummaryGraph, candidate_id: str = ""
) -> Explanation:
    """Connected components of the summary graph induced on the nonzero coefficients."""
    if coeffs is None or not coeffs.support:
        return Explanation(candidate_id, (), (), {})
    if coeffs.w.shape != (g.n,):
        raise ValueError(f"coefficients have length {coeffs.w.size}, graph has n={g.n}")
    sel = np.array(sorted(coeffs.support), dtype=int)
    comps = components_of(g.A[np.ix_(sel, sel)])
    subnets = tuple(tuple(int(sel[i]) for i in c) for c in comps)
    weights = {int(i): float(coeffs.w[i]) for i in sel}
    return Explanation(candidate_id, tuple(int(i) for i in sel), subnets, weights)


def local_outlier_factor(points: np.ndarray, index: int, k: int) -> float:
    """LOF of ``points[index]`` against the other rows, Euclidean distance, MinPts = ``k``.

    Neighbourhoods hold exactly ``k`` points (distance ties broken by row
    order).  Mean reachability distances get ``1e-10`` added before
    inversion so exact duplicates give finite densities.
    """
    Z = np.asarray(points, dtype=np.float64)
    if Z.ndim == 1:
        Z = Z[:, None]
    m = Z.shape[0]
    if not 1 <= k <= m - 1:
        raise ParameterError(f"K={k} violates K <= m-1 = {m - 1}")
    D = cdist(Z, Z)
    np.fill_diagonal(D, np.inf)
    # k-distance does not depend on how ties are ordered
    kdist = np.partition(D, k - 1, axis=1)[:, k - 1]
    nbrs = np.argsort(D[index], kind="stable")[:k]

    def lrd(p: int) -> float:
        nn = nbrs if p == index else np.argsort(D[p], kind="stable")[:k]
        reach = np.maximum(D[p, nn], kdist[nn])
        return 1.0 / (reach.mean() + _LRD_EPS)

    return float(np.mean([lrd(q) for q in nbrs]) / lrd(index))


def lof_score(
    db: NetworkDatabase, candidate_id: str, selected_nodes, K: int
) -> tuple[float, bool]:
    """Subspace LOF of the candidate; ``(score, fallback)``.

    An empty node selection falls back to all ``n`` coordinates and is
    flagged by the second return value.
    """
    _check_k(db, K)
    sel = sorted(int(i) for i in selected_nodes)
    fallback = not sel
    Z = db.values if fallback else db.values[:, sel]
    return local_outlier_factor(Z, db.index_of(candidate_id), K), fallback


def prepare_database(db: NetworkDatabase, scaling: str = "rms") -> NetworkDatabase:
    """Impute missing cells, then divide all values by one global constant.

    ``rms`` uses the root-mean-square of all values, ``maxabs`` the largest
    magnitude.  A single constant leaves cosine neighbours and LOF ratios
    unchanged; it only fixes the scale the regression sees.
    """
    if scaling not in SCALINGS:
        raise ParameterError(f"scaling must be one of {SCALINGS}")
    db = impute_missing(db)
    if scaling == "none":
        return db
    v = db.values
    c = float(np.sqrt(np.mean(v * v))) if scaling == "rms" else float(np.abs(v).max())
    if c == 0.0 or not math.isfinite(c):
        return db
    return db.with_values(v / c)


_FACTOR_CACHE: dict[bytes, LaplacianFactor] = {}


def _cached_factor(graph: SummaryGraph) -> LaplacianFactor:
    """Laplacian factor memoised by adjacency; shared topologies repeat across candidates."""
    key = hashlib.sha1(graph.A.tobytes()).digest() + graph.A.shape[0].to_bytes(4, "little")
    factor = _FACTOR_CACHE.get(key)
    if factor is None:
        if len(_FACTOR_CACHE) >= 64:
            _FACTOR_CACHE.clear()
        factor = _FACTOR_CACHE[key] = network_factor(graph)
    return factor


def _fallback_result(db, cid, K, l1, error=None, trace=None) -> SampleResult:
    score, _ = lof_score(db, cid, (), K)
    return SampleResult(cid, score, K, l1, Explanation(cid, (), (), {}, True), trace, error)


def _fit_config(p, opts, shrinking):
    w, trace = solve(p, opts, shrinking=shrinking)
    coeffs = recover_coefficients(
        w, opts, iterations_used=len(trace) - 1, final_objective=objective_value(p, w)
    )
    return coeffs, trace


def _score_candidate(
    db: NetworkDatabase, candidate_id: str, grid, lambda2, seed, opts, shrinking
) -> list[SampleResult]:
    """One result per grid point; design, graph and factor are shared across lambda1."""
    order = neighbor_order(db, candidate_id)
    results = []
    by_k: dict[int, list] = {}
    for K, l1 in grid:
        if K not in by_k:
            nbrs = order[:K]
            design = assemble_design(db, candidate_id, K, seed, neighbor_ids=nbrs)
            graph = build_summary_graph(db, candidate_id, nbrs)
            by_k = {K: [build_problem(design, None, 0.0, lambda2), graph, None]}
        base, graph, factor = by_k[K]
        if l1 > 0 and factor is None:
            # the lambda1 = 0 path never touches the Laplacian
            factor = by_k[K][2] = _cached_factor(graph)
        trace = None
        try:
            coeffs, trace = _fit_config(with_lambda1(base, factor, l1), opts, shrinking)
        except EmptySupport:
            results.append(_fallback_result(db, candidate_id, K, l1, trace=trace))
            continue
        except NumericalFailure as exc:
            results.append(_fallback_result(db, candidate_id, K, l1, str(exc), exc.trace))
            continue
        ex = extract_subnetworks(coeffs, graph, candidate_id)
        score, _ = lof_score(db, candidate_id, ex.selected_nodes, K)
        results.append(SampleResult(candidate_id, score, K, l1, ex, trace))
    return results


def detect_one(
    db: NetworkDatabase,
    candidate_id: str,
    K: int,
    lambda1: float,
    lambda2: float = DEFAULT_LAMBDA2,
    seed: int = 0,
    opts: SolverOptions = SolverOptions(),
    *,
    shrinking: bool = True,
) -> SampleResult:
    """Score and explain one candidate under one ``(K, lambda1, lambda2)``.

    ``db`` is used as given (no imputation or scaling); see ``prepare_database``.
    """
    _check_k(db, K)
    if lambda1 < 0 or lambda2 < 0:
        raise ParameterError("lambda1 and lambda2 must be nonnegative")
    return _score_candidate(db, candidate_id, [(int(K), float(lambda1))], lambda2, seed, opts, shrinking)[0]


def _candidate_task(args):
    db, cid, grid, lambda2, seed, opts, shrinking = args
    return _score_candidate(db, cid, grid, lambda2, seed, opts, shrinking)


def _best_of(results: list[SampleResult], keep_trace: bool) -> SampleResult:
    best = results[0]
    for r in results[1:]:
        if r.score > best.score:
            best = r
    error = next((r.error for r in results if r.error is not None), None)
    return SampleResult(
        best.sample_id, best.score, best.k, best.lambda1, best.explanation,
        best.trace if keep_trace else None, error,
    )


def detect_sample(db: NetworkDatabase, candidate_id: str, config: DetectConfig = DetectConfig()) -> SampleResult:
    """Ensemble result for a single sample (same preparation as ``detect_all``)."""
    db = prepare_database(db, config.scaling)
    for K in config.k_list:
        _check_k(db, K)
    results = _score_candidate(
        db, candidate_id, config.grid, config.lambda2, config.seed, config.solver, config.shrinking
    )
    return _best_of(results, config.trace)


def detect_all(db: NetworkDatabase, config: DetectConfig = DetectConfig(), jobs: int = 1) -> OutlierReport:
    """Run the ensemble over every sample; the per-sample score is the max over the grid.

    The winning grid point is the first maximiser in (K, lambda1) order.
    Results do not depend on ``jobs``.
    """
    db = prepare_database(db, config.scaling)
    for K in config.k_list:
        _check_k(db, K)
    grid = config.grid
    tasks = [
        (db, cid, grid, config.lambda2, config.seed, config.solver, config.shrinking)
        for cid in db.sample_ids
    ]
    if jobs > 1:
        chunk = max(1, len(tasks) // (4 * jobs))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_sample = list(pool.map(_candidate_task, tasks, chunksize=chunk))
    else:
        per_sample = [_candidate_task(t) for t in tasks]

    samples: dict[str, SampleResult] = {}
    grid_scores: dict[str, dict[tuple[int, float], float]] = {}
    for cid, results in zip(db.sample_ids, per_sample):
        samples[cid] = _best_of(results, config.trace)
        grid_scores[cid] = {(r.k, r.lambda1): r.score for r in results}
    ranking = sorted(samples, key=lambda s: (-samples[s].score, s))
    return OutlierReport(samples, ranking, config.to_dict(), grid_scores)
