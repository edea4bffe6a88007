"""Newton's method with Armijo backtracking on the squared-hinge primal.

The Hessian ``H = 2Q + 2 l2 Q_A Q_A^T`` (``A`` = active coordinates) is
singular whenever ``Q`` is.  Writing it as ``H = 2Q (I + l2 D Q)`` with
``D`` the active-set indicator, one exact solution of ``H d = -g`` is
``d = v - w`` where ``v`` is zero off the active set and

    (I + l2 Q_AA) v_A = l2 y_A.

``I + l2 Q_AA`` is symmetric positive definite, so the step needs no
regularisation and a full step lands on the sparse representative of the
minimiser.  A ridge-regularised dense solve of ``H d = -g`` is available via
``newton_system="ridge"``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import LinAlgError, LinAlgWarning, cho_factor, cho_solve, solve as dense_solve

from .errors import EmptySupport, NumericalFailure
from .objective import SolverProblem, hessian, objective_value, restrict


@dataclass(frozen=True)
class SolverOptions:
    max_iterations: int = 10
    gradient_tolerance: float = 1e-6
    sparsify_threshold: float = 1e-8
    line_search_shrink: float = 0.5
    armijo_constant: float = 1e-4
    max_halvings: int = 20
    newton_system: str = "active"
    ridge: float = 1e-10

    def __post_init__(self) -> None:
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        for name in ("gradient_tolerance", "sparsify_threshold", "armijo_constant", "ridge"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.line_search_shrink < 1:
            raise ValueError("line_search_shrink must lie in (0, 1)")
        if self.newton_system not in ("active", "ridge"):
            raise ValueError("newton_system must be 'active' or 'ridge'")


@dataclass(frozen=True, eq=False)
class ModelCoefficients:
    w: np.ndarray
    support: frozenset[int]
    iterations_used: int
    final_objective: float


def _evaluate(p: SolverProblem, w: np.ndarray):
    Qw = p.Q @ w
    m = p.y * Qw
    act = m < 1.0
    resid = 1.0 - m[act]
    f = float(w @ Qw + p.lambda2 * (resid @ resid))
    g = 2.0 * Qw - 2.0 * p.lambda2 * (p.Q[:, act] @ (p.y[act] * resid))
    return f, g, act


def line_search(
    p: SolverProblem,
    w: np.ndarray,
    direction: np.ndarray,
    opts: SolverOptions,
    *,
    f0: float | None = None,
    g: np.ndarray | None = None,
) -> float:
    """Largest ``shrink**k`` (k = 0..max_halvings) passing the Armijo test; 0 if none or not a descent direction."""
    if f0 is None or g is None:
        f0, g, _ = _evaluate(p, w)
    slope = float(g @ direction)
    if not slope < 0.0:
        return 0.0
    eta = 1.0
    for _ in range(opts.max_halvings + 1):
        if objective_value(p, w + eta * direction) <= f0 + opts.armijo_constant * eta * slope:
            return eta
        eta *= opts.line_search_shrink
    return 0.0


def newton_target(p: SolverProblem, act: np.ndarray) -> np.ndarray:
    """Minimiser of the quadratic model for a fixed active set (zero off the set)."""
    v = np.zeros(p.y.size)
    idx = np.flatnonzero(act)
    if idx.size == 0 or p.lambda2 == 0.0:
        return v
    M = p.lambda2 * p.Q[np.ix_(idx, idx)]
    M.flat[:: idx.size + 1] += 1.0
    rhs = p.lambda2 * p.y[idx]
    try:
        v[idx] = cho_solve(cho_factor(M), rhs)
    except LinAlgError:
        v[idx] = np.linalg.lstsq(M, rhs, rcond=None)[0]
    return v


def _ridge_direction(p: SolverProblem, w: np.ndarray, g: np.ndarray, ridge: float) -> np.ndarray:
    H = hessian(p, w)
    H[np.diag_indices_from(H)] += ridge
    try:
        # H is singular up to the ridge, so scipy's conditioning warning is expected here
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LinAlgWarning)
            return -dense_solve(H, g, assume_a="pos")
    except LinAlgError:
        return -np.linalg.lstsq(H, g, rcond=None)[0]


def newton_solve(
    p: SolverProblem, opts: SolverOptions = SolverOptions(), initial: np.ndarray | None = None
) -> tuple[np.ndarray, list[dict]]:
    """Minimise the primal objective from ``initial`` (default uniform ``1/2n``).

    Returns the final iterate and a trace with one entry per iterate
    (entry 0 is the starting point), so ``len(trace) - 1`` steps were taken.

    Raises
    ------
    NumericalFailure
        Objective or gradient became non-finite.
    """
    size = p.y.size
    w = np.full(size, 1.0 / size) if initial is None else np.array(initial, dtype=np.float64)
    if w.shape != (size,):
        raise ValueError(f"initial point has shape {w.shape}, expected ({size},)")
    trace: list[dict] = []
    step = 0.0
    for it in range(opts.max_iterations + 1):
        f, g, act = _evaluate(p, w)
        gnorm = float(np.max(np.abs(g))) if size else 0.0
        trace.append(
            {"iteration": it, "objective": f, "grad_norm": gnorm, "step": step,
             "active_size": int(act.sum())}
        )
        if not (math.isfinite(f) and np.all(np.isfinite(g))):
            raise NumericalFailure(f"non-finite objective or gradient at iteration {it}", trace)
        if gnorm <= opts.gradient_tolerance or it == opts.max_iterations:
            break
        if opts.newton_system == "active":
            target = newton_target(p, act)
            d = target - w
        else:
            target = None
            d = _ridge_direction(p, w, g, opts.ridge)
        eta = line_search(p, w, d, opts, f0=f, g=g)
        if eta == 0.0:
            target = None
            d = -g
            eta = line_search(p, w, d, opts, f0=f, g=g)
            if eta == 0.0:
                break
        # a full step lands exactly on the target, keeping its zeros exact
        w = target.copy() if (eta == 1.0 and target is not None) else w + eta * d
        step = eta
    return w, trace


def restrict_problem(p: SolverProblem, keep: np.ndarray) -> SolverProblem:
    """Problem over the kept nodes only; see ``objective.restrict``."""
    return restrict(p, keep)


def shrink_support(
    p: SolverProblem, w: np.ndarray, opts: SolverOptions = SolverOptions()
) -> tuple[SolverProblem, np.ndarray]:
    """Drop node pairs ``(i, n+i)`` whose combined magnitude is below the sparsify threshold.

    Returns the reduced problem and the kept node positions (indices into
    ``p``'s node space).  The input problem is returned unchanged when
    nothing falls below the threshold.

    Raises
    ------
    EmptySupport
        Every pair is below the threshold.
    """
    n = p.n
    mag = np.abs(w[:n]) + np.abs(w[n:])
    keep = np.flatnonzero(mag >= opts.sparsify_threshold)
    if keep.size == n:
        return p, np.arange(n)
    if keep.size == 0:
        raise EmptySupport("all coefficient pairs fell below the sparsify threshold")
    return restrict_problem(p, keep), keep


def solve(
    p: SolverProblem,
    opts: SolverOptions = SolverOptions(),
    initial: np.ndarray | None = None,
    *,
    shrinking: bool = True,
) -> tuple[np.ndarray, list[dict]]:
    """Newton's method with support shrinking between restarts.

    Each round takes one Newton step on the full problem (which re-activates
    any dropped coordinate whose margin became violated), shrinks to the
    surviving nodes and iterates on the reduced problem.  The loop ends when
    a full-problem gradient check passes or the iteration budget is spent.
    Trace objectives inside reduced rounds are those of the reduced problem.
    """
    if not shrinking:
        return newton_solve(p, opts, initial)
    n = p.n
    size = 2 * n
    w = np.full(size, 1.0 / size) if initial is None else np.array(initial, dtype=np.float64)
    budget = opts.max_iterations
    trace: list[dict] = []

    def extend(entries: list[dict]) -> None:
        for e in entries[1:] if trace else entries:
            trace.append({**e, "iteration": len(trace)})

    while True:
        used = len(trace) - 1 if trace else 0
        w, tr = newton_solve(p, replace(opts, max_iterations=min(1, budget - used)), w)
        extend(tr)
        if len(tr) == 1 or len(trace) - 1 >= budget:
            break
        try:
            sub, keep = shrink_support(p, w, opts)
        except EmptySupport:
            # an intermediate iterate at zero is not a minimiser; keep iterating on the full problem
            continue
        if keep.size == n:
            continue
        cols = np.concatenate([keep, keep + n])
        ws, tr = newton_solve(sub, replace(opts, max_iterations=budget - (len(trace) - 1)), w[cols])
        extend(tr)
        w = np.zeros(size)
        w[cols] = ws
    return w, trace


def recover_coefficients(
    w_tilde: np.ndarray,
    opts: SolverOptions = SolverOptions(),
    *,
    iterations_used: int = 0,
    final_objective: float = math.nan,
) -> ModelCoefficients:
    """Collapse the split vector to node weights, zero tiny entries, rescale to unit L1 norm.

    Raises
    ------
    EmptySupport
        No entry survives the threshold.
    """
    w_tilde = np.asarray(w_tilde, dtype=np.float64)
    n = w_tilde.size // 2
    w = w_tilde[:n] + w_tilde[n:]
    w[np.abs(w) < opts.sparsify_threshold] = 0.0
    total = np.abs(w).sum()
    if total == 0.0:
        raise EmptySupport("recovered coefficient vector is zero")
    w = w / total
    return ModelCoefficients(
        w, frozenset(np.flatnonzero(w).tolist()), iterations_used, float(final_objective)
    )


def fit(
    p: SolverProblem,
    opts: SolverOptions = SolverOptions(),
    initial: np.ndarray | None = None,
    *,
    shrinking: bool = True,
) -> tuple[ModelCoefficients, list[dict]]:
    """Solve and recover in one call; the trace is returned alongside."""
    w, trace = solve(p, opts, initial, shrinking=shrinking)
    coeffs = recover_coefficients(
        w, opts, iterations_used=len(trace) - 1, final_objective=objective_value(p, w)
    )
    return coeffs, trace
