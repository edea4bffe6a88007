"""Augmented design, Gram matrix and the squared-hinge primal objective.

Coefficients live in a ``2n`` split space.  The augmented design is::

    Xtilde = [[X1,          X2         ],
              [sqrt(l1) S,  sqrt(l1) S ]]      shape (2K + n) x 2n

with ``X1 = X - z 1^T`` and ``X2 = X + z 1^T``.  Column signs are carried by
``y = (+1,...,+1, -1,...,-1)`` rather than folded into the design, and

    f(w) = w^T Q w + l2 * sum_i max(0, 1 - y_i Q_i^T w)^2,   Q = Xtilde^T Xtilde.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .graph import LaplacianFactor, block_factor
from .neighbors import DesignSet


@dataclass(frozen=True, eq=False)
class SolverProblem:
    Q: np.ndarray
    y: np.ndarray
    lambda1: float
    lambda2: float
    X1: np.ndarray
    X2: np.ndarray
    # n x n Laplacian of the penalty; None when lambda1 == 0
    laplacian: np.ndarray | None
    # original node index of each of the n coefficient pairs
    nodes: np.ndarray
    # square-root factor of ``laplacian``; computed on first use when None
    factor_S: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.X1.shape[1]

    @cached_property
    def S(self) -> np.ndarray | None:
        if self.factor_S is not None:
            return self.factor_S
        if self.laplacian is None or self.lambda1 == 0:
            return None
        return block_factor(self.laplacian).S

    @cached_property
    def Xtilde(self) -> np.ndarray:
        """Augmented design; ``Xtilde.T @ Xtilde`` equals ``Q`` up to rounding."""
        rows, n = self.X1.shape
        Xt = np.zeros((rows + n, 2 * n))
        Xt[:rows, :n] = self.X1
        Xt[:rows, n:] = self.X2
        if self.S is not None:
            r = np.sqrt(self.lambda1) * self.S
            Xt[rows:, :n] = r
            Xt[rows:, n:] = r
        Xt.setflags(write=False)
        return Xt


def _split_y(n: int) -> np.ndarray:
    y = np.concatenate([np.ones(n), -np.ones(n)])
    y.setflags(write=False)
    return y


def _assemble(X1, X2, S, lambda1, lambda2, laplacian, nodes) -> SolverProblem:
    """Gram matrix from the data blocks plus ``lambda1 * [[L, L], [L, L]]`` with ``L = S.T S``."""
    n = X1.shape[1]
    B = np.hstack([X1, X2])
    Q = B.T @ B
    if S is not None and lambda1 > 0:
        L = S.T @ S
        Q += lambda1 * np.tile(L, (2, 2))
    Q = (Q + Q.T) / 2.0
    Q.setflags(write=False)
    return SolverProblem(
        Q, _split_y(n), float(lambda1), float(lambda2), X1, X2, laplacian, nodes, S
    )


def restrict(p: SolverProblem, keep: np.ndarray) -> SolverProblem:
    """Problem over a subset of nodes.

    The penalty on the kept nodes uses the principal submatrix of the
    Laplacian, so the reduced ``Q`` is the matching principal submatrix of
    ``p.Q``.  Its factor is only computed if ``Xtilde`` is requested.
    """
    keep = np.asarray(keep, dtype=int)
    cols = np.concatenate([keep, keep + p.n])
    Q = p.Q[np.ix_(cols, cols)]
    Q.setflags(write=False)
    L = None
    if p.laplacian is not None and p.lambda1 > 0:
        L = p.laplacian[np.ix_(keep, keep)]
    return SolverProblem(
        Q, _split_y(keep.size), p.lambda1, p.lambda2, p.X1[:, keep], p.X2[:, keep], L,
        p.nodes[keep],
    )


def build_problem(
    design: DesignSet, factor: LaplacianFactor | None, lambda1: float, lambda2: float
) -> SolverProblem:
    """Assemble ``Xtilde``, ``Q`` and ``y`` for one candidate and one ``(lambda1, lambda2)``.

    ``factor`` may be ``None`` only when ``lambda1 == 0``; the penalty rows are
    then zero and no Laplacian is consulted.
    """
    if lambda1 < 0 or lambda2 < 0:
        raise ValueError("lambda1 and lambda2 must be nonnegative")
    n = design.n
    if factor is None:
        if lambda1 > 0:
            raise ValueError("a Laplacian factor is required when lambda1 > 0")
        S = L = None
    else:
        S, L = factor.S, factor.L
        if S.shape != (n, n):
            raise ValueError(f"factor is {S.shape}, design has n={n}")
    z = design.z[:, None]
    X1 = design.X - z
    X2 = design.X + z
    return _assemble(X1, X2, S, lambda1, lambda2, L, np.arange(n))


def with_lambda1(base: SolverProblem, factor: LaplacianFactor | None, lambda1: float) -> SolverProblem:
    """Add the network penalty to a problem built with ``lambda1 = 0``.

    Gives the same ``Q`` as ``build_problem`` with ``lambda1`` while reusing
    the data Gram block, which does not depend on ``lambda1``.
    """
    if base.lambda1 != 0:
        raise ValueError("base problem must have lambda1 == 0")
    if lambda1 < 0:
        raise ValueError("lambda1 must be nonnegative")
    if lambda1 == 0:
        return base
    if factor is None:
        raise ValueError("a Laplacian factor is required when lambda1 > 0")
    S = factor.S
    Q = base.Q + lambda1 * np.tile(S.T @ S, (2, 2))
    Q = (Q + Q.T) / 2.0
    Q.setflags(write=False)
    return SolverProblem(
        Q, base.y, float(lambda1), base.lambda2, base.X1, base.X2, factor.L, base.nodes, S
    )


def split(w: np.ndarray) -> np.ndarray:
    """Nonnegative split ``[w+; w-]`` with ``w = w+ - w-``."""
    w = np.asarray(w, dtype=np.float64)
    return np.concatenate([np.maximum(w, 0.0), np.maximum(-w, 0.0)])


def split_penalty(w_tilde: np.ndarray, L: np.ndarray) -> float:
    """``w_tilde.T @ [[L, -L], [-L, L]] @ w_tilde`` for a split vector."""
    w_tilde = np.asarray(w_tilde, dtype=np.float64)
    n = L.shape[0]
    a, b = w_tilde[:n], w_tilde[n:]
    return float(a @ L @ a - 2.0 * (a @ L @ b) + b @ L @ b)


def signed_design(p: SolverProblem) -> np.ndarray:
    """Augmented design with the column signs folded in: ``[[X1, -X2], [r S, -r S]]``."""
    return p.Xtilde * p.y[None, :]


def margins(p: SolverProblem, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(Q w, y * Q w)``."""
    Qw = p.Q @ w
    return Qw, p.y * Qw


def objective_value(p: SolverProblem, w: np.ndarray) -> float:
    w = np.asarray(w, dtype=np.float64)
    Qw, m = margins(p, w)
    hinge = np.maximum(0.0, 1.0 - m)
    return float(w @ Qw + p.lambda2 * (hinge @ hinge))


def gradient(p: SolverProblem, w: np.ndarray) -> np.ndarray:
    """Gradient; only coordinates with margin strictly below 1 contribute to the loss part."""
    w = np.asarray(w, dtype=np.float64)
    Qw, m = margins(p, w)
    act = m < 1.0
    return 2.0 * Qw - 2.0 * p.lambda2 * (p.Q[:, act] @ (p.y[act] * (1.0 - m[act])))


def hessian(p: SolverProblem, w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    _, m = margins(p, w)
    Qa = p.Q[:, m < 1.0]
    H = 2.0 * p.Q + 2.0 * p.lambda2 * (Qa @ Qa.T)
    return (H + H.T) / 2.0
