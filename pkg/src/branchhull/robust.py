"""Robust BranchHull: BranchHull with an l1-penalized slack on the ``m`` side.

    minimize ||h||^2 + ||m||^2 + lambda ||e||_1
    subject to sign(y_l) (c_l^T m + e_l)(b_l^T h) >= |y_l|,  s_l b_l^T h >= 0

The splitting is the BranchHull one with ``q = Cm + e``.  The ``(m, e)``
update is not separable, so it is solved by alternating an exact linear
solve in ``m`` with entrywise soft-thresholding in ``e``.  Both sub-steps
are exact block minimizations of a convex function whose nonsmooth part is
separable, so the alternation converges to the joint minimizer.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ProblemInstance
from .solver import (
    SolverOptions,
    SolverResult,
    _equilibrated_rows,
    _Factor,
    _infeasible_result,
    _run_admm,
    bh_feasible,
)

__all__ = ["RbhOptions", "solve_rbh", "rbh_violation", "rbh_objective"]

INNER_TOL = 1e-10


@dataclass(frozen=True)
class RbhOptions:
    """Options for :func:`solve_rbh`.

    Attributes
    ----------
    lambda_ : float
        Weight of the slack penalty (``lambda`` is reserved in Python).
    inner : SolverOptions
        Options for the outer ADMM loop.
    inner_alternations : int
        Cap on ``m``/``e`` alternations per outer iteration; the loop stops
        earlier once the block changes by less than ``1e-10``.
    """

    lambda_: float = 1.0
    inner: SolverOptions = field(default_factory=SolverOptions)
    inner_alternations: int = 100

    def __post_init__(self):
        if not self.lambda_ > 0:
            raise ValueError("lambda must be positive")
        if self.inner_alternations < 1:
            raise ValueError("inner_alternations must be >= 1")


def soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


class _MEBlock:
    """``argmin ||m||^2 + sum_l w_l |e_l| + rho/2 ||Cm + e - v||^2``.

    Works on row-normalized ``C``; ``weights`` carries ``lambda`` times the
    row scale so that the penalty is the one on the original slack.
    """

    def __init__(self, C, weights, alternations, rho):
        self.C = C
        self.w = weights
        self.size = C.shape[1] + C.shape[0]
        self.alternations = alternations
        self.factor = _Factor(C, rho)
        self.rho = rho
        self.e = np.zeros(C.shape[0])
        self.m = np.zeros(C.shape[1])
        self.inner_iters = 0

    def update(self, rho):
        self.rho = rho
        self.factor.update(rho)

    def step(self, v):
        C, rho = self.C, self.rho
        m, e = self.m, self.e
        for _ in range(self.alternations):
            m_new = self.factor.solve(rho * (C.T @ (v - e)))
            Cm = C @ m_new
            e_new = soft_threshold(v - Cm, self.w / rho)
            change = max(np.max(np.abs(m_new - m), initial=0.0), np.max(np.abs(e_new - e), initial=0.0))
            m, e = m_new, e_new
            self.inner_iters += 1
            if change <= INNER_TOL:
                break
        self.m, self.e = m, e
        return m, e, C @ m + e

    def adjoint_norm(self, r) -> float:
        return float(np.hypot(np.linalg.norm(self.C.T @ r), np.linalg.norm(r)))


def rbh_violation(instance: ProblemInstance, h, m, e):
    """Per-row violation of the shifted constraints (``e`` in original units)."""
    y = instance.y
    p = instance.B @ h
    q = instance.C @ m + (0.0 if e is None else e)
    prod = np.sign(y) * p * q
    return np.maximum.reduce([np.abs(y) - prod, -instance.s * p, np.zeros_like(y)])


def rbh_objective(h, m, e, lam: float) -> float:
    return float(h @ h + m @ m + lam * np.sum(np.abs(e)))


def solve_rbh(instance: ProblemInstance, opts: RbhOptions | None = None) -> SolverResult:
    """Solve the Robust BranchHull program by ADMM.

    Returns a :class:`SolverResult` with ``e_star`` set and ``objective``
    including the ``lambda ||e||_1`` term.
    """
    opts = opts or RbhOptions()
    if not bh_feasible(instance, robust=True):
        return _infeasible_result(instance)
    B, C, c, sigma, tau = _equilibrated_rows(instance)
    nc = np.linalg.norm(instance.C, axis=1)
    nc[nc == 0] = 1.0
    # slack in normalized rows is e / ||c_l||, so its weight picks up ||c_l||
    block = _MEBlock(C, opts.lambda_ * nc, opts.inner_alternations, opts.inner.rho)

    def violation(h, m, e_scaled):
        return rbh_violation(instance, h, m, e_scaled * nc)

    res = _run_admm(instance, opts.inner, B, c, sigma, tau, block, violation)
    e = res.e_star * nc + 0.0  # no negative zeros in the output
    res.e_star = e
    res.objective = rbh_objective(res.h_star, res.m_star, e, opts.lambda_)
    return res
