"""Operator-splitting solver for the BranchHull program.

The program

    minimize ||h||^2 + ||m||^2
    subject to sign(y_l) (b_l^T h)(c_l^T m) >= |y_l|,  s_l b_l^T h >= 0

is split as ``f(h, m) + g(p, q)`` with the coupling ``p = Bh, q = Cm``:
``f`` is the quadratic objective and ``g`` the indicator of the row sets,
whose prox is the planar projection in :mod:`branchhull.projection`.  The
iteration is scaled-form ADMM with over-relaxation and residual balancing.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

from .core import ProblemInstance, constraint_violation
from .projection import project_rows

__all__ = [
    "SolverOptions",
    "SolverResult",
    "solve_bh",
    "solve_bh_oracle",
    "kkt_residuals",
    "row_constraints",
    "bh_feasible",
]

log = logging.getLogger(__name__)

_DIVERGENCE_WINDOW = 1000
_MAX_RHO_UPDATES = 30
_RHO_CADENCE = 10


@dataclass(frozen=True)
class SolverOptions:
    """Knobs for :func:`solve_bh`.

    ``tol_primal`` and ``tol_dual`` are used both as absolute and relative
    tolerances in the usual ADMM stopping test.
    """

    rho: float = 1.0
    max_iters: int = 50000
    tol_primal: float = 1e-9
    tol_dual: float = 1e-9
    over_relaxation: float = 1.6
    adaptive_rho: bool = True

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if not (self.tol_primal > 0 and self.tol_dual > 0):
            raise ValueError("tolerances must be positive")
        if not 1.0 <= self.over_relaxation <= 1.9:
            raise ValueError("over_relaxation must lie in [1.0, 1.9]")


@dataclass
class SolverResult:
    h_star: np.ndarray
    m_star: np.ndarray
    status: str
    iters: int
    primal_residual: float
    dual_residual: float
    objective: float
    e_star: np.ndarray | None = None
    rho: float = 1.0
    # scaled duals for p = Bh and q = Cm (multiplier = rho * dual)
    dual_p: np.ndarray | None = field(default=None, repr=False)
    dual_q: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        out = {
            "h_star": self.h_star.tolist(),
            "m_star": self.m_star.tolist(),
            "status": self.status,
            "iters": self.iters,
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
            "objective": self.objective,
        }
        if self.e_star is not None:
            out["e_star"] = self.e_star.tolist()
        return out


def row_constraints(instance: ProblemInstance):
    """Per-row ``(c, sigma, tau)`` arrays for :func:`project_rows`."""
    y = instance.y
    return np.abs(y), instance.s.astype(float), np.sign(y)


def _equilibrated_rows(instance: ProblemInstance):
    """Rescale every row to unit ``||b_l||`` and ``||c_l||``.

    Dividing ``b_l`` by ``beta > 0``, ``c_l`` by ``gamma > 0`` and ``|y_l|`` by
    ``beta * gamma`` describes exactly the same set of ``(h, m)``, but keeps
    the splitting well conditioned when some rows are nearly zero.
    """
    B = np.array(instance.B)
    C = np.array(instance.C)
    nb = np.linalg.norm(B, axis=1)
    nc = np.linalg.norm(C, axis=1)
    nb[nb == 0] = 1.0
    nc[nc == 0] = 1.0
    c, sigma, tau = row_constraints(instance)
    return B / nb[:, None], C / nc[:, None], c / (nb * nc), sigma, tau


class _Factor:
    """Cholesky factor of ``2 I + rho A^T A``, refreshed when rho changes."""

    def __init__(self, A: np.ndarray, rho: float):
        self.A = A
        self.gram = A.T @ A
        self.update(rho)

    def update(self, rho: float):
        M = self.gram * rho
        M[np.diag_indices_from(M)] += 2.0
        self.cho = scipy.linalg.cho_factor(M)

    def solve(self, rhs):
        return scipy.linalg.cho_solve(self.cho, rhs)


class _MBlock:
    """``m``-update of the BranchHull splitting: ``argmin ||m||^2 + rho/2 ||Cm - v||^2``."""

    def __init__(self, C: np.ndarray, rho: float):
        self.C = C
        self.size = C.shape[1]
        self.factor = _Factor(C, rho)
        self.rho = rho

    def update(self, rho: float):
        self.rho = rho
        self.factor.update(rho)

    def step(self, v):
        m = self.factor.solve(self.rho * (self.C.T @ v))
        return m, None, self.C @ m

    def adjoint_norm(self, r) -> float:
        return float(np.linalg.norm(self.C.T @ r))


def _run_admm(instance, opts, B, c, sigma, tau, block, violation, dual0=None):
    """Two-block ADMM on ``p = Bh`` and ``q = A_q(m, e)``.

    ``block`` owns the second primal block (see :class:`_MBlock`);
    ``violation(h, m, e)`` returns per-row constraint violations in the
    original coordinates and gates the ``"converged"`` status.
    """
    L, K = instance.L, instance.K
    rho = opts.rho
    fb = _Factor(B, rho)
    block.update(rho)
    alpha = opts.over_relaxation

    p, q = project_rows(np.zeros(L), np.zeros(L), c, sigma, tau)
    if dual0 is None:
        up = np.zeros(L)
        uq = np.zeros(L)
    else:
        up = np.array(dual0[0], dtype=float)
        uq = np.array(dual0[1], dtype=float)
    h = np.zeros(K)
    m = np.zeros(instance.N)
    e = None

    sqrt_m = math.sqrt(2 * L)
    sqrt_n = math.sqrt(K + block.size)
    feas_tol = 10.0 * opts.tol_primal
    rho_updates = 0
    last_update = 0
    grow_count = 0
    prev_r = prev_s = math.inf
    status = "max-iters"
    r_norm = s_norm = math.inf
    it = 0

    for it in range(1, opts.max_iters + 1):
        h = fb.solve(rho * (B.T @ (p - up)))
        m, e, Aq = block.step(q - uq)
        Bh = B @ h
        ph = alpha * Bh + (1.0 - alpha) * p
        qh = alpha * Aq + (1.0 - alpha) * q

        p_old, q_old = p, q
        p, q = project_rows(ph + up, qh + uq, c, sigma, tau)
        up = up + ph - p
        uq = uq + qh - q

        r_norm = math.hypot(np.linalg.norm(Bh - p), np.linalg.norm(Aq - q))
        s_norm = rho * math.hypot(np.linalg.norm(B.T @ (p - p_old)), block.adjoint_norm(q - q_old))
        eps_pri = sqrt_m * opts.tol_primal + opts.tol_primal * max(
            math.hypot(np.linalg.norm(Bh), np.linalg.norm(Aq)),
            math.hypot(np.linalg.norm(p), np.linalg.norm(q)),
        )
        eps_dual = sqrt_n * opts.tol_dual + opts.tol_dual * rho * math.hypot(
            np.linalg.norm(B.T @ up), block.adjoint_norm(uq)
        )

        if r_norm <= eps_pri and s_norm <= eps_dual:
            if np.max(violation(h, m, e), initial=0.0) <= feas_tol:
                status = "converged"
                break

        # divergence diagnostic: residuals growing for a full window
        if r_norm > prev_r and s_norm > prev_s:
            grow_count += 1
            if grow_count >= _DIVERGENCE_WINDOW:
                status = "infeasible-detected"
                break
        else:
            grow_count = 0
        prev_r, prev_s = r_norm, s_norm

        if (
            opts.adaptive_rho
            and rho_updates < _MAX_RHO_UPDATES
            and it - last_update >= _RHO_CADENCE
            and r_norm > 0
            and s_norm > 0
        ):
            scale = None
            # only rebalance while the dominant residual is unconverged, and
            # never on an exactly zero residual (e.g. p parked at a vertex)
            if r_norm > 10.0 * s_norm and r_norm > eps_pri:
                scale = 2.0
            elif s_norm > 10.0 * r_norm and s_norm > eps_dual:
                scale = 0.5
            if scale is not None:
                rho *= scale
                up /= scale
                uq /= scale
                fb.update(rho)
                block.update(rho)
                rho_updates += 1
                last_update = it
                grow_count = 0

    return SolverResult(
        h_star=h,
        m_star=m,
        status=status,
        iters=it,
        primal_residual=float(r_norm),
        dual_residual=float(s_norm),
        objective=float(h @ h + m @ m),
        e_star=e,
        rho=rho,
        dual_p=up,
        dual_q=uq,
    )


def _sign_system_feasible(M, signs, strict) -> bool:
    """Is there ``x`` with ``signs * (M x) >= 1`` on ``strict`` rows and ``>= 0`` elsewhere?"""
    rows = signs != 0
    if not rows.any():
        return True
    A = -(signs[rows, None] * M[rows])
    b = -strict[rows].astype(float)
    res = scipy.optimize.linprog(
        np.zeros(M.shape[1]), A_ub=A, b_ub=b, bounds=(None, None), method="highs"
    )
    return res.status == 0


def bh_feasible(instance: ProblemInstance, robust: bool = False) -> bool:
    """Exact feasibility test for the BranchHull constraints.

    A feasible ``(h, m)`` has ``s_l b_l^T h > 0`` and
    ``s_l sign(y_l) c_l^T m > 0`` on every row with ``y_l != 0``; conversely
    any such strict pair, scaled up, is feasible.  Both conditions are
    linear programs.  With ``robust=True`` only the ``h`` side is required,
    since the slack can move ``c_l^T m + e_l`` anywhere.

    Raises
    ------
    ValueError
        If a row has ``y_l != 0`` but ``s_l = 0``; that set is not convex.
    """
    y, s = instance.y, instance.s
    active = y != 0
    if np.any(active & (s == 0)):
        raise ValueError("rows with y != 0 need a known sign s = +1 or -1")
    if not _sign_system_feasible(instance.B, s, active):
        return False
    if robust:
        return True
    return _sign_system_feasible(instance.C, s * np.sign(y), active)


def _infeasible_result(instance: ProblemInstance) -> SolverResult:
    return SolverResult(
        h_star=np.zeros(instance.K),
        m_star=np.zeros(instance.N),
        status="infeasible-detected",
        iters=0,
        primal_residual=math.inf,
        dual_residual=math.inf,
        objective=0.0,
    )


def solve_bh(
    instance: ProblemInstance,
    opts: SolverOptions | None = None,
    dual0: tuple[np.ndarray, np.ndarray] | None = None,
) -> SolverResult:
    """Solve the BranchHull program by ADMM.

    Parameters
    ----------
    instance : ProblemInstance
    opts : SolverOptions, optional
    dual0 : (ndarray, ndarray), optional
        Initial scaled duals for the ``p`` and ``q`` couplings (in the
        row-normalized coordinates); zero by default.

    Returns
    -------
    SolverResult
        ``status`` is ``"converged"``, ``"max-iters"`` or
        ``"infeasible-detected"``.  Infeasibility is decided exactly up
        front by :func:`bh_feasible`; the in-loop diagnostic (both residuals
        growing for 1000 consecutive iterations) is a second line of defence.
    """
    opts = opts or SolverOptions()
    if not bh_feasible(instance):
        return _infeasible_result(instance)
    B, C, c, sigma, tau = _equilibrated_rows(instance)
    block = _MBlock(C, opts.rho)
    return _run_admm(
        instance,
        opts,
        B,
        c,
        sigma,
        tau,
        block,
        lambda h, m, e: constraint_violation(instance, h, m),
        dual0,
    )


def kkt_residuals(instance: ProblemInstance, result: SolverResult) -> tuple[float, float]:
    """Feasibility and stationarity diagnostics for a solver result.

    Feasibility is the largest row violation at ``(h*, m*)``.  Stationarity
    is ``||2 h* + rho B^T u_p|| + ||2 m* + rho C^T u_q||`` combined in
    quadrature, i.e. the gradient of the Lagrangian in ``(h, m)`` with the
    splitting multipliers pulled back through the row-normalized ``B`` and
    ``C`` the solver works with.
    """
    h, m = result.h_star, result.m_star
    feas = float(np.max(constraint_violation(instance, h, m), initial=0.0))
    if result.dual_p is None:
        return feas, math.nan
    rho = result.rho
    B, C = _equilibrated_rows(instance)[:2]
    gh = 2.0 * h + rho * (B.T @ result.dual_p)
    gm = 2.0 * m + rho * (C.T @ result.dual_q)
    return feas, math.hypot(np.linalg.norm(gh), np.linalg.norm(gm))


def solve_bh_oracle(
    instance: ProblemInstance,
    grid: int = 25,
    radius: float | None = None,
    refinements: int = 2,
) -> SolverResult:
    """Brute-force reference solution for tiny instances (``K + N <= 4``).

    A full tensor grid of ``grid`` points per coordinate is laid over a box
    around the origin, infeasible points are discarded, and the best feasible
    point is refined by re-gridding a shrunken box around it.  The winner is
    then polished by SLSQP on the original product constraints, followed by
    a radial rescaling that removes any residual constraint violation.  The feasible
    set is convex and the objective strictly convex, so the KKT point SLSQP
    reaches from a feasible start near the optimum is the global minimizer.
    The polish is accepted only if it stays feasible and lowers the
    objective.  Nothing here shares code with :func:`solve_bh`.
    """
    K, N = instance.K, instance.N
    d = K + N
    if d > 4:
        raise ValueError(f"oracle is limited to K + N <= 4, got {d}")
    B, C = instance.B, instance.C
    y, s = instance.y, instance.s
    ty, ay = np.sign(y), np.abs(y)

    def feasible(X, slack=0.0):
        P = X[:, :K] @ B.T
        Q = X[:, K:] @ C.T
        ok = np.all(ty * P * Q >= ay - slack, axis=1)
        return ok & np.all(s * P >= -slack, axis=1)

    if radius is None:
        radius = 2.0 * math.sqrt(max(np.max(ay), 1e-12)) * (1.0 + 1.0 / max(
            1e-12, min(np.min(np.linalg.norm(B, axis=1)), np.min(np.linalg.norm(C, axis=1)))
        ))

    best = None
    best_val = math.inf
    center = np.zeros(d)
    half = radius
    for _ in range(refinements + 1):
        axes = [np.linspace(center[i] - half, center[i] + half, grid) for i in range(d)]
        X = np.array(list(itertools.product(*axes)))
        ok = feasible(X)
        if ok.any():
            vals = np.sum(X[ok] ** 2, axis=1)
            j = int(np.argmin(vals))
            if vals[j] < best_val:
                best_val = float(vals[j])
                best = X[ok][j]
        if best is None:
            half *= 2.0
            continue
        center = best
        half = 4.0 * half / (grid - 1)

    if best is None:
        raise RuntimeError("oracle found no feasible point; enlarge the radius")

    def cons(x):
        P = B @ x[:K]
        Q = C @ x[K:]
        return np.concatenate((ty * P * Q - ay, s * P))

    def cons_jac(x):
        P = B @ x[:K]
        Q = C @ x[K:]
        top = np.hstack(((ty * Q)[:, None] * B, (ty * P)[:, None] * C))
        bottom = np.hstack((s[:, None] * B, np.zeros((len(y), N))))
        return np.vstack((top, bottom))

    x, fx = best, best_val
    for _ in range(3):
        res = scipy.optimize.minimize(
            lambda z: z @ z,
            x,
            jac=lambda z: 2.0 * z,
            constraints=[{"type": "ineq", "fun": cons, "jac": cons_jac}],
            method="SLSQP",
            options={"ftol": 1e-16, "maxiter": 500},
        )
        z = res.x
        # SLSQP may end a hair outside the product constraints; scaling
        # (h, m) by t multiplies every product by t^2 and restores them
        prod = ty * (B @ z[:K]) * (C @ z[K:])
        rows = ay > 0
        if np.all(prod[rows] > 0):
            ratio = np.max(ay[rows] / prod[rows], initial=1.0)
            if ratio > 1.0:
                z = z * math.sqrt(ratio)
        scale = max(1.0, float(np.max(ay)))
        if feasible(z[None], slack=1e-12 * scale)[0] and z @ z < fx:
            x, fx = z, float(z @ z)
        else:
            break

    return SolverResult(
        h_star=x[:K].copy(),
        m_star=x[K:].copy(),
        status="converged",
        iters=0,
        primal_residual=0.0,
        dual_residual=0.0,
        objective=fx,
    )
