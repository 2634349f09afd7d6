"""Euclidean projection onto the per-measurement feasible sets.

Each measurement contributes the planar set

    {(p, q) : sign(y) * p * q >= |y|,  s * p >= 0}

which, after the change of variables ``u = s * p``, ``v = s * sign(y) * q``,
becomes the convex hull of one hyperbola branch ``{(u, v) : u v >= c, u >= 0}``
with ``c = |y|``.  Projecting onto it reduces to a one-dimensional problem in
``u`` whose critical points are the positive roots of

    u**4 - a u**3 + b c u - c**2 = 0.

Everything below works on numpy arrays so the solver can project all rows in
one call; the scalar helpers are thin wrappers.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "HullConstraint",
    "project_hull",
    "project_hull_array",
    "project_halfplane",
    "project_constraint",
    "project_rows",
    "hull_objective",
    "quartic_residual",
]

GRID_POINTS = 64
_MAX_NEWTON = 200
_LO_START = 1e-3
_TINY = 1e-300


@dataclass(frozen=True)
class HullConstraint:
    """Normalized description of one row of the feasible set.

    Attributes
    ----------
    c : float
        Level ``|y_l|`` (0 for a degenerate row).
    sigma : int
        Known sign ``s_l`` of ``b_l^T h``; 0 means the halfplane is vacuous.
    tau : int
        Sign of ``y_l``.
    degenerate : bool
        True when ``y_l == 0``; only the sign halfplane remains.
    """

    c: float
    sigma: int
    tau: int
    degenerate: bool

    def __post_init__(self):
        if self.c < 0:
            raise ValueError("level c must be nonnegative")
        if self.sigma not in (-1, 0, 1) or self.tau not in (-1, 0, 1):
            raise ValueError("sigma and tau must be in {-1, 0, 1}")
        if not self.degenerate and (self.c == 0 or self.sigma == 0 or self.tau == 0):
            raise ValueError(
                "a non-degenerate row needs c > 0 and nonzero signs; "
                "with sigma = 0 the hyperbola set is not convex"
            )

    @classmethod
    def from_measurement(cls, y: float, s: int) -> "HullConstraint":
        y = float(y)
        tau = int(np.sign(y))
        return cls(c=abs(y), sigma=int(s), tau=tau, degenerate=(y == 0.0))


def _quartic(t, alpha, beta):
    # t^4 - alpha t^3 + beta t - 1, Horner form
    return t * (t * t * (t - alpha) + beta) - 1.0


def _quartic_prime(t, alpha, beta):
    return t * t * (4.0 * t - 3.0 * alpha) + beta


def _safeguarded_newton(lo, hi, alpha, beta):
    """Refine brackets ``q(lo) < 0 < q(hi)`` of the normalized quartic.

    Classic safeguarded Newton: the Newton step is taken when it stays inside
    the bracket and shrinks at least half as fast as the step before last,
    otherwise the bracket is bisected.  Works elementwise on arrays.
    """
    lo = lo.copy()
    hi = hi.copy()
    t = 0.5 * (lo + hi)
    dx_old = hi - lo
    dx = dx_old.copy()
    g = _quartic(t, alpha, beta)
    dg = _quartic_prime(t, alpha, beta)
    done = np.zeros(t.shape, dtype=bool)
    for _ in range(_MAX_NEWTON):
        done |= g == 0
        bisect = (((t - hi) * dg - g) * ((t - lo) * dg - g) >= 0) | (
            np.abs(2.0 * g) > np.abs(dx_old * dg)
        )
        dx_old = dx
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = g / dg
        dx = np.where(bisect, 0.5 * (hi - lo), newton)
        dx = np.where(done, 0.0, dx)
        t = np.where(bisect & ~done, lo + dx, t - dx)
        done |= np.abs(dx) <= 1e-15 * t
        if done.all():
            break
        g = _quartic(t, alpha, beta)
        dg = _quartic_prime(t, alpha, beta)
        neg = g < 0
        lo = np.where(neg, t, lo)
        hi = np.where(neg, hi, t)
    return t


def _normalized_projection(alpha, beta):
    """Project points known to lie outside ``{t s >= 1, t >= 0}``.

    Returns the foot ``t`` of the projection onto the curve ``s = 1/t``.
    """
    n = alpha.shape[0]
    lo = np.full(n, _LO_START)
    # the root sits near alpha for large alpha and near 1/beta for large beta
    hi = np.maximum(alpha, 1.0)

    # q(0+) = -1 and q(+inf) = +inf, so geometric expansion terminates
    bad = _quartic(lo, alpha, beta) >= 0
    while bad.any():
        lo[bad] *= 0.25
        lo = np.maximum(lo, _TINY)
        bad = (_quartic(lo, alpha, beta) >= 0) & (lo > _TINY)
    bad = _quartic(hi, alpha, beta) <= 0
    while bad.any():
        hi[bad] *= 4.0
        bad = _quartic(hi, alpha, beta) <= 0

    frac = np.linspace(0.0, 1.0, GRID_POINTS)
    grid = np.exp(np.log(lo)[:, None] * (1.0 - frac) + np.log(hi)[:, None] * frac)
    grid[:, 0] = lo
    grid[:, -1] = hi
    qg = _quartic(grid, alpha[:, None], beta[:, None])

    # upward crossings of q are the local minima of the objective
    up = (qg[:, :-1] < 0) & (qg[:, 1:] >= 0)
    rows, cols = np.nonzero(up)
    b_lo = grid[rows, cols]
    b_hi = grid[rows, cols + 1]
    exact = qg[rows, cols + 1] == 0
    roots = _safeguarded_newton(b_lo, b_hi, alpha[rows], beta[rows])
    roots = np.where(exact, b_hi, roots)

    obj = (roots - alpha[rows]) ** 2 + (1.0 / roots - beta[rows]) ** 2
    order = np.lexsort((obj, rows))
    rows_sorted = rows[order]
    first = np.ones(rows_sorted.shape, dtype=bool)
    first[1:] = rows_sorted[1:] != rows_sorted[:-1]
    t = np.empty(n)
    t[rows_sorted[first]] = roots[order][first]
    return t


def project_hull_array(a, b, c):
    """Vectorized projection of ``(a, b)`` onto ``{(u, v): u v >= c, u >= 0}``.

    Parameters
    ----------
    a, b, c : array_like
        Broadcastable arrays; every ``c`` must be strictly positive.

    Returns
    -------
    u, v : ndarray
        The projected coordinates.  For points outside the set the result
        lies on the curve, ``v = c / u``.
    """
    a, b, c = np.broadcast_arrays(
        np.asarray(a, dtype=float), np.asarray(b, dtype=float), np.asarray(c, dtype=float)
    )
    if np.any(~(c > 0)):
        raise ValueError("project_hull requires c > 0; use project_halfplane for c = 0")
    shape = a.shape
    a, b, c = a.ravel(), b.ravel(), c.ravel()
    u = a.copy()
    v = b.copy()
    outside = ~((a > 0) & (b > 0) & (a * b >= c))
    if outside.any():
        sc = np.sqrt(c[outside])
        t = _normalized_projection(a[outside] / sc, b[outside] / sc)
        u[outside] = sc * t
        v[outside] = c[outside] / u[outside]
    return u.reshape(shape), v.reshape(shape)


def project_hull(a: float, b: float, c: float) -> tuple[float, float]:
    """Project the point ``(a, b)`` onto ``{(u, v): u v >= c, u >= 0}``, ``c > 0``."""
    u, v = project_hull_array(a, b, c)
    return float(u), float(v)


def project_halfplane(a: float, b: float, sigma: int) -> tuple[float, float]:
    """Project onto ``{(p, q): sigma * p >= 0}``."""
    if sigma not in (-1, 1):
        raise ValueError("sigma must be +1 or -1")
    if sigma * a >= 0:
        return float(a), float(b)
    return 0.0, float(b)


def project_constraint(p: float, q: float, k: HullConstraint) -> tuple[float, float]:
    """Project ``(p, q)`` onto the row set described by ``k``."""
    if k.degenerate:
        if k.sigma == 0:
            return float(p), float(q)
        return project_halfplane(p, q, k.sigma)
    u, v = project_hull(k.sigma * p, k.sigma * k.tau * q, k.c)
    return k.sigma * u, k.sigma * k.tau * v


def project_rows(p, q, c, sigma, tau):
    """Row-wise :func:`project_constraint` for whole measurement vectors.

    Rows with ``c == 0`` only get the sign halfplane (vacuous when
    ``sigma == 0``).  Each row is handled independently, so the output does
    not depend on evaluation order.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    pp = p.copy()
    qq = q.copy()
    hull = c > 0
    if hull.any():
        s, st = sigma[hull], sigma[hull] * tau[hull]
        u, v = project_hull_array(s * p[hull], st * q[hull], c[hull])
        pp[hull] = s * u
        qq[hull] = st * v
    flat = ~hull
    if flat.any():
        clamp = flat & (sigma * p < 0)
        pp[clamp] = 0.0
    return pp, qq


def hull_objective(a, b, u, v):
    """Squared distance ``(u - a)^2 + (v - b)^2``."""
    return (np.asarray(u) - a) ** 2 + (np.asarray(v) - b) ** 2


def quartic_residual(a, b, c, u):
    """Residual of the stationarity quartic at ``u``."""
    return u ** 4 - a * u ** 3 + b * c * u - c ** 2
