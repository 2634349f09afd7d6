"""Closed-form recovery bounds and Monte-Carlo checks of the covering lemmas.

Hemisphere covering is decided through Gordan's alternative: the closed
hemispheres ``{d : <a_i, d> >= 0}`` cover the sphere iff no ``d`` has
``<a_i, d> < 0`` for all ``i``, iff the origin lies in ``conv{a_i}``.  The
distance from the origin to the hull is computed with away-step
Frank-Wolfe on the simplex, batched over many independent point sets.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "TheoryBound",
    "ShiftedNoise",
    "IndeterminateCoverage",
    "binomial_tail",
    "wendel_probability",
    "hoeffding_tail_bound",
    "theorem1_probability",
    "theory_bound",
    "min_norm_point",
    "hemisphere_coverage",
    "mc_sphere_covering",
    "shift_noise",
    "ramp",
    "indicator_count",
    "ramp_count",
    "lemma6_count",
    "lemma5_directions",
    "lemma5_conditions",
]

COVER_TOL = 1e-7
GAP_TOL = 1e-10
MAX_FW_ITERS = 100_000
_CHUNK = 2000


class IndeterminateCoverage(RuntimeError):
    """The min-norm-point iteration hit its cap without a certificate."""


# -- closed forms ----------------------------------------------------------

def binomial_tail(n: int, m: int) -> Fraction:
    """Exact ``P(Bin(m, 1/2) >= n)``."""
    if n <= 0:
        return Fraction(1)
    if n > m:
        return Fraction(0)
    below = sum(math.comb(m, k) for k in range(n))
    return 1 - Fraction(below, 2 ** m)


def wendel_probability(n: int, m: int) -> float:
    """Probability that ``m`` random hemispheres cover the sphere in ``R^n``.

    ``1 - 2^-(m-1) sum_{k<n} C(m-1, k)``: at least ``n`` heads among
    ``m - 1`` fair tosses.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    return float(binomial_tail(n, m - 1))


def hoeffding_tail_bound(n: int, m: int) -> float:
    """Lower bound ``1 - exp(-(m - 2n)^2 / (2m))`` on ``P(Bin(m, 1/2) >= n)``.

    Valid for ``n <= m/2``; compare with ``wendel_probability(n, m + 1)``.
    """
    if m < 1 or 2 * n > m:
        raise ValueError(f"need n <= m/2, got n={n}, m={m}")
    return -math.expm1(-((m - 2 * n) ** 2) / (2.0 * m))


def theorem1_probability(K: int, N: int, L: int) -> float:
    """Noiseless exact-recovery probability bound; 0 unless ``L > 2N + 2K - 3``."""
    gap = L - (2 * N + 2 * K - 3)
    if gap <= 0:
        return 0.0
    return -math.expm1(-(gap ** 2) / (2.0 * (L - 1)))


@dataclass(frozen=True)
class TheoryBound:
    """The noiseless bound for one ``(L, K, N)`` in its two normalizations.

    ``wendel_exact`` is the covering probability of ``L`` hemispheres in
    dimension ``N + K - 2`` (at least ``N + K - 2`` heads in ``L - 1``
    tosses); ``hoeffding_bound`` is its Hoeffding estimate, which equals
    ``theorem1_bound`` whenever both are nonzero.
    """

    L: int
    K: int
    N: int
    theorem1_bound: float
    wendel_exact: float
    hoeffding_bound: float


def theory_bound(K: int, N: int, L: int) -> TheoryBound:
    n = N + K - 2
    tosses = L - 1
    wendel = float(binomial_tail(n, tosses))
    hoeff = hoeffding_tail_bound(n, tosses) if tosses >= 1 and 2 * n <= tosses else 0.0
    return TheoryBound(L, K, N, theorem1_probability(K, N, L), wendel, hoeff)


# -- minimum-norm point and hemisphere coverage -----------------------------

def min_norm_point(points, max_iters: int = MAX_FW_ITERS, tol: float = COVER_TOL):
    """Minimum-norm points of ``conv(points[t])`` for a batch of point sets.

    Parameters
    ----------
    points : ndarray, shape (T, m, n) or (m, n)
    max_iters : int
    tol : float
        Norm threshold separating "origin in hull" from "origin outside".

    Returns
    -------
    x : ndarray, shape (T, n)
        Final iterates.
    covered : ndarray of bool, shape (T,)
    certified : ndarray of bool, shape (T,)
        False where the cap was reached without a certificate.

    Notes
    -----
    An item stops as soon as one of these holds:

    * ``||x|| <= tol``; the min-norm point is no longer than any hull point,
      so the origin is within ``tol`` of the hull;
    * ``min_i <a_i, x> > tol ||x||``; every hull point then has norm above
      ``tol``;
    * the Wolfe gap ``||x||^2 - min_i <a_i, x>`` drops below ``1e-10``.
    """
    A = np.asarray(points, dtype=float)
    single = A.ndim == 2
    if single:
        A = A[None]
    T, m, n = A.shape
    lam = np.full((T, m), 1.0 / m)
    x = np.einsum("tm,tmn->tn", lam, A)
    covered = np.zeros(T, dtype=bool)
    certified = np.zeros(T, dtype=bool)
    active = np.arange(T)
    Aa, lama, xa = A, lam, x

    for it in range(max_iters + 1):
        g = np.einsum("tmn,tn->tm", Aa, xa)
        xx = np.einsum("tn,tn->t", xa, xa)
        xn = np.sqrt(xx)
        gmin = g.min(axis=1)
        gap = xx - gmin
        is_cov = xn <= tol
        is_out = (gmin > tol * xn) | (gap <= GAP_TOL)
        stop = is_cov | is_out
        if stop.any():
            idx = active[stop]
            covered[idx] = is_cov[stop]
            certified[idx] = True
            x[idx] = xa[stop]
            keep = ~stop
            active, Aa, lama, xa = active[keep], Aa[keep], lama[keep], xa[keep]
            g, xx, gap = g[keep], xx[keep], gap[keep]
        if active.size == 0 or it == max_iters:
            break

        rows = np.arange(active.size)
        s = np.argmin(g, axis=1)
        g_away = np.where(lama > 0, g, -np.inf)
        v = np.argmax(g_away, axis=1)
        gap_fw = gap
        gap_aw = g_away[rows, v] - xx
        fw = gap_fw >= gap_aw

        a_s = Aa[rows, s]
        a_v = Aa[rows, v]
        d = np.where(fw[:, None], a_s - xa, xa - a_v)
        lv = lama[rows, v]
        with np.errstate(divide="ignore"):
            gmax = np.where(fw, 1.0, np.where(lv < 1.0, lv / (1.0 - lv), np.inf))
        dd = np.einsum("tn,tn->t", d, d)
        with np.errstate(divide="ignore", invalid="ignore"):
            gamma = np.where(dd > 0, -np.einsum("tn,tn->t", xa, d) / dd, 0.0)
        gamma = np.clip(gamma, 0.0, gmax)

        fw_rows = rows[fw]
        lama[fw_rows] *= (1.0 - gamma[fw])[:, None]
        lama[fw_rows, s[fw]] += gamma[fw]
        aw = ~fw
        aw_rows = rows[aw]
        lama[aw_rows] *= (1.0 + gamma[aw])[:, None]
        lama[aw_rows, v[aw]] -= gamma[aw]
        drop = aw & (gamma >= gmax)
        lama[rows[drop], v[drop]] = 0.0
        np.maximum(lama, 0.0, out=lama)
        lama /= lama.sum(axis=1, keepdims=True)
        xa = np.einsum("tm,tmn->tn", lama, Aa)

    if active.size:
        x[active] = xa
    if single:
        return x[0], bool(covered[0]), bool(certified[0])
    return x, covered, certified


def hemisphere_coverage(vectors) -> bool:
    """Do the closed hemispheres centered at ``vectors`` cover the sphere?

    Raises
    ------
    IndeterminateCoverage
        If the min-norm-point iteration cannot certify either answer.
    """
    A = np.atleast_2d(np.asarray(vectors, dtype=float))
    if A.shape[0] < 1:
        raise ValueError("need at least one vector")
    if np.any(np.abs(np.linalg.norm(A, axis=1) - 1.0) > 1e-9):
        raise ValueError("vectors must be unit norm")
    _, covered, certified = min_norm_point(A)
    if not certified:
        raise IndeterminateCoverage("min-norm point iteration did not certify")
    return covered


def _draw_directions(rng, trials, n, m, distribution):
    if distribution == "uniform":
        V = rng.standard_normal((trials, m, n))
    elif distribution == "normalized-ratio":
        # (c~/c_1, b~/b_1) with N - 1 = ceil(n/2) and K - 1 = floor(n/2)
        nc = (n + 1) // 2
        nb = n - nc
        c = rng.standard_normal((trials, m, nc + 1))
        b = rng.standard_normal((trials, m, nb + 1))
        V = np.concatenate((c[..., 1:] / c[..., :1], b[..., 1:] / b[..., :1]), axis=2)
    else:
        raise ValueError(f"unknown distribution {distribution!r}")
    return V / np.linalg.norm(V, axis=2, keepdims=True)


def _coverage_chunk(args):
    n, m, trials, seed, chunk, distribution = args
    rng = np.random.default_rng([seed, chunk])
    V = _draw_directions(rng, trials, n, m, distribution)
    _, covered, certified = min_norm_point(V)
    return int(np.sum(covered & certified)), int(np.sum(certified))


def mc_sphere_covering(
    n: int,
    m: int,
    trials: int,
    seed: int = 0,
    distribution: str = "uniform",
    workers: int | None = None,
) -> tuple[float, float]:
    """Monte-Carlo estimate of the hemisphere covering probability.

    Trials are split into fixed chunks of 2000, chunk ``j`` drawing from
    ``default_rng([seed, j])``, so the estimate does not depend on
    ``workers``.

    Returns
    -------
    rate, ci_halfwidth : float
        Empirical coverage rate over certified samples and the half-width of
        a normal-approximation 95% interval.
    """
    from .parallel import parallel_map

    if trials < 100:
        raise ValueError("need at least 100 trials")
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    jobs = []
    done = 0
    j = 0
    while done < trials:
        size = min(_CHUNK, trials - done)
        jobs.append((n, m, size, seed, j, distribution))
        done += size
        j += 1
    results = parallel_map(_coverage_chunk, jobs, workers)
    hits = sum(r[0] for r in results)
    valid = sum(r[1] for r in results)
    if trials - valid > 0.01 * trials:
        raise IndeterminateCoverage(f"{trials - valid} of {trials} samples were indeterminate")
    rate = hits / valid
    return rate, 1.96 * math.sqrt(rate * (1.0 - rate) / valid)


# -- noise shift ------------------------------------------------------------

@dataclass(frozen=True)
class ShiftedNoise:
    """Equivalent one-sided noise: ``s_shift * (1 + eta) == 1 + xi``."""

    s_shift: float
    eta: np.ndarray


def shift_noise(xi) -> ShiftedNoise:
    """Convert sign-preserving noise into one-sided noise on rescaled data."""
    xi = np.asarray(xi, dtype=float)
    if np.any(xi < -1):
        raise ValueError("noise below -1 flips measurement signs")
    excess = max(float(np.max(xi, initial=0.0)), 0.0)
    s = 1.0 + excess
    eta = (xi - excess) / s
    eta = np.clip(eta, -1.0, 0.0)
    eta.setflags(write=False)
    return ShiftedNoise(s, eta)


# -- indicator counts --------------------------------------------------------

def ramp(z):
    """10-Lipschitz lower bound of ``1{z <= 0}``: 1 below -0.1, 0 above 0."""
    z = np.asarray(z, dtype=float)
    return np.clip(-z / 0.1, 0.0, 1.0)


def indicator_count(B, C, X, Y):
    """``f(x, y) = sum_l 1{b_l^T x <= 0} 1{c_l^T y <= 0}`` for rows of X, Y."""
    P = np.atleast_2d(X) @ np.asarray(B).T
    Q = np.atleast_2d(Y) @ np.asarray(C).T
    return np.sum((P <= 0) & (Q <= 0), axis=1).astype(float)


def ramp_count(B, C, X, Y):
    """Continuous relaxation ``g(x, y) = sum_l w(b_l^T x) w(c_l^T y)``."""
    P = np.atleast_2d(X) @ np.asarray(B).T
    Q = np.atleast_2d(Y) @ np.asarray(C).T
    return np.sum(ramp(P) * ramp(Q), axis=1)


def _unit_rows(rng, count, dim):
    V = rng.standard_normal((count, dim))
    return V / np.linalg.norm(V, axis=1, keepdims=True)


def _local_descent(func, x, y, rng, steps=300, batch=32):
    """Random-perturbation descent on the product of spheres."""
    best = float(func(x[None], y[None])[0])
    delta = 0.3
    for _ in range(steps):
        X = x + delta * rng.standard_normal((batch, x.size))
        Y = y + delta * rng.standard_normal((batch, y.size))
        X /= np.linalg.norm(X, axis=1, keepdims=True)
        Y /= np.linalg.norm(Y, axis=1, keepdims=True)
        vals = func(X, Y)
        j = int(np.argmin(vals))
        if vals[j] < best:
            best, x, y = float(vals[j]), X[j], Y[j]
        else:
            delta *= 0.8
            if delta < 1e-6:
                break
    return best, x, y


def lemma6_count(B, C, samples: int, seed: int = 0) -> tuple[float, float]:
    """Sampled upper estimates of ``min f`` and ``min g`` over the spheres.

    ``f`` counts rows with both ``b_l^T x <= 0`` and ``c_l^T y <= 0``; ``g``
    replaces each indicator by :func:`ramp`.  The minimum over ``samples``
    random pairs is refined by local random search.  Since ``f >= g``
    pointwise, ``g`` is also evaluated at the minimizer of ``f`` so that the
    reported ``relaxed_min <= min_sampled_count``.
    """
    if samples < 1000:
        raise ValueError("need at least 1000 samples")
    B = np.atleast_2d(np.asarray(B, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    rng = np.random.default_rng(seed)
    X = _unit_rows(rng, samples, B.shape[1])
    Y = _unit_rows(rng, samples, C.shape[1])
    f = indicator_count(B, C, X, Y)
    g = ramp_count(B, C, X, Y)
    i, j = int(np.argmin(f)), int(np.argmin(g))
    f_min, xf, yf = _local_descent(lambda P, Q: indicator_count(B, C, P, Q), X[i], Y[i], rng)
    g_min, _, _ = _local_descent(lambda P, Q: ramp_count(B, C, P, Q), X[j], Y[j], rng)
    f_min = min(f_min, float(f[i]))
    g_min = min(g_min, float(g[j]), float(ramp_count(B, C, xf, yf)[0]))
    return f_min, g_min


# -- one-sided-noise covering conditions ------------------------------------

def lemma5_directions(B, C, dh, dm):
    """Evaluate the two index conditions for each direction pair.

    For ``(dh, dm)`` (rows of ``dh`` in ``R^{K-1}``, of ``dm`` in ``R^{N-1}``)
    returns boolean arrays ``(cond_a, cond_b)``:

    * ``cond_a``: some row has ``sign(b_l1) b~_l.dh <= 0`` and ``sign(c_l1) c~_l.dm <= 0``;
    * ``cond_b``: some row has ``sign(b_k1) b~_k.dh >= 0`` and ``sign(c_k1) c~_k.dm <= 0``.
    """
    B = np.asarray(B, dtype=float)
    C = np.asarray(C, dtype=float)
    P = np.atleast_2d(dh) @ (np.sign(B[:, :1]) * B[:, 1:]).T
    Q = np.atleast_2d(dm) @ (np.sign(C[:, :1]) * C[:, 1:]).T
    cond_a = np.any((P <= 0) & (Q <= 0), axis=1)
    cond_b = np.any((P >= 0) & (Q <= 0), axis=1)
    return cond_a, cond_b


def lemma5_conditions(B, C, directions: int, seed: int = 0) -> bool:
    """Sampled check that both index conditions hold for every direction.

    Besides ``directions`` random direction pairs, three necessary
    conditions for the "for every direction" statement are certified
    exactly with :func:`hemisphere_coverage`:

    * joint: the hemispheres centered at
      ``(-sign(b_l1) b~_l, -sign(c_l1) c~_l)`` cover ``S^{K+N-3}``; if some
      direction escaped them, every row would have
      ``sign(b_l1) b~_l.dh + sign(c_l1) c~_l.dm > 0`` and the first condition
      would fail there;
    * marginals: with ``dm = 0`` (resp. ``dh = 0``) the conditions need the
      hemispheres centered at ``sign(b_l1) b~_l`` (resp. ``sign(c_l1) c~_l``)
      to cover the lower-dimensional sphere.

    The full statement over the product of spheres remains a sampled check.
    """
    B = np.atleast_2d(np.asarray(B, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if B.shape[1] < 2 or C.shape[1] < 2:
        raise ValueError("need K, N >= 2")
    rng = np.random.default_rng(seed)
    dh = rng.standard_normal((directions, B.shape[1] - 1))
    dm = rng.standard_normal((directions, C.shape[1] - 1))
    a, b = lemma5_directions(B, C, dh, dm)
    if not (a.all() and b.all()):
        return False
    Vb = np.sign(B[:, :1]) * B[:, 1:]
    Vc = np.sign(C[:, :1]) * C[:, 1:]
    for V in (-np.hstack((Vb, Vc)), Vb, Vc):
        norms = np.linalg.norm(V, axis=1)
        keep = norms > 0
        if not keep.any() or not hemisphere_coverage(V[keep] / norms[keep, None]):
            return False
    return True
