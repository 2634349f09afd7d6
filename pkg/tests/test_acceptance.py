"""The ten acceptance criteria, each at its stated tolerance and time budget.

Every test prints one ``criterion N: PASS/FAIL`` line and the terminal
summary lists them together.  Run alone with ``pytest tests/test_acceptance.py -s``.
"""
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from branchhull.core import ProblemInstance, generate_instance
from branchhull.experiments import ExperimentGrid, desk_phase_grid, noise_sweep, phase_diagram
from branchhull.projection import hull_objective, project_hull_array, quartic_residual
from branchhull.robust import RbhOptions, solve_rbh
from branchhull.solver import solve_bh, solve_bh_oracle
from branchhull.theory import (
    binomial_tail,
    hoeffding_tail_bound,
    mc_sphere_covering,
    shift_noise,
    theorem1_probability,
    wendel_probability,
)

from conftest import record
from test_projection import brute_force_projection, random_inputs

pytestmark = pytest.mark.acceptance


def test_01_scalar_optimum():
    start = time.perf_counter()
    worst = 0.0
    for y in (1.0, 2.0, 4.0):
        r = solve_bh(ProblemInstance([[1.0]], [[1.0]], [y], [1.0]))
        worst = max(worst, abs(r.h_star[0] - math.sqrt(y)), abs(r.m_star[0] - math.sqrt(y)))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-6 and elapsed < 1.0
    record(1, ok, f"max deviation {worst:.2e}, {elapsed:.2f}s")
    assert ok


SMALL_SHAPES = [(1, 1), (1, 2), (2, 1), (1, 3), (3, 1), (2, 2)]


def test_02_oracle_equivalence():
    start = time.perf_counter()
    worst = 0.0
    for seed in range(50):
        K, N = SMALL_SHAPES[seed % len(SMALL_SHAPES)]
        L = K + N + seed % 5
        inst, _ = generate_instance(K, N, L, target="gaussian", seed=seed)
        r, o = solve_bh(inst), solve_bh_oracle(inst)
        worst = max(worst, abs(r.objective - o.objective) / o.objective)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-4 and elapsed < 120
    record(2, ok, f"max relative objective gap {worst:.2e} over 50 instances, {elapsed:.1f}s")
    assert ok


def test_03_projection_properties():
    start = time.perf_counter()
    rng = np.random.default_rng(3)
    n = 10_000
    a, b, c = random_inputs(rng, n)
    u, v = project_hull_array(a, b, c)

    u2, v2 = project_hull_array(u, v, c)
    idem = np.max(np.hypot(u2 - u, v2 - v) / np.maximum(1.0, np.hypot(u, v)))

    # variational inequality against feasible points on and above the curve
    xu = 10 ** rng.uniform(-2, 2, n) * np.sqrt(c)
    xv = rng.uniform(1.0, 10.0, n) * c / xu
    inner = (a - u) * (xu - u) + (b - v) * (xv - v)
    scale = np.hypot(a - u, b - v) * np.hypot(xu - u, xv - v)
    vi = np.max(inner / np.maximum(1.0, scale))

    perm = rng.permutation(n)
    dist_in = np.hypot(a - a[perm], b - b[perm])
    same_c = np.full(n, 1.0)
    pu, pv = project_hull_array(a, b, same_c)
    expand = np.max(np.hypot(pu - pu[perm], pv - pv[perm]) - dist_in * (1 + 1e-9))

    outside = ~((a > 0) & (b > 0) & (a * b >= c))
    qscale = np.maximum.reduce([u**4, np.abs(a) * u**3, np.abs(b) * c * u, c * c])
    quartic = np.max(np.abs(quartic_residual(a, b, c, u))[outside] / qscale[outside])

    ur, vr = brute_force_projection(a, b, c)
    obj, ref = hull_objective(a, b, u, v), hull_objective(a, b, ur, vr)
    oracle = np.max(np.abs(obj - ref) / np.maximum(1.0, ref))
    elapsed = time.perf_counter() - start

    ok = idem <= 1e-10 and vi <= 1e-8 and expand <= 1e-12 and quartic <= 1e-8 and oracle <= 1e-6
    ok = ok and elapsed < 30
    record(3, ok, f"idempotence {idem:.1e}, VI {vi:.1e}, expansion {expand:.1e}, "
                  f"quartic {quartic:.1e}, oracle {oracle:.1e}, {elapsed:.1f}s")
    assert ok


def test_04_phase_transition():
    start = time.perf_counter()
    table = phase_diagram(desk_phase_grid(trials=10, base_seed=0))
    elapsed = time.perf_counter() - start
    above, below = [], []
    for cell in table.aggregate():
        d = cell.K + cell.N
        if cell.L >= 2.5 * d:
            above.append(cell.success_rate)
        if cell.L <= 1.2 * d:
            below.append(cell.success_rate)
    ok = min(above) >= 0.9 and max(below) <= 0.1 and elapsed < 900
    record(4, ok, f"min rate above 2.5(K+N) {min(above):.2f}, max rate below 1.2(K+N) "
                  f"{max(below):.2f}, {elapsed:.0f}s")
    assert ok


def test_05_theorem1_statistics():
    start = time.perf_counter()
    grid = ExperimentGrid(dims=[(5, 5)], Ls=[60], trials=50, base_seed=5)
    table = phase_diagram(grid)
    wins = sum(r.success for r in table.rows)
    bound = theorem1_probability(5, 5, 60)
    elapsed = time.perf_counter() - start
    ok = wins >= 49 and elapsed < 120
    record(5, ok, f"{wins}/50 recovered, guaranteed probability {bound:.10f}, {elapsed:.1f}s")
    assert ok


def test_06_noise_bound():
    start = time.perf_counter()
    grid = ExperimentGrid(dims=[(20, 20)], Ls=[100], alphas=[0.0, 0.1, 0.25, 0.5, 1.0], trials=10)
    table = noise_sweep(grid)
    elapsed = time.perf_counter() - start
    noisy = [r for r in table.rows if r.alpha > 0]
    slack = max(r.abs_error - r.theorem2_bound for r in noisy)
    clean = max(r.rel_error for r in table.rows if r.alpha == 0)
    ok = slack <= 1e-4 and clean < 1e-5 and elapsed < 600
    record(6, ok, f"max(error - bound) {slack:.2e} over {len(noisy)} noisy trials, "
                  f"noiseless max relative error {clean:.1e}, {elapsed:.0f}s")
    assert ok


def test_07_wendel_monte_carlo():
    start = time.perf_counter()
    closed = {(2, 3): 0.25, (3, 8): 99 / 128}
    gaps = []
    for (n, m), value in closed.items():
        assert wendel_probability(n, m) == pytest.approx(value, abs=1e-15)
        rate, _ = mc_sphere_covering(n, m, 10_000, seed=7)
        gaps.append(abs(rate - value))
    elapsed = time.perf_counter() - start
    ok = max(gaps) <= 0.02 and elapsed < 120
    record(7, ok, f"|empirical - closed form| = {gaps[0]:.4f}, {gaps[1]:.4f}, {elapsed:.0f}s")
    assert ok


def test_08_hoeffding_dominance():
    start = time.perf_counter()
    violations, worst_ratio = [], 0.0
    for m in range(2, 101):
        for n in range(1, m // 2 + 1):
            exact = binomial_tail(n, m)
            # the bound is a double, so it is compared with the correctly
            # rounded tail; near 1 both round to 1.0
            if hoeffding_tail_bound(n, m) > float(exact):
                violations.append((n, m))
            # the complements have no cancellation and are compared exactly
            below = 1 - exact
            gap = Fraction(math.exp(-((m - 2 * n) ** 2) / (2 * m)))
            if below > gap:
                violations.append((n, m))
            if below:
                worst_ratio = max(worst_ratio, float(below / gap))
    elapsed = time.perf_counter() - start
    ok = not violations and elapsed < 5
    record(8, ok, f"{len(violations)} violations for m <= 100, "
                  f"largest P(Bin < n) / exp(...) {worst_ratio:.2f}, {elapsed:.2f}s")
    assert ok


def test_09_noise_shift_identity():
    start = time.perf_counter()
    rng = np.random.default_rng(9)
    worst, inside = 0.0, True
    for _ in range(10_000):
        L = int(rng.integers(1, 40))
        xi = rng.uniform(-1.0, rng.uniform(0.0, 3.0), L)
        y = rng.normal(size=L)
        sh = shift_noise(xi)
        inside &= bool(np.all((sh.eta >= -1) & (sh.eta <= 0)))
        lhs, rhs = sh.s_shift * y * (1 + sh.eta), y * (1 + xi)
        worst = max(worst, np.linalg.norm(lhs - rhs) / max(np.linalg.norm(rhs), np.finfo(float).tiny))
    elapsed = time.perf_counter() - start
    ok = inside and worst <= 1e-14 and elapsed < 5
    record(9, ok, f"max normwise relative error {worst:.1e}, eta in [-1, 0]: {inside}, {elapsed:.2f}s")
    assert ok


def test_10_rbh_collapse():
    start = time.perf_counter()
    worst_e, worst_gap = 0.0, 0.0
    opts = RbhOptions(lambda_=1e8)
    for seed in range(20):
        inst, _ = generate_instance(3, 3, 30, target="gaussian", seed=seed)
        bh, rbh = solve_bh(inst), solve_rbh(inst, opts)
        worst_e = max(worst_e, float(np.max(np.abs(rbh.e_star))))
        gap = math.hypot(np.linalg.norm(rbh.h_star - bh.h_star), np.linalg.norm(rbh.m_star - bh.m_star))
        worst_gap = max(worst_gap, gap)
    elapsed = time.perf_counter() - start
    ok = worst_e < 1e-6 and worst_gap <= 1e-4 and elapsed < 120
    record(10, ok, f"max |e| {worst_e:.1e}, max distance to BranchHull {worst_gap:.1e}, {elapsed:.1f}s")
    assert ok
