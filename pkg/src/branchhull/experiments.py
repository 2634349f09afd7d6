"""Phase-transition and noise-sweep studies, CSV output and gnuplot scripts.

Every trial is a pure function of ``(base_seed, K, N, L, alpha, trial)``:
its instance seed is the first 8 bytes (little endian) of the BLAKE2b
digest of ``"{base_seed}|{K}|{N}|{L}|{alpha!r}|{trial}"``, so any single
trial can be re-run in isolation with :func:`trial_seed`.
"""
from __future__ import annotations

import csv
import hashlib
import math
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .core import NoiseModel, generate_instance, recovery_error
from .parallel import parallel_map
from .solver import SolverOptions, solve_bh

__all__ = [
    "ExperimentGrid",
    "ResultRow",
    "ResultTable",
    "CellSummary",
    "trial_seed",
    "run_trial",
    "phase_diagram",
    "noise_sweep",
    "emit_csv",
    "emit_plot_script",
    "desk_phase_grid",
    "paper_phase_grid",
    "desk_noise_grid",
]


def trial_seed(base_seed: int, K: int, N: int, L: int, alpha: float, trial: int) -> int:
    """Stable 64-bit seed for one trial of one cell."""
    key = f"{int(base_seed)}|{int(K)}|{int(N)}|{int(L)}|{float(alpha)!r}|{int(trial)}"
    digest = hashlib.blake2b(key.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class ExperimentGrid:
    """A sweep over dimensions, measurement counts and noise levels."""

    dims: tuple = ()
    Ls: tuple = ()
    alphas: tuple = (0.0,)
    trials: int = 10
    base_seed: int = 0
    success_threshold: float = 1e-5
    solver: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple((int(k), int(n)) for k, n in self.dims))
        object.__setattr__(self, "Ls", tuple(int(L) for L in self.Ls))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if any(min(k, n) < 1 for k, n in self.dims) or any(L < 1 for L in self.Ls):
            raise ValueError("dimensions must be >= 1")
        if any(a < 0 for a in self.alphas):
            raise ValueError("noise levels must be >= 0")
        if not self.success_threshold > 0:
            raise ValueError("success_threshold must be positive")

    def cells(self):
        for K, N in self.dims:
            for L in self.Ls:
                for alpha in self.alphas:
                    yield K, N, L, alpha


def desk_phase_grid(trials: int = 10, base_seed: int = 0) -> ExperimentGrid:
    return ExperimentGrid(
        dims=[(k, k) for k in (5, 10, 15, 20)],
        Ls=range(10, 121, 10),
        trials=trials,
        base_seed=base_seed,
    )


def paper_phase_grid(trials: int = 10, base_seed: int = 0) -> ExperimentGrid:
    """The full-size noiseless study; hours of compute."""
    return ExperimentGrid(
        dims=[(k, k) for k in range(10, 151, 10)],
        Ls=range(10, 851, 60),
        trials=trials,
        base_seed=base_seed,
    )


def desk_noise_grid(trials: int = 10, base_seed: int = 0) -> ExperimentGrid:
    return ExperimentGrid(
        dims=[(20, 20)],
        Ls=range(10, 201, 10),
        alphas=[round(0.1 * i, 1) for i in range(11)],
        trials=trials,
        base_seed=base_seed,
    )


@dataclass(frozen=True)
class ResultRow:
    K: int
    N: int
    L: int
    alpha: float
    trial: int
    seed: int
    success: bool
    abs_error: float
    rel_error: float
    theorem2_bound: float
    iters: int
    wallclock_s: float
    status: str


@dataclass
class CellSummary:
    K: int
    N: int
    L: int
    alpha: float
    trials: int
    success_rate: float
    max_rel_error: float
    mean_rel_error: float
    within_bound: float


@dataclass
class ResultTable:
    """Trial records in deterministic ``(cell, trial)`` order.

    ``kind`` is ``"phase"`` or ``"noise"`` and selects the plot layout.
    """

    rows: list = field(default_factory=list)
    kind: str = "phase"
    success_threshold: float = 1e-5

    def __len__(self):
        return len(self.rows)

    def aggregate(self) -> list:
        """One :class:`CellSummary` per cell, in first-appearance order."""
        groups: dict = {}
        for r in self.rows:
            groups.setdefault((r.K, r.N, r.L, r.alpha), []).append(r)
        out = []
        for (K, N, L, alpha), rs in groups.items():
            rel = np.array([r.rel_error for r in rs])
            ok = [r.abs_error <= r.theorem2_bound + 10 * self.success_threshold for r in rs]
            out.append(
                CellSummary(
                    K, N, L, alpha, len(rs),
                    success_rate=float(np.mean([r.success for r in rs])),
                    max_rel_error=float(np.max(rel)),
                    mean_rel_error=float(np.mean(rel)),
                    within_bound=float(np.mean(ok)),
                )
            )
        return out


def run_trial(K, N, L, alpha, trial, seed, target, threshold, solver=None) -> ResultRow:
    """Generate, solve and score one instance; solver failures become rows."""
    noise = NoiseModel("uniform", alpha) if alpha > 0 else NoiseModel()
    start = time.perf_counter()
    try:
        inst, truth = generate_instance(K, N, L, noise=noise, target=target, seed=seed)
        res = solve_bh(inst, solver)
        abs_err, rel_err, bound = recovery_error(res, truth)
        iters, status = res.iters, res.status
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        abs_err = rel_err = math.inf
        bound = math.nan
        iters, status = 0, f"error: {exc}"
    wall = time.perf_counter() - start
    return ResultRow(
        K, N, L, alpha, trial, seed,
        success=bool(abs_err < threshold),
        abs_error=abs_err,
        rel_error=rel_err,
        theorem2_bound=bound,
        iters=iters,
        wallclock_s=wall,
        status=status,
    )


def _run_job(job):
    return run_trial(*job)


def _sweep(grid: ExperimentGrid, target: str, kind: str, workers) -> ResultTable:
    jobs = [
        (K, N, L, alpha, t, trial_seed(grid.base_seed, K, N, L, alpha, t), target,
         grid.success_threshold, grid.solver)
        for K, N, L, alpha in grid.cells()
        for t in range(grid.trials)
    ]
    rows = parallel_map(_run_job, jobs, workers)
    return ResultTable(rows, kind=kind, success_threshold=grid.success_threshold)


def phase_diagram(grid: ExperimentGrid, workers: int | None = None) -> ResultTable:
    """Noiseless recovery of ``(e_1, e_1)`` over the grid.

    A trial succeeds when ``||(h*, m*) - (e_1, e_1)|| < success_threshold``.
    """
    if any(a != 0 for a in grid.alphas):
        raise ValueError("the phase study is noiseless; use alphas=(0,)")
    return _sweep(grid, "standard-basis", "phase", workers)


def noise_sweep(grid: ExperimentGrid, workers: int | None = None) -> ResultTable:
    """Recovery of Gaussian signals under uniform multiplicative noise."""
    if any(a > 1 for a in grid.alphas):
        raise ValueError("noise levels must lie in [0, 1]")
    return _sweep(grid, "gaussian", "noise", workers)


# -- output ----------------------------------------------------------------

def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def emit_csv(table: ResultTable, path) -> None:
    """Write the trial records as RFC 4180 CSV with 17-digit floats."""
    header = [f.name for f in fields(ResultRow)]
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(header)
            for row in table.rows:
                w.writerow([_cell(v) for v in asdict(row).values()])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _phase_script(table: ResultTable) -> str:
    lines = [
        "# success rate over (K+N, L); white = always recovered",
        "set xlabel 'K + N'",
        "set ylabel 'L'",
        "set cblabel 'empirical recovery probability'",
        "set palette gray",
        "set cbrange [0:1]",
        "# overlay line y = 2x, i.e. L = 2(K+N)",
        "f(x) = 2*x",
        "$rates << EOD",
    ]
    for c in table.aggregate():
        lines.append(f"{c.K + c.N} {c.L} {_cell(c.success_rate)}")
    lines += [
        "EOD",
        "plot $rates using 1:2:3 with image notitle, \\",
        "     f(x) with lines lw 2 lc rgb 'red' title 'L = 2(K+N)'",
    ]
    return "\n".join(lines) + "\n"


def _noise_script(table: ResultTable) -> str:
    cells = table.aggregate()
    alphas = sorted({c.alpha for c in cells})
    lines = [
        "# maximum relative error vs. sampling ratio, one curve per noise level",
        "set xlabel 'L / (K + N)'",
        "set ylabel 'maximum relative error'",
        "set logscale y",
    ]
    for i, a in enumerate(alphas):
        lines.append(f"$alpha{i} << EOD")
        for c in cells:
            if c.alpha == a:
                ratio = c.L / (c.K + c.N)
                lines.append(f"{_cell(ratio)} {_cell(max(c.max_rel_error, 1e-16))}")
        lines.append("EOD")
    plots = [
        f"$alpha{i} using 1:2 with linespoints title 'alpha = {a:g}'"
        for i, a in enumerate(alphas)
    ]
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"


def emit_plot_script(table: ResultTable, kind: str, path) -> None:
    """Write a gnuplot script reproducing the phase or noise figure."""
    if kind not in ("phase", "noise"):
        raise ValueError(f"unknown plot kind {kind!r}")
    if len(table) == 0:
        raise ValueError("cannot plot an empty table")
    if table.kind != kind:
        raise ValueError(f"a {table.kind} table cannot be drawn as a {kind} plot")
    text = _phase_script(table) if kind == "phase" else _noise_script(table)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
