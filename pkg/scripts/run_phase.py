"""Noiseless phase-transition study at desk scale (or full scale with --full).

Writes the per-trial CSV, a gnuplot script and prints the success-rate
matrix with K+N across and L down.

    python3 scripts/run_phase.py --out phase.csv --plot phase.plt
"""
import argparse
import time

from branchhull.experiments import (
    desk_phase_grid,
    emit_csv,
    emit_plot_script,
    paper_phase_grid,
    phase_diagram,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--full", action="store_true")
    ap.add_argument("--out", default="phase.csv")
    ap.add_argument("--plot", default="phase.plt")
    args = ap.parse_args()

    grid = (paper_phase_grid if args.full else desk_phase_grid)(args.trials, args.seed)
    t0 = time.perf_counter()
    table = phase_diagram(grid)
    emit_csv(table, args.out)
    emit_plot_script(table, "phase", args.plot)

    rates = {(c.K + c.N, c.L): c.success_rate for c in table.aggregate()}
    cols = sorted({k for k, _ in rates})
    print("L \\ K+N " + " ".join(f"{k:>5d}" for k in cols))
    for L in grid.Ls:
        print(f"{L:7d} " + " ".join(f"{rates[(k, L)]:5.2f}" for k in cols))
    print(f"{len(table)} trials in {time.perf_counter() - t0:.1f} s -> {args.out}, {args.plot}")


if __name__ == "__main__":
    main()
