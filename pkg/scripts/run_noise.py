"""Noise-level study: maximum relative error against the sampling ratio.

    python3 scripts/run_noise.py --out noise.csv --plot noise.plt
"""
import argparse
import time

from branchhull.experiments import desk_noise_grid, emit_csv, emit_plot_script, noise_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="noise.csv")
    ap.add_argument("--plot", default="noise.plt")
    args = ap.parse_args()

    grid = desk_noise_grid(args.trials, args.seed)
    t0 = time.perf_counter()
    table = noise_sweep(grid)
    emit_csv(table, args.out)
    emit_plot_script(table, "noise", args.plot)

    print(f"{'alpha':>6} {'L/(K+N)':>8} {'max rel':>10} {'mean rel':>10} {'<= bound':>9}")
    for c in table.aggregate():
        print(f"{c.alpha:6.2f} {c.L / (c.K + c.N):8.2f} {c.max_rel_error:10.3g} "
              f"{c.mean_rel_error:10.3g} {c.within_bound:9.2f}")
    print(f"{len(table)} trials in {time.perf_counter() - t0:.1f} s -> {args.out}, {args.plot}")


if __name__ == "__main__":
    main()
