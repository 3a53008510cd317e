"""Loss trend curves: SINR threshold, outage budget, number of DOIs, CSI uncertainty.

Each curve is written as ``sweep_{axis}_{metric}.csv`` (columns x, mean, stderr)
and the per-realization rows as ``rows_{axis}_{value}.csv``.
"""

import argparse
from pathlib import Path

from dfrc_outage.harness import ScenarioConfig, emit_plot_data, sweep

CURVES = {
    # name: (axis, values, overrides, metric)
    "gamma": ("gamma_db", list(range(5, 13)), {"users.gamma_db": [10]}, "combined"),
    "p_out": ("p_out", [0.05, 0.1, 0.15, 0.2, 0.25, 0.3], {"users.gamma_db": [5]}, "combined"),
    "doi": ("M", [2, 3, 4], {"users.gamma_db": [5]}, "excess_loss"),
    "sigma": ("sigma_e2", [0.001, 0.005, 0.01], {"users.gamma_db": [10]}, "combined"),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("curves", nargs="*", default=list(CURVES), help=f"subset of {sorted(CURVES)}")
    ap.add_argument("--out", type=Path, default=Path("out/trends"))
    ap.add_argument("--realizations", type=int, default=10)
    ap.add_argument("--users", type=int, default=2)
    ap.add_argument("--delta", type=float, default=0.01)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    unknown = set(args.curves) - set(CURVES)
    if unknown:
        ap.error(f"unknown curve(s) {sorted(unknown)}")

    for name in args.curves:
        axis, values, overrides, metric = CURVES[name]
        cfg = ScenarioConfig().replace(**{
            "users.num_users": args.users, "loss.delta": args.delta,
            "trials.channel_realizations": args.realizations, **overrides,
        })
        res = sweep(cfg, axis, values, workers=args.workers)
        out = args.out / name
        emit_plot_data(res, "sweep_curve", out, metric=metric)
        for v, r in zip(res.values, res.results):
            r.write_rows(out / f"rows_{axis}_{v:g}.csv")
        for row in res.table():
            print(f"{name} {axis}={row['x']:g}: {metric} {row[metric]:.5f} +- {row['combined_stderr']:.5f}")


if __name__ == "__main__":
    main()
