"""Multistart estimate of the best loss reachable with K rank-one beamformers.

Ignores the user constraints, so it lower-bounds what any K-user design can
achieve.  Used to tell optimizer shortfalls from limits of the rank budget,
for example when comparing the excess loss over radar-only across DOI counts.
"""

import argparse

import numpy as np
from scipy.optimize import minimize

from dfrc_outage.harness import ScenarioConfig, doi_layout, loss_config, radar_only_loss
from dfrc_outage.optimizer import loss_at_best_alpha


def best_rank_k_loss(cfg, K, starts, seed=0):
    lc = loss_config(cfg)
    N, P = cfg.array.num_antennas, cfg.power_w

    def cov(x):
        w = (x[: N * K] + 1j * x[N * K:]).reshape(K, N)
        w = w * np.sqrt(P / N / np.sum(np.abs(w) ** 2, axis=0))[None, :]  # equal antenna power
        return w.T @ w.conj()

    rng = np.random.default_rng(seed)
    return min(minimize(lambda x: loss_at_best_alpha(cov(x), lc).combined, rng.standard_normal(2 * N * K),
                        method="L-BFGS-B", options={"maxiter": 3000}).fun for _ in range(starts))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--users", type=int, default=2)
    ap.add_argument("--dois", type=int, nargs="+", default=[2, 3, 4], help="numbers of DOIs M to try")
    ap.add_argument("--delta", type=float, default=0.01)
    ap.add_argument("--starts", type=int, default=30)
    args = ap.parse_args()

    for M in args.dois:
        cfg = ScenarioConfig().replace(**{"loss.delta": args.delta, "dois.angles_deg": doi_layout(M)})
        ref = radar_only_loss(cfg)[0]
        best = best_rank_k_loss(cfg, args.users, args.starts)
        print(f"M={M}: radar-only {ref:.5f}, best rank-{args.users} {best:.5f}, excess {best - ref:.5f}")


if __name__ == "__main__":
    main()
