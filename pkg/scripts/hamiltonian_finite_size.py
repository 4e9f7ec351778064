"""Finite-size behaviour of the quenched Hamiltonian at h = 0.

Prints, per N, the disorder mean of <H>, N times the disorder variance of
<H>, and the mean Gibbs variance of H.  The mean-square discrepancy of odd
test functions is driven by Var<H>; its large-N limit is compared with the
heuristic value 1/2 ((1 - beta^2)^-2 - 1) obtained by differentiating the
cycle expansion of the free-energy fluctuations in beta.

    python scripts/hamiltonian_finite_size.py --beta 0.5 --reps 200
"""

import argparse

import numpy as np

from skstein.experiments import default_config, replication_seed
from skstein.sk_model import ModelParams, build_exact_gibbs, hamiltonian_values, sample_disorder


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--beta", type=float, default=0.5)
    ap.add_argument("--reps", type=int, default=200)
    ap.add_argument("--n", default="4,8,12,16,20")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    cfg = default_config("hamiltonian", beta=args.beta, master_seed=args.seed,
                         disorder_replications=args.reps)
    limit = 0.5 * ((1 - args.beta**2) ** -2 - 1)
    print(f"beta={args.beta}  heuristic limit of N Var<H>: {limit:.4f}")
    print(f"{'N':>4} {'E<H>':>10} {'N Var<H>':>10} {'E Var_G H':>10}")
    for n in (int(x) for x in args.n.split(",")):
        means, gibbs_var = [], []
        for rep in range(args.reps):
            table = build_exact_gibbs(ModelParams(n, args.beta, 0.0),
                                      sample_disorder(n, replication_seed(cfg, rep)))
            ham = hamiltonian_values(table)
            m = table.expect(ham)
            means.append(m)
            gibbs_var.append(table.expect(ham**2) - m * m)
        means = np.array(means)
        print(f"{n:>4} {means.mean():>10.5f} {n * means.var(ddof=1):>10.4f} {np.mean(gibbs_var):>10.4f}")


if __name__ == "__main__":
    main()
