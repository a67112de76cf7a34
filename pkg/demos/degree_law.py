"""Grow one large graph and compare its degree histogram with the limiting
degree law, including the closed-form tail identity.

Run:  python3 demos/degree_law.py
"""

import numpy as np

from pacp import DegreeLaw, DeltaProfile, degree_tail_counts, simulate


def main():
    n, m, delta = 200_000, 1, 0.5
    print(f"growing a graph with n = {n}, m = {m}, delta = {delta} ...")
    g = simulate(n, m, DeltaProfile.constant(delta), seed=1)
    law = DegreeLaw(m, delta)

    counts = np.bincount(g.degrees())
    print("\n  k    empirical N_k/(n+1)    limit p_k")
    for k in range(m, m + 8):
        emp = counts[k] / (n + 1) if k < len(counts) else 0.0
        print(f"  {k:<4d} {emp:>12.5f}       {law.pmf(k):>12.5f}")

    tc = degree_tail_counts(g)
    print("\n  tail identity p_>k = (k+d) m/(2m+d) p_k vs empirical N_>k/(n+1):")
    for k in (m, m + 2, m + 5, m + 10):
        print(f"  k={k:<4d} empirical {tc.n_gt(k) / (n + 1):>10.5f}   limit {law.tail(k):>10.5f}")

    print(f"\n  excess-degree identity: sum_k N_>k = {tc.total_excess} = m(n-1) = {m * (n - 1)}")


if __name__ == "__main__":
    main()
