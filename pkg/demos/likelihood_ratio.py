"""Exact likelihoods on a toy graph: enumerate the whole support, watch the
probabilities sum to one, and evaluate the change-vs-no-change LR both ways.

Run:  python3 demos/likelihood_ratio.py
"""

import itertools
import math

import numpy as np

from pacp import AttachmentLog, DeltaProfile, from_rows, log_likelihood, log_lr, simulate


def support(n, m):
    rows = [list(itertools.combinations_with_replacement(range(t), m)) for t in range(2, n + 1)]
    for combo in itertools.product(*rows):
        flat = [v for row in combo for v in row]
        yield AttachmentLog(n, m, np.array(flat, dtype=np.int64), validate=False)


def main():
    n, m = 5, 1
    profile = DeltaProfile.step(0.0, 2.0, 3)
    total = math.fsum(math.exp(log_likelihood(g, profile).value) for g in support(n, m))
    count = sum(1 for _ in support(n, m))
    print(f"sum of P(g) over all {count} graphs the mechanism can produce: {total:.15f}")

    g = from_rows(3, 1, {2: [0], 3: [0]})
    lr = log_lr(g, tau=2, delta0=0.0, delta1=1.0)
    print(f"\nworked example, star on 4 vertices, change after arrival 2:")
    print(f"  log LR = {lr:.7f}  (exact value log(6/7) = {math.log(6/7):.7f})")

    big = simulate(20_000, 2, DeltaProfile.constant(0.3), seed=4)
    tail = log_lr(big, 15_000, 0.3, 1.1, method="tail")
    seq = log_lr(big, 15_000, 0.3, 1.1, method="sequential")
    print(f"\ntwo independent algebraic forms on a 20k-vertex graph:")
    print(f"  tail-count form  {tail:.12f}")
    print(f"  sequential form  {seq:.12f}")
    print(f"  |difference|     {abs(tail - seq):.2e}")


if __name__ == "__main__":
    main()
