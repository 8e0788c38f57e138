"""Empirical coverage and query cost of IQAE on a single-qubit problem.

    python scripts/iqae_coverage.py --amplitudes 0.05 0.3 0.7 --runs 200
"""

import argparse
import math

import numpy as np

from rainbow_qae.estimation import AmplitudeProblem, iqae
from rainbow_qae.statevector import RY, Circuit


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--amplitudes", type=float, nargs="+", default=[0.05, 0.3, 0.7])
    parser.add_argument("--epsilon", type=float, default=0.02)
    parser.add_argument("--alpha", type=float, default=0.05)
    parser.add_argument("--shots", type=int, default=1000)
    parser.add_argument("--runs", type=int, default=200)
    args = parser.parse_args()

    print("amplitude  within_eps  ci_covers  mean_queries  max_power")
    for amp in args.amplitudes:
        problem = AmplitudeProblem(Circuit(1, [RY(2 * math.asin(math.sqrt(amp)), 0)]), 0)
        results = [iqae(problem, args.epsilon, args.alpha, args.shots, seed) for seed in range(args.runs)]
        within = sum(abs(r.estimation - amp) <= args.epsilon for r in results)
        covers = sum(r.confidence_interval[0] <= amp <= r.confidence_interval[1] for r in results)
        queries = np.mean([r.oracle_queries for r in results])
        top = max(max(r.powers) for r in results)
        print(f"{amp:>9.3f}  {within:>6}/{args.runs}  {covers:>5}/{args.runs}  {queries:>12.0f}  {top:>9}")


if __name__ == "__main__":
    main()
