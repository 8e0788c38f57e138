"""T-depth table of both payoff-loading methods over register sizes and precisions.

    python scripts/resource_sweep.py --k-max 32 --eps 1e-2 1e-4 --out sweep.csv
"""

import argparse

from rainbow_qae.resources import resource_table, t_depth_direct, t_depth_integration, table_to_csv


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--k-max", type=int, default=32)
    parser.add_argument("--eps", type=float, nargs="+", default=[1e-2, 1e-4, 1e-6])
    parser.add_argument("--engineering", action="store_true")
    parser.add_argument("--out", default=None)
    args = parser.parse_args()

    text = table_to_csv(resource_table(range(1, args.k_max + 1), args.eps, engineering=args.engineering))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        print(text, end="")
    for eps in args.eps:
        cross = next((k for k in range(1, 100_000)
                      if t_depth_integration(k, eps).total < t_depth_direct(k, eps).total), None)
        print(f"# eps_payoff={eps:g}: integration is shallower from k={cross}")


if __name__ == "__main__":
    main()
