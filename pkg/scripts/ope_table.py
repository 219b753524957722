"""Print the lambda-brackets among J, Q, G, L on a rank-n patch."""

import argparse

from chiralcdr.cdr import TOPOLOGICAL_PAIRS, Patch, topological_brackets, topological_table


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-n", type=int, default=2)
    args = ap.parse_args()
    P = Patch.standard(args.n)
    got, want = topological_brackets(P), topological_table(P)
    for pair in TOPOLOGICAL_PAIRS:
        mark = "ok " if got[pair] == want[pair] else "BAD"
        print(f"{mark} [{pair[0]} lam {pair[1]}] = {got[pair]}")


if __name__ == "__main__":
    main()
