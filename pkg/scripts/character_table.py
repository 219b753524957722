"""Cohomology character of the base-point quotient next to the product formula."""

import argparse

from chiralcdr.cohomlab import character_of_computed_cohomology, predicted_quotient_character
from chiralcdr.tduality import DualPairSetup


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-N", type=int, default=6, help="truncation order in q")
    args = ap.parse_args()
    Z = DualPairSetup.point().Z
    got = character_of_computed_cohomology(Z.ctx, Z.D, args.N)
    want = predicted_quotient_character({0: 1, 1: 1}, args.N)
    print("computed:")
    print(got.grid())
    print("(1+z) * prod (1+q^n z)(1+q^n/z):")
    print(want.grid())
    print("match" if got == want else "MISMATCH")


if __name__ == "__main__":
    main()
