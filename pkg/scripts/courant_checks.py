"""Courant axioms for the standard, twisted and corrupted brackets on random sections."""

import argparse
from fractions import Fraction

from chiralcdr.coeffring import CoeffFn, CoordinateSystem
from chiralcdr.courant import check_axioms, random_samples
from chiralcdr.forms import DiffForm


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=30)
    ap.add_argument("--seed", type=int, default=5)
    args = ap.parse_args()
    C = CoordinateSystem.standard(3)
    H = DiffForm.basis(C, [0, 1, 2], CoeffFn.coordinate(C, 0) ** 2 + 1)
    samples = random_samples(args.seed, C, args.samples)
    for label, h, kw in (("standard", None, {}), ("twisted", H, {}), ("corrupted", H, {"corrupt": True}),
                         ("half d", H, {"d_scale": Fraction(1, 2)})):
        rep = check_axioms(h, samples, **kw)
        row = "  ".join(f"{k}:{'ok' if rep.ok(k) else len(rep.failures[k])}" for k in range(1, 6))
        print(f"{label:<10} {row}")


if __name__ == "__main__":
    main()
