"""Walk through the chiral T-duality maps for F_A = c1 c2, F_Ahat = 2 c1 c2 on a rank-2 base."""

import random

from chiralcdr.coeffring import CoeffFn, CoordinateSystem
from chiralcdr.courant import InvariantForm, ReducedSection, clifford_sign, hori_T, random_function
from chiralcdr.forms import DiffForm, VectorField, one_form
from chiralcdr.tduality import (
    DualPairSetup,
    T_ch,
    T_ch_word,
    evaluate_word,
    intertwining_defects,
    tau_ch_replay,
    well_definedness_counterexample,
)

C = CoordinateSystem.standard(2)
S = DualPairSetup(DiffForm.basis(C, [0, 1]), DiffForm.basis(C, [0, 1]) * 2)
Z, Zh = S.Z, S.Zhat
rng = random.Random(1)

print("tau(A) =", S.tau(Z.A), "  tau(iota_A) =", S.tau(Z.iota_A))
X = VectorField(C, [random_function(rng, C), random_function(rng, C)])
Y = VectorField(C, [random_function(rng, C), random_function(rng, C)])
print("bracket replay mismatches:", tau_ch_replay(S, X, Y))
print("modified intertwining defects:", intertwining_defects(S, modified=True))
print("unmodified intertwining fails on:", sorted(intertwining_defects(S, modified=False)))

print("\nT^ch at weight zero:")
g1 = CoeffFn.coordinate(C, 0)
for G in (
    InvariantForm(DiffForm.const(C, 1), DiffForm.zero(C)),
    InvariantForm(DiffForm.zero(C), DiffForm.const(C, 1)),
    InvariantForm(DiffForm.basis(C, [1], g1), DiffForm.basis(C, [0])),
):
    mu = Z.invariant_form(G)
    print(f"  T({mu}) = {T_ch(S, mu)}   Hori: {Zh.invariant_form(hori_T(G))}")

w1, w2 = well_definedness_counterexample(S)
print("\ntwo words for the vacuum:", evaluate_word(Z, w1), "and", evaluate_word(Z, w2))
print("their step-by-step images:", T_ch_word(S, w1), "and", T_ch_word(S, w2))

samples = []
for _ in range(10):
    rf = lambda: random_function(rng, C)  # noqa: E731
    s = ReducedSection(VectorField(C, [rf(), rf()]), rf(), one_form(C, [rf(), rf()]), rf())
    samples.append((s, InvariantForm(DiffForm.basis(C, [0], rf()), DiffForm.function(rf()))))
eps, bad = clifford_sign(samples)
print("\nClifford compatibility sign:", eps, f"({len(bad)} failures)")
