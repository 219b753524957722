import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st
from strategies import forms, functions, mixed_forms, vector_fields

from chiralcdr.coeffring import CoeffFn, CoordinateSystem
from chiralcdr.courant import (
    BundleLift,
    CourantSection,
    InvariantForm,
    ReducedSection,
    ReductionData,
    bracket_H,
    bracket_compat_check,
    cg_tau,
    check_axioms,
    clifford_act,
    clifford_sign,
    d_H,
    hori_T,
    inv_clifford,
    inv_d_H,
    pairing,
    random_function,
    random_samples,
    reduced_bracket,
    reduced_pairing,
)
from chiralcdr.forms import DiffForm, VectorField, one_form, poincare_potential

C1 = CoordinateSystem.standard(1)
C3 = CoordinateSystem.standard(3)
x = lambda C, i: CoeffFn.coordinate(C, i)  # noqa: E731
vec = lambda C, i, f=None: VectorField.basis(C, i, f)  # noqa: E731
S = lambda X=None, xi=None, C=C3: CourantSection.of(X, xi, coords=C)  # noqa: E731
dx = lambda C, i, f=None: DiffForm.basis(C, [i], f)  # noqa: E731
VOL = DiffForm.basis(C3, [0, 1, 2])


def sections(C):
    return st.builds(CourantSection, vector_fields(C), forms(C, 1))


class TestPairingAndBracket:
    def test_pairing_examples(self):
        assert pairing(S(vec(C3, 0)), S(xi=dx(C3, 0))) == CoeffFn.const(C3, Fraction(1, 2))
        assert pairing(S(vec(C3, 0)), S(vec(C3, 1))).is_zero()
        s = S(vec(C3, 0), dx(C3, 0))
        assert pairing(s, s) == CoeffFn.const(C3, 1)

    def test_bracket_examples(self):
        X = vec(C1, 0)
        assert bracket_H(None, S(X, C=C1), S(vec(C1, 0, x(C1, 0)), C=C1)) == S(X, C=C1)
        got = bracket_H(None, S(X, C=C1), S(xi=dx(C1, 0, x(C1, 0)), C=C1))
        assert got == S(xi=dx(C1, 0) * Fraction(1, 2), C=C1)
        got = bracket_H(VOL, S(vec(C3, 0)), S(vec(C3, 1)))
        assert got == S(xi=-dx(C3, 2))

    def test_form_part_must_be_one_form(self):
        with pytest.raises(ValueError):
            CourantSection(VectorField.zero(C3), VOL)

    def test_clifford_examples(self):
        c12 = DiffForm.basis(C3, [0, 1])
        assert clifford_act(S(vec(C3, 0)), c12) == DiffForm.basis(C3, [1])
        assert clifford_act(S(xi=dx(C3, 0)), DiffForm.basis(C3, [1])) == c12

    @given(mixed_forms(C3, 1))
    def test_clifford_square(self, w):
        s = S(vec(C3, 0), dx(C3, 0))
        assert clifford_act(s, clifford_act(s, w)) == w

    @given(mixed_forms(C3, 1))
    def test_d_H_squares_to_zero(self, w):
        H = DiffForm.basis(C3, [0, 1, 2], x(C3, 0) + 2)
        assert d_H(H, d_H(H, w)).is_zero()
        assert d_H(None, w) == w.d()
        assert d_H(VOL, DiffForm.const(C3, 1)) == VOL


class TestAxioms:
    def test_samples_standard_and_twisted(self):
        samples = random_samples(5, C3, 6)
        assert check_axioms(None, samples).ok()
        assert check_axioms(DiffForm.basis(C3, [0, 1, 2], x(C3, 0) ** 2 + x(C3, 1)), samples).ok()

    def test_n1_sections(self):
        X, Y, w = S(vec(C1, 0), C=C1), S(vec(C1, 0, x(C1, 0)), C=C1), S(xi=dx(C1, 0), C=C1)
        f = x(C1, 0) ** 2
        assert check_axioms(None, [(X, Y, w, f), (Y, w, X, f), (w, X, Y, f)]).ok()

    def test_negative_controls(self):
        samples = random_samples(9, C3, 4)
        corrupted = check_axioms(VOL, samples, corrupt=True)
        assert corrupted.ok(1) and not corrupted.ok(2)
        half = check_axioms(VOL, samples, d_scale=Fraction(1, 2))
        assert not half.ok(2) and not half.ok(4) and not half.ok(5)

    @given(sections(C3), sections(C3), sections(C3), functions(C3, fourier=False))
    def test_axioms_hold_for_random_sections(self, a, b, c, f):
        H = DiffForm.basis(C3, [0, 1, 2], x(C3, 1) + 1)
        assert check_axioms(H, [(a, b, c, f)]).ok()


class TestDerivedBracket:
    def test_examples(self):
        s1, s2 = S(vec(C3, 0)), S(vec(C3, 1))
        assert bracket_compat_check(VOL, s1, s2, DiffForm.const(C3, 1))
        assert bracket_compat_check(VOL, s1, s1, dx(C3, 2))
        # the skew bracket misses d<s1,s2> once the pairing is non-constant
        s3 = S(xi=dx(C3, 0, x(C3, 0)))
        w = dx(C3, 1, x(C3, 2))
        assert not bracket_compat_check(VOL, s1, s3, w)
        assert bracket_compat_check(VOL, s1, s3, w, "dorfman")

    @given(sections(C3), sections(C3), mixed_forms(C3, 1))
    def test_dorfman_is_derived(self, s1, s2, w):
        assert bracket_compat_check(VOL, s1, s2, w, "dorfman")


# ----------------------------------------------------------------------
# reduction

B = CoordinateSystem.standard(4)
g = lambda i: x(B, i)  # noqa: E731
one = CoeffFn.const(B, 1)
F_A = DiffForm.basis(B, [0, 1])
H2 = DiffForm.basis(B, [2, 3])
H3 = DiffForm.basis(B, [1, 2, 3], -g(0))  # dH3 = -F_A ^ H2
RD = ReductionData(F_A, H3, H2)


def rand_reduced(rng, C=B):
    rf = lambda: random_function(rng, C)  # noqa: E731
    return ReducedSection(VectorField(C, [rf() for _ in range(C.dim)]), rf(), one_form(C, [rf() for _ in range(C.dim)]), rf())


def rand_inv(rng, C=B):
    def rform(k):
        out = DiffForm.zero(C)
        for idx in itertools.combinations(range(C.dim), k):
            if rng.random() < 0.5:
                out = out + DiffForm(C, {idx: random_function(rng, C)})
        return out

    return InvariantForm(rform(rng.randint(0, 3)), rform(rng.randint(0, 3)))


class TestReduction:
    def test_validation(self):
        with pytest.raises(ValueError):
            ReductionData(F_A, DiffForm.zero(B), H2)  # dH3 = 0 != -F_A ^ H2
        with pytest.raises(ValueError):
            ReductionData(DiffForm.basis(B, [0], g(1)), DiffForm.zero(B), DiffForm.zero(B))

    def test_zero_data_is_lie_bracket(self):
        z = ReductionData(DiffForm.zero(B), DiffForm.zero(B), DiffForm.zero(B))
        X1, X2 = vec(B, 0, g(1)), vec(B, 1, g(0) ** 2)
        f1, f2 = g(2), g(0)
        r = reduced_bracket(z, ReducedSection(X1, f1, DiffForm.zero(B), 0 * one), ReducedSection(X2, f2, DiffForm.zero(B), 0 * one))
        assert r.X == X1.bracket(X2)
        assert r.f == X1(f2) - X2(f1)

    def test_curvature_and_flux_terms(self):
        X1, X2 = vec(B, 0), vec(B, 1)
        z = DiffForm.zero(B)
        r = reduced_bracket(RD, ReducedSection(X1, 0 * one, z, 0 * one), ReducedSection(X2, 0 * one, z, 0 * one))
        assert r.f == F_A.contract(X2).contract(X1).function_part()
        Y1, Y2 = vec(B, 2), vec(B, 3)
        r = reduced_bracket(RD, ReducedSection(Y1, 0 * one, z, 0 * one), ReducedSection(Y2, 0 * one, z, 0 * one))
        assert r.g == H2.contract(Y2).contract(Y1).function_part()

    def test_matches_total_space_lift(self):
        lift = BundleLift(poincare_potential(F_A))
        Htot = lift.total_H(RD)
        assert Htot.is_closed()
        rng = random.Random(4)
        literal_hits = 0
        for _ in range(4):
            r1, r2 = rand_reduced(rng), rand_reduced(rng)
            full = lift.reduce(bracket_H(Htot, lift.lift(r1), lift.lift(r2)))
            d = full - reduced_bracket(RD, r1, r2)
            assert d.X.is_zero() and d.f.is_zero() and d.omega.is_zero() and d.g.is_zero()
            lit = full - reduced_bracket(RD, r1, r2, literal_typo=True)
            literal_hits += lit.omega.is_zero()
            assert lift.reduce(lift.lift(r1)) == r1
        assert literal_hits == 0

    def test_tau(self):
        r = ReducedSection(vec(B, 0), one, DiffForm.zero(B), 0 * one)
        assert cg_tau(r) == ReducedSection(vec(B, 0), 0 * one, DiffForm.zero(B), one)
        rng = random.Random(1)
        du = RD.dual()
        for _ in range(3):
            r1, r2 = rand_reduced(rng), rand_reduced(rng)
            assert cg_tau(cg_tau(r1)) == r1
            assert reduced_pairing(cg_tau(r1), cg_tau(r2)) == reduced_pairing(r1, r2)
            d = reduced_bracket(du, cg_tau(r1), cg_tau(r2)) - cg_tau(reduced_bracket(RD, r1, r2))
            assert d.X.is_zero() and d.f.is_zero() and d.omega.is_zero() and d.g.is_zero()


class TestHori:
    def test_examples(self):
        one_f = DiffForm.const(B, 1)
        z = DiffForm.zero(B)
        assert hori_T(InvariantForm(one_f, z)) == InvariantForm(z, one_f)  # 1 -> Ahat
        assert hori_T(InvariantForm(z, one_f)) == InvariantForm(-one_f, z)  # A -> -1

    def test_intertwines_up_to_sign(self):
        rng = random.Random(2)
        du = RD.dual()
        for _ in range(5):
            G = rand_inv(rng)
            assert (hori_T(inv_d_H(RD, G)) + inv_d_H(du, hori_T(G))).is_zero()

    def test_inv_d_H_squares_to_zero(self):
        rng = random.Random(8)
        for _ in range(4):
            G = rand_inv(rng)
            assert inv_d_H(RD, inv_d_H(RD, G)).is_zero()

    def test_clifford_sign_is_minus_one(self):
        rng = random.Random(3)
        samples = [(rand_reduced(rng), rand_inv(rng)) for _ in range(6)]
        eps, bad = clifford_sign(samples)
        assert eps == -1 and bad == []
        s, G = samples[0]
        assert hori_T(inv_clifford(s, G)) == inv_clifford(cg_tau(s), hori_T(G)).scale(-1)
