import pytest
from fock_oracle import FockModel
from hypothesis import given
from hypothesis import strategies as st

from chiralcdr.cdr import Patch
from chiralcdr.voa import (
    ContextError,
    FieldExpr,
    GradingError,
    LambdaPoly,
    circle,
    derivative,
    format_expr,
    grade,
    jacobi_defects,
    lambda_bracket,
    mode,
    skew_symmetric_partner,
    wick,
    wick_many,
)

P1 = Patch.standard(1)
P2 = Patch.standard(2)
ctx1 = P1.ctx
g = P1.coordinate(1)
b, c, beta, dg = P1.b(1), P1.c(1), P1.beta(1), P1.dgamma(1)
gam = P1.fn(g)


def poly(ctx, *entries):
    return LambdaPoly.from_entries(ctx, list(entries))


class TestExamples:
    def test_wick_of_functions_is_product(self):
        assert wick(gam, gam) == P1.fn(g * g)

    def test_odd_square_vanishes(self):
        assert wick(b, b).is_zero()

    def test_wick_matches_circle_minus_one(self):
        f = P1.fn(g * g)
        assert wick(beta, f) == circle(beta, -1, f)

    def test_beta_gamma(self):
        assert lambda_bracket(beta, gam) == poly(ctx1, FieldExpr.one(ctx1))

    def test_virasoro(self):
        L = P1.structure.L
        assert lambda_bracket(L, L) == poly(ctx1, derivative(L), L * 2)

    def test_QG(self):
        s = P2.structure
        want = poly(P2.ctx, s.L, s.J, FieldExpr.scalar(P2.ctx, 2))
        assert lambda_bracket(s.Q, s.G) == want

    def test_circle_examples(self):
        assert circle(b, 0, c) == FieldExpr.one(ctx1)
        assert circle(beta, 0, P1.fn(g * g)) == P1.fn(g * 2)
        for a in (b, c, beta, dg):
            assert circle(a, -2, FieldExpr.one(ctx1)) == derivative(a)

    def test_derivative_examples(self):
        assert derivative(gam) == dg
        assert derivative(FieldExpr.one(ctx1)).is_zero()
        assert derivative(P1.fn(g * g)) == wick(P1.fn(g * 2), dg)

    def test_grade(self):
        assert grade(gam + dg) == [((0, 0), gam), ((1, 0), dg)]
        assert grade(c) == [((0, 1), c)]
        assert grade(b) == [((1, -1), b)]

    def test_mode_needs_homogeneous_field(self):
        with pytest.raises(GradingError):
            mode(b + c, 0, c)
        assert mode(b, 0, c) == circle(b, 0, c)

    def test_context_mismatch(self):
        with pytest.raises(ContextError):
            wick(b, P2.b(1))

    def test_scalar_only_multiplication(self):
        with pytest.raises(TypeError):
            b * c


# ----------------------------------------------------------------------
# independent Fock-space oracle

ORACLE = FockModel(P2.ctx)
_factors = [("b", 1), ("b", 2), ("c", 1), ("c", 2), ("beta", 1), ("beta", 2), ("dgamma", 1), ("dgamma", 2)]


def _gen(name, i, d):
    return derivative(P2.gen(f"{name}[{i}]"), d)


free_monomials = st.lists(
    st.tuples(st.sampled_from(_factors), st.integers(0, 1)), min_size=0, max_size=3
).map(lambda fs: wick_many(*[_gen(n, i, d) for (n, i), d in fs]) if fs else FieldExpr.one(P2.ctx))
free_fields = st.lists(st.tuples(free_monomials, st.integers(-2, 2)), min_size=1, max_size=2).map(
    lambda ts: sum((m * k for m, k in ts[1:]), ts[0][0] * (ts[0][1] or 1))
)


def test_oracle_on_structure_fields():
    s = P2.structure
    els = list(s.as_dict().values()) + [P2.b(1), P2.c(2), P2.beta(1), P2.dgamma(2)]
    for a in els:
        for x in els:
            for n in range(-2, 4):
                assert ORACLE.state_of(circle(a, n, x)) == ORACLE.circle_state(a, n, x), (a, n, x)


def test_oracle_confirms_JJ_level():
    J = P2.structure.J
    st_ = ORACLE.circle_state(J, 1, J)
    assert st_ == {(): 2}


@given(free_fields, st.integers(-3, 3), free_fields)
def test_circle_products_agree_with_fock_model(a, n, x):
    assert ORACLE.state_of(circle(a, n, x)) == ORACLE.circle_state(a, n, x)


# ----------------------------------------------------------------------
# axioms

fields_with_functions = st.sampled_from(
    [b, c, beta, dg, gam, P1.fn(g * g + 1), wick(beta, c), wick(P1.fn(g), b), derivative(c), P1.structure.L]
)


@given(fields_with_functions, fields_with_functions)
def test_skew_symmetry(a, x):
    pa, px = a.parity(), x.parity()
    assert lambda_bracket(x, a) == skew_symmetric_partner(lambda_bracket(a, x), pa, px)


@given(fields_with_functions, fields_with_functions)
def test_translation_covariance(a, x):
    # [da lam b] = -lam [a lam b] and d(a o(n) b) = da o(n) b + a o(n) db
    for n in range(3):
        if n >= 1:
            assert circle(derivative(a), n, x) == circle(a, n - 1, x) * (-n)
        else:
            assert circle(derivative(a), 0, x).is_zero()
        assert derivative(circle(a, n, x)) == circle(derivative(a), n, x) + circle(a, n, derivative(x))


def test_borcherds_commutator_formula_on_generators():
    els = [b, c, beta, gam, P1.fn(g * g)]
    assert jacobi_defects(els, 2) == []


@given(fields_with_functions, fields_with_functions, fields_with_functions)
def test_zero_mode_is_derivation_of_wick(a, x, y):
    s = -1 if a.parity() and x.parity() else 1
    lhs = circle(a, 0, wick(x, y))
    rhs = wick(circle(a, 0, x), y) + wick(x, circle(a, 0, y)) * s
    assert lhs == rhs


def test_printing_is_canonical():
    e = wick_many(P1.fn(g ** 2 + 3), b, derivative(c, 2))
    assert format_expr(e) == str(e)
    assert "d^2 c[1]" in str(e)


def test_products_beyond_bracket_degree_vanish():
    assert circle(P1.structure.L, 4, P1.structure.L).is_zero()
