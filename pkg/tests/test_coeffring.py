from fractions import Fraction

import pytest
from hypothesis import given
from strategies import functions, scalars

from chiralcdr.coeffring import (
    CoeffFn,
    CoordinateError,
    CoordinateSystem,
    Scalar,
    is_zero,
    multiply,
    partial,
)

C = CoordinateSystem.standard(2, 1)
g1 = CoeffFn.coordinate(C, "gamma1")
g2 = CoeffFn.coordinate(C, "gamma2")
e = lambda k: CoeffFn.fourier(C, "theta1", k)  # noqa: E731


class TestExamples:
    def test_partial_of_square(self):
        assert partial(g1 * g1, "gamma1") == g1 * 2

    def test_partial_of_fourier_mode(self):
        assert partial(e(3), "theta1") == e(3).scale(Scalar(0, 3))

    def test_partial_in_independent_variable(self):
        assert partial(g1 * g1, "gamma2").is_zero()

    def test_unknown_coordinate(self):
        with pytest.raises(CoordinateError):
            partial(g1, "gamma9")
        with pytest.raises(CoordinateError):
            partial(g1, 7)

    def test_products(self):
        assert multiply(g1, g1) == g1 ** 2
        assert multiply(e(1), e(-1)) == CoeffFn.const(C, 1)
        assert multiply(g1 + 1, CoeffFn.zero(C)).is_zero()

    def test_coordinate_mismatch(self):
        other = CoordinateSystem.standard(3)
        with pytest.raises(CoordinateError):
            multiply(g1, CoeffFn.coordinate(other, 0))

    def test_is_zero(self):
        assert is_zero(CoeffFn.zero(C))
        assert is_zero(g1 - g1)
        assert not is_zero(e(1))

    def test_constant_helpers(self):
        assert CoeffFn.const(C, 1).is_one()
        assert not (g1 + 1).is_constant()
        assert (g1 + 3).constant_term() == 3
        assert CoeffFn.zero(C).is_constant()

    def test_scalar_arithmetic(self):
        i = Scalar(0, 1)
        assert i * i == -1
        assert (Scalar(1, 1) / Scalar(1, -1)) == i
        assert Scalar(Fraction(1, 2)) + Fraction(1, 2) == 1
        with pytest.raises(TypeError):
            Scalar.of(1.5j)

    def test_substitute_rejects_fourier(self):
        with pytest.raises(CoordinateError):
            e(1).substitute([g1, g2, g1])

    def test_negative_power(self):
        with pytest.raises(ValueError):
            g1 ** -1


@given(functions(C), functions(C), functions(C))
def test_ring_axioms(f, g, h):
    assert f * g == g * f
    assert (f * g) * h == f * (g * h)
    assert f * (g + h) == f * g + f * h
    assert (f - f).is_zero()


@given(functions(C), functions(C))
def test_partials_are_derivations(f, g):
    for c in range(C.dim):
        assert partial(f * g, c) == partial(f, c) * g + f * partial(g, c)


@given(functions(C))
def test_partials_commute(f):
    for a in range(C.dim):
        for b in range(C.dim):
            assert partial(partial(f, a), b) == partial(partial(f, b), a)


@given(scalars, scalars)
def test_scalar_field_axioms(a, b):
    assert a * b == b * a
    if b:
        assert (a / b) * b == a
    assert hash(a + 0) == hash(a)


@given(functions(CoordinateSystem.standard(2), fourier=False), functions(CoordinateSystem.standard(2), fourier=False))
def test_substitution_is_a_ring_map(f, g):
    D = CoordinateSystem.standard(2)
    x, y = CoeffFn.coordinate(D, 0), CoeffFn.coordinate(D, 1)
    images = [x + y * y, y]
    assert (f * g).substitute(images) == f.substitute(images) * g.substitute(images)
