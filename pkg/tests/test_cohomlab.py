import pytest
from hypothesis import given
from hypothesis import strategies as st

from chiralcdr.cdr import D_twisted, Patch, TwistData
from chiralcdr.coeffring import CoeffFn, Scalar
from chiralcdr.cohomlab import (
    CharacterSeries,
    DifferentialMatrix,
    LinearCache,
    SectorError,
    TruncationError,
    algebra_character,
    character_of_computed_cohomology,
    cohomology_dims,
    differential_matrix,
    enumerate_basis,
    euler_characteristic,
    fermion_character,
    predicted_quotient_character,
)
from chiralcdr.courant import ReductionData
from chiralcdr.forms import DiffForm
from chiralcdr.tduality import DualPairSetup

POINT = DualPairSetup.point().Z
P1 = Patch.standard(1)
P3 = Patch.standard(3)


def names(basis):
    return {str(e) for e in basis.elements()}


class TestEnumeration:
    def test_bc_pair(self):
        assert names(enumerate_basis(POINT.ctx, 0)) == {"1", "A"}
        assert names(enumerate_basis(POINT.ctx, 1)) == {"iota_A", "d^1 A", ":A iota_A:", ":A d^1 A:"}

    def test_beta_gamma_weight_one(self):
        b = enumerate_basis(P1.ctx, 1, poly_degree=1, degrees=[0])
        even = {s for s in names(b) if "b[" not in s and "c[" not in s}
        assert even == {"beta[1]", "gamma[1]*beta[1]", "dgamma[1,1]", "gamma[1]*dgamma[1,1]"}

    def test_sector_errors(self):
        S1 = Patch.standard(0, 1)
        with pytest.raises(SectorError):
            enumerate_basis(S1.ctx, 0)
        with pytest.raises(SectorError):
            enumerate_basis(S1.ctx, 0, (0, 0))
        with pytest.raises(SectorError):
            enumerate_basis(POINT.ctx, 1, charge=0)
        with pytest.raises(ValueError):
            enumerate_basis(P1.ctx, -1)

    def test_elements_are_homogeneous(self):
        for e in enumerate_basis(P1.ctx, 2, poly_degree=1).elements():
            assert e.weights() == {2}


class TestMatrices:
    def test_point_differential_vanishes(self):
        assert differential_matrix(POINT.D, enumerate_basis(POINT.ctx, 0)).is_zero()

    def test_bc_pair_cohomology(self):
        assert cohomology_dims(differential_matrix(POINT.D, enumerate_basis(POINT.ctx, 0))) == {0: 1, 1: 1}
        dims = cohomology_dims(differential_matrix(POINT.D, enumerate_basis(POINT.ctx, 1)))
        assert dims[-1] == 1  # iota_A

    @pytest.mark.parametrize("w", [0, 1, 2])
    def test_square_zero(self, w):
        d = differential_matrix(P1.D, enumerate_basis(P1.ctx, w, poly_degree=1))
        assert d.compose(d).is_zero()

    def test_twisted_square_zero(self):
        t = TwistData(DiffForm.basis(P3.coords, [0, 1, 2]))
        d = differential_matrix(LinearCache(lambda e: D_twisted(P3, t, e), P3.ctx), enumerate_basis(P3.ctx, 1, poly_degree=1))
        assert d.compose(d).is_zero()

    def test_truncation_is_an_error(self):
        H = DiffForm.basis(P3.coords, [0, 1, 2], CoeffFn.coordinate(P3.coords, 0))
        t = TwistData(H)
        with pytest.raises(TruncationError):
            differential_matrix(lambda e: D_twisted(P3, t, e), enumerate_basis(P3.ctx, 0))

    def test_corrupted_differential_is_rejected(self):
        b = enumerate_basis(POINT.ctx, 1)
        bad = DifferentialMatrix(b, {(1, 0): Scalar(1), (2, 1): Scalar(1)})
        with pytest.raises(ValueError):
            cohomology_dims(bad)
        d = differential_matrix(P1.D, enumerate_basis(P1.ctx, 1, poly_degree=1))
        with pytest.raises(ValueError):
            cohomology_dims(d, shift=2)

    def test_linear_cache_matches_operator(self):
        b = enumerate_basis(P1.ctx, 1, poly_degree=1)
        cached = LinearCache(P1.D, P1.ctx)
        e = sum(b.elements()[1:], b.elements()[0])
        assert cached(e) == P1.D(e)
        assert cached(cached(e)).is_zero()


class TestCohomology:
    def test_three_torus(self):
        T = Patch.standard(0, 3)
        dims = cohomology_dims(differential_matrix(T.D, enumerate_basis(T.ctx, 0, (0, 0, 0))))
        assert dims == {0: 1, 1: 3, 2: 3, 3: 1}
        dims = cohomology_dims(differential_matrix(T.D, enumerate_basis(T.ctx, 0, (1, 0, 0))))
        assert not any(dims.values())

    @pytest.mark.parametrize("w", [1, 2])
    def test_positive_weight_vanishes_in_charge_sectors(self, w):
        for q in range(-1, 3):
            b = enumerate_basis(P1.ctx, w, charge=q)
            if len(b):
                assert not any(cohomology_dims(differential_matrix(P1.D, b)).values())

    def test_polynomial_truncation_creates_classes(self):
        # gamma^2 c survives because gamma^3 was cut away
        dims = cohomology_dims(differential_matrix(P1.D, enumerate_basis(P1.ctx, 0, poly_degree=2)))
        assert dims == {0: 1, 1: 1}
        assert cohomology_dims(differential_matrix(P1.D, enumerate_basis(P1.ctx, 0, charge=1))) == {0: 0, 1: 0}

    def test_exact_twist_has_same_dimensions(self):
        t = TwistData(DiffForm.basis(P3.coords, [0, 1, 2]))
        b = enumerate_basis(P3.ctx, 0, poly_degree=1)
        plain = cohomology_dims(differential_matrix(P3.D, b), None)
        twisted = cohomology_dims(differential_matrix(lambda e: D_twisted(P3, t, e), b), None)
        assert plain == twisted

    @pytest.mark.parametrize("w", [0, 1, 2])
    def test_euler_characteristic(self, w):
        b = enumerate_basis(P1.ctx, w, poly_degree=1)
        chi = sum((-1) ** (b.degree_of(i) % 2) for i in range(len(b)))
        assert euler_characteristic(cohomology_dims(differential_matrix(P1.D, b))) == chi


class TestCharacters:
    def test_fermion_examples(self):
        assert fermion_character(0) == CharacterSeries(0, {(0, 0): 1})
        f = fermion_character(2)
        assert f.q_coefficient(1) == {-1: 1, 1: 1}
        assert f.q_coefficient(2) == {-1: 1, 0: 1, 1: 1}

    @given(st.integers(0, 8))
    def test_fermion_symmetry(self, N):
        f = fermion_character(N)
        assert all(f[(n, -d)] == v for (n, d), v in f.coeffs.items())
        assert all(v > 0 for v in f.coeffs.values())

    def test_predicted_examples(self):
        assert predicted_quotient_character({0: 1, 1: 1}, 1).q_coefficient(1) == {-1: 1, 0: 1, 1: 1, 2: 1}
        assert predicted_quotient_character({0: 1}, 3) == fermion_character(3)
        torus = predicted_quotient_character({0: 1, 1: 3, 2: 3, 3: 1}, 2)
        assert torus.q_coefficient(0) == {0: 1, 1: 3, 2: 3, 3: 1}

    def test_base_point_pair(self):
        got = character_of_computed_cohomology(POINT.ctx, POINT.D, 4)
        assert got == predicted_quotient_character({0: 1, 1: 1}, 4)
        assert algebra_character(POINT.ctx, 4) == got  # D = 0 over a point

    def test_point_admits_no_curvature(self):
        with pytest.raises(ValueError):
            c = DualPairSetup.point().coords
            ReductionData(DiffForm.basis(c, [0]), DiffForm.zero(c), DiffForm.zero(c))

    def test_grid_layout(self):
        rows = predicted_quotient_character({0: 1, 1: 1}, 1).grid().splitlines()
        assert rows[1].split() == ["0", "0", "1", "1", "0"]
        assert rows[2].split() == ["1", "1", "1", "1", "1"]
