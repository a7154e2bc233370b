import numpy as np
from numpy.testing import assert_allclose
from pytest import mark, raises

from app.services.densemat import (
    BipartiteOperator,
    conjugate_second,
    expectation,
    identity,
    ket_bra,
    local,
    min_eigenvalue,
    partial_transpose,
    product_expectation,
    projector,
    require_state,
    swap,
)
from app.services.witnesses import max_entangled
from app.utils.errors import DimensionMismatchError, NotAStateError, NotHermitianError
from tests.conftest import random_unit


class TestBipartiteOperator:
    def test_shape_is_checked(self):
        with raises(DimensionMismatchError):
            BipartiteOperator(2, 3, np.eye(5))

    def test_matrix_is_read_only(self):
        op = identity(2, 2)
        with raises(ValueError):
            op.matrix[0, 0] = 3.0

    def test_arithmetic(self):
        a = identity(2, 3)
        b = ket_bra(2, 3, (1, 2), (1, 2))
        assert_allclose((a - b).trace(), 5.0)
        assert_allclose((a + b.scaled(2.0)).trace(), 8.0)
        assert (-a).allclose(a.scaled(-1.0))

    def test_mismatched_dims_refuse_to_add(self):
        with raises(DimensionMismatchError):
            identity(2, 3) + identity(3, 2)

    def test_tensor_indexing(self):
        op = ket_bra(2, 3, (1, 2), (0, 1))
        assert op.tensor()[1, 2, 0, 1] == 1.0


class TestPartialTranspose:
    @mark.parametrize("subsystem", ["A", "B"])
    def test_involution(self, rng, subsystem):
        g = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        op = BipartiteOperator(2, 3, g)
        assert partial_transpose(partial_transpose(op, subsystem), subsystem).allclose(op)

    def test_full_transpose_relation(self, rng):
        g = rng.standard_normal((6, 6))
        op = BipartiteOperator(3, 2, g)
        assert_allclose(partial_transpose(op, "A").matrix.T, partial_transpose(op, "B").matrix)

    @mark.parametrize("d", [2, 3, 4])
    def test_maximally_entangled_goes_to_swap(self, d):
        assert_allclose(partial_transpose(max_entangled(d)).matrix, swap(d) / d, atol=1e-14)
        assert_allclose(min_eigenvalue(partial_transpose(max_entangled(d))), -1.0 / d, atol=1e-12)

    def test_unknown_subsystem(self):
        with raises(ValueError):
            partial_transpose(identity(2, 2), "C")


class TestExpectation:
    def test_maximally_mixed(self):
        rho = identity(3, 3).scaled(1 / 9)
        assert_allclose(expectation(identity(3, 3), rho), 1.0)

    def test_non_hermitian_witness(self):
        w = ket_bra(2, 2, (0, 0), (1, 1))
        with raises(NotHermitianError):
            expectation(w, identity(2, 2).scaled(0.25))

    def test_trace_is_checked(self):
        with raises(NotAStateError):
            require_state(identity(2, 2))

    def test_product_expectation_matches_projector(self, rng):
        eta, zeta = random_unit(3, rng), random_unit(2, rng)
        w = BipartiteOperator(3, 2, np.diag(np.arange(6.0)))
        rho = projector(np.kron(eta, zeta), 3, 2)
        assert_allclose(product_expectation(w, eta, zeta), expectation(w, rho), atol=1e-12)


def test_swap_is_an_involution():
    s = swap(3)
    assert_allclose(s @ s, np.eye(9))


def test_local_acts_on_first_factor(rng):
    a = rng.standard_normal((2, 2))
    v, u = random_unit(2, rng, real=True), random_unit(3, rng, real=True)
    assert_allclose(local(a, 3) @ np.kron(v, u), np.kron(a @ v, u))


def test_conjugate_second_changes_dimension():
    v = np.zeros((3, 2))
    v[0, 0] = v[2, 1] = 1.0
    out = conjugate_second(identity(2, 2), v)
    assert out.dims == (2, 3)
    assert_allclose(out.trace(), 4.0)
