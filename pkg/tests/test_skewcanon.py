import numpy as np
from hypothesis import given
from hypothesis import settings as hsettings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from pytest import raises

from app.services.skewcanon import (
    SkewMatrix,
    build_J,
    build_J_triple,
    canonical_decompose,
    orthogonality_identity_check,
    random_orthogonal,
    random_skew,
    validate_skew,
)
from app.utils.errors import DimensionMismatchError, ParameterError
from tests.conftest import random_unit


@hsettings(max_examples=1000, deadline=None)
@given(d=st.integers(min_value=1, max_value=9), seed=st.integers(min_value=0, max_value=2**32 - 1))
def test_decomposition_reassembles(d, seed):
    u = random_skew(d, np.random.default_rng(seed))
    form = canonical_decompose(u)
    q = form.q
    assert q.shape == (d, d)
    assert_allclose(q.T @ q, np.eye(d), atol=1e-9)
    assert_allclose(form.reassemble(), u.entries, atol=1e-9)
    assert all(x >= 0 for x in form.lambdas)
    assert list(form.lambdas) == sorted(form.lambdas, reverse=True)
    assert form.rank == 2 * len(form.lambdas) <= d


@hsettings(max_examples=30, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1))
def test_conjugated_block_form_is_recovered(seed):
    rng = np.random.default_rng(seed)
    q = random_orthogonal(6, rng)
    lambdas = sorted(rng.uniform(0.1, 1.0, size=3), reverse=True)
    u = SkewMatrix(6, q @ build_J(6, lambdas).entries @ q.T)
    form = canonical_decompose(u)
    assert_allclose(form.lambdas, lambdas, atol=1e-9)
    block = form.q.T @ u.entries @ form.q
    for i in range(3):
        assert_allclose(block[2 * i, 2 * i + 1], lambdas[i], atol=1e-9)


def test_build_J_layout():
    j = build_J(5, [1.0, 0.5]).entries
    expected = np.zeros((5, 5))
    expected[0, 1], expected[1, 0] = 1.0, -1.0
    expected[2, 3], expected[3, 2] = 0.5, -0.5
    assert_allclose(j, expected)


def test_build_J_rejects_too_many_blocks():
    with raises(ParameterError):
        build_J(4, [1.0, 1.0, 1.0])


def test_zero_generator_has_rank_zero():
    form = canonical_decompose(SkewMatrix(4, np.zeros((4, 4))))
    assert form.rank == 0
    assert_allclose(form.q, np.eye(4))


def test_validate_skew():
    with raises(ParameterError):
        validate_skew(np.eye(3))
    with raises(DimensionMismatchError):
        validate_skew(np.zeros((2, 3)))
    m = np.array([[0.0, 2.0], [-2.0, 0.0]])
    assert_allclose(validate_skew(m).entries, m)


def test_upper_triangle_layout():
    u = SkewMatrix.from_upper(3, [1.0, 2.0, 3.0])
    assert_allclose(u.entries, [[0, 1, 2], [-1, 0, 3], [-2, -3, 0]])
    assert u.upper() == [1.0, 2.0, 3.0]
    with raises(DimensionMismatchError):
        SkewMatrix.from_upper(3, [1.0])


def test_orthogonality_identity(rng):
    u = random_skew(7, rng)
    for _ in range(20):
        assert orthogonality_identity_check(u, random_unit(7, rng)) < 1e-12


class TestJTriple:
    def test_needs_four_dimensions(self):
        with raises(ParameterError):
            build_J_triple(3)

    def test_generators_are_orthogonal_on_blocks(self):
        triple = build_J_triple(6)
        assert triple.blocks == 1
        for g in triple.generators():
            m = g.entries
            assert_allclose(m, -m.T)
            assert_allclose((m.T @ m)[:4, :4], np.eye(4))
            assert_allclose(m[4:, :], 0.0)

    def test_first_generator_is_unit_canonical(self):
        assert_allclose(build_J_triple(8).j.entries, build_J(8, [1.0] * 4).entries)


@hsettings(max_examples=200, deadline=None)
@given(blocks=st.integers(min_value=1, max_value=3), seed=st.integers(min_value=0, max_value=2**32 - 1))
def test_J_triple_images_are_orthonormal(blocks, seed):
    d = 4 * blocks
    x = random_unit(d, np.random.default_rng(seed), real=True)
    triple = build_J_triple(d)
    frame = np.column_stack([x] + [g.entries @ x for g in triple.generators()])
    assert_allclose(frame.T @ frame, np.eye(4), atol=1e-10)
