import numpy as np
from numpy.testing import assert_allclose
from pytest import fixture, mark, raises

from app.services.densemat import (
    expectation,
    identity,
    local,
    min_eigenvalue,
    partial_transpose,
    product_expectation,
)
from app.services.pptstates import random_ppt_state
from app.services.skewcanon import SkewMatrix, build_J, random_orthogonal
from app.services.witnesses import (
    Witness,
    canonical_map,
    canonical_witness,
    canonical_witness_unit,
    conjugated_witness,
    deficit_split,
    detection_bound,
    embedded_witness,
    expanded_canonical_witness,
    extended_split,
    extended_witness,
    jamiolkowski_apply,
    npt_floor,
    opc_witness,
    partition_denominator,
    partition_witness,
    partition_witness_blocks,
    reduction_witness,
    split_canonical,
    split_min_eigenvalues,
    validate_witness,
    witness_from_U,
)
from app.utils.errors import NotAStateError, NotHermitianError, ParameterError
from tests.conftest import random_unit


@fixture
def wc42():
    return canonical_witness(4, [1.0, 1.0])


def product_minimum(w, rng, samples=300, real=False):
    d1, d2 = w.dims
    return min(
        product_expectation(w.op, random_unit(d1, rng, real), random_unit(d2, rng, real))
        for _ in range(samples)
    )


class TestCanonical:
    @mark.parametrize("d, lambdas", [(4, [1.0, 1.0]), (5, [1.0, 0.3]), (6, [0.7, 0.7, 0.2]), (3, [])])
    def test_two_construction_paths_agree(self, d, lambdas):
        assert canonical_witness(d, lambdas).op.allclose(expanded_canonical_witness(d, lambdas).op)

    def test_trace(self, wc42):
        # d^2 - d - 2 sum(lambda^2)
        assert_allclose(wc42.op.trace(), 8.0)
        assert_allclose(canonical_witness(6, [0.5]).op.trace(), 36 - 6 - 0.5)

    def test_product_expectation_formula(self, rng):
        lambdas = [0.9, 0.4]
        w = canonical_witness(5, lambdas)
        j = build_J(5, lambdas).entries
        for _ in range(10):
            eta, zeta = random_unit(5, rng), random_unit(5, rng)
            expected = 1 - abs(np.vdot(zeta, eta.conj())) ** 2 - abs(np.vdot(zeta, j @ eta)) ** 2
            assert_allclose(product_expectation(w.op, eta, zeta), expected, atol=1e-12)

    def test_nonnegative_on_products(self, rng, wc42):
        assert product_minimum(wc42, rng) >= -1e-12

    def test_not_positive(self, wc42):
        assert min_eigenvalue(wc42.op) < -0.5

    def test_provenance(self, wc42):
        assert wc42.kind == "canonical"
        assert wc42.provenance["n"] == 2
        assert not wc42.certified
        validate_witness(wc42)

    @mark.parametrize("lambdas", [[1.5, 1.0], [-0.1], [1.0, 1.0, 1.0]])
    def test_rejects_bad_lambdas(self, lambdas):
        with raises(ParameterError):
            canonical_witness(4, lambdas)

    def test_unit_rejects_oversized_n(self):
        with raises(ParameterError):
            canonical_witness_unit(4, 3)

    def test_reduction_witness(self):
        w = reduction_witness(3)
        assert_allclose(w.op.matrix, np.eye(9) - 3 * np.outer(np.eye(3).ravel(), np.eye(3).ravel()) / 3)


class TestFromU:
    def test_matches_canonical_for_block_generator(self):
        u = build_J(4, [1.0, 0.5])
        w = witness_from_U(u)
        assert w.op.allclose(canonical_witness(4, [1.0, 0.5]).op)
        assert w.kind == "from-U"
        assert_allclose(w.provenance["lambdas"], [1.0, 0.5], atol=1e-12)

    def test_rejects_large_invariant_factor(self):
        with raises(ParameterError):
            witness_from_U(SkewMatrix(2, np.array([[0.0, 2.0], [-2.0, 0.0]])))


class TestSplits:
    @mark.parametrize("d, n", [(4, 2), (5, 2), (6, 2), (6, 1)])
    def test_canonical_split(self, d, n):
        split = split_canonical(d, n)
        assert split.reconstruct().allclose(canonical_witness_unit(d, n).op)
        low1, low2 = split_min_eigenvalues(split)
        assert low1 >= -1e-10 and low2 >= -1e-10

    def test_opc_is_the_corner(self):
        w = opc_witness(6, 2)
        assert w.kind == "opc"
        assert w.op.allclose(split_canonical(6, 2).w_opc)

    def test_deficit_split(self):
        lambdas = [0.5, 0.3]
        o_ta, rest = deficit_split(4, lambdas)
        assert (o_ta + rest).allclose(canonical_witness(4, lambdas).op)
        assert min_eigenvalue(partial_transpose(o_ta)) >= -1e-12

    def test_uniform_factors_dominate_unit_witness(self, rng):
        w = canonical_witness(4, [0.6, 0.6]).op
        w1 = canonical_witness(4, [1.0, 1.0]).op
        for _ in range(500):
            rho = random_ppt_state(4, 4, rng)
            assert expectation(w, rho) >= expectation(w1, rho) - 1e-10

    def test_canonical_dominates_its_optimal_core(self, rng):
        wc = canonical_witness_unit(6, 2).op
        core = opc_witness(6, 2).op
        for _ in range(500):
            rho = random_ppt_state(6, 6, rng)
            assert expectation(wc, rho) >= expectation(core, rho) - 1e-10

    def test_extended_split(self):
        split = extended_split(4)
        total = split.w.op + partial_transpose(split.d_one) + partial_transpose(split.d_two)
        assert total.allclose(canonical_witness_unit(4, 2).op, atol=1e-12)
        assert min_eigenvalue(split.d_one) >= -1e-12


class TestConjugated:
    def test_modes_are_related_by_local_rotation(self, rng):
        q = random_orthogonal(4, rng)
        wj = conjugated_witness(4, [1.0, 0.6], q, "J")
        wpsi = conjugated_witness(4, [1.0, 0.6], q, "psi")
        assert_allclose(wpsi.op.matrix, local(q.T, 4) @ wj.op.matrix @ local(q, 4), atol=1e-12)

    def test_products_stay_nonnegative(self, rng):
        q = random_orthogonal(4, rng)
        assert product_minimum(conjugated_witness(4, [1.0, 1.0], q, "psi"), rng) >= -1e-12

    def test_rejects_non_orthogonal(self):
        with raises(ParameterError):
            conjugated_witness(4, [1.0], 2 * np.eye(4))

    def test_rejects_unknown_mode(self):
        with raises(ParameterError):
            conjugated_witness(4, [1.0], np.eye(4), "X")


class TestPartitionAndEmbedding:
    @mark.parametrize("d, mu", [(4, (1, 1)), (6, (2, 1)), (6, (3,))])
    def test_two_construction_paths_agree(self, d, mu):
        assert partition_witness(d, mu).op.allclose(partition_witness_blocks(d, mu).op)

    def test_single_part_is_canonical(self):
        assert partition_witness(6, (3,)).op.allclose(canonical_witness_unit(6, 3).op)

    def test_partition_must_cover_half_dimension(self):
        with raises(ParameterError):
            partition_witness(8, (2, 1))

    def test_embedded(self, rng):
        w = embedded_witness(4, 5, (0, 1, 2, 4), [1.0, 1.0])
        assert w.dims == (4, 5)
        assert w.provenance["combo"] == [0, 1, 2, 4]
        assert product_minimum(w, rng) >= -1e-12


class TestExtended:
    def test_real_products_nonnegative(self, rng):
        assert product_minimum(extended_witness(4), rng, real=True) >= -1e-12

    def test_complex_product_violation(self):
        w = extended_witness(4)
        eta = np.array([1, 0, 1j, 0]) / np.sqrt(2)
        zeta = build_J(4, [1.0, 1.0]).entries @ eta
        assert_allclose(product_expectation(w.op, eta, zeta), -1.0, atol=1e-12)

    def test_provenance(self):
        assert extended_witness(6).provenance == {"kind": "extended", "d": 6, "n": 1, "m": 2}


class TestMap:
    def test_choi_inverse_matches_closed_form(self, rng):
        w = canonical_witness(4, [1.0, 0.5])
        x = random_unit(4, rng)
        rho = np.outer(x, x.conj())
        assert_allclose(jamiolkowski_apply(w, rho), canonical_map(4, [1.0, 0.5], rho), atol=1e-12)

    def test_rank_zero_is_the_reduction_map(self, rng):
        x = random_unit(3, rng)
        rho = np.outer(x, x.conj())
        assert_allclose(canonical_map(3, [], rho), np.eye(3) - rho, atol=1e-12)
        assert_allclose(jamiolkowski_apply(reduction_witness(3), rho), np.eye(3) - rho, atol=1e-12)

    def test_basis_state_image(self, wc42):
        rho = np.zeros((4, 4))
        rho[0, 0] = 1.0
        assert_allclose(jamiolkowski_apply(wc42, rho), np.diag([0.0, 0.0, 1.0, 1.0]), atol=1e-12)

    def test_input_checks(self, wc42):
        with raises(NotAStateError):
            jamiolkowski_apply(wc42, np.eye(4))
        with raises(NotHermitianError):
            jamiolkowski_apply(wc42, np.array([[0.5, 1.0, 0, 0], [0, 0.5, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]]))


class TestBounds:
    @mark.parametrize("d, n, bound", [(4, 2, -0.2), (6, 3, -1 / 7), (6, 2, -0.1), (5, 1, 0.0)])
    def test_canonical(self, d, n, bound):
        assert_allclose(detection_bound(canonical_witness_unit(d, n)), bound)

    def test_canonical_npt_floor(self, wc42):
        assert_allclose(npt_floor(wc42), -1.0)

    @mark.parametrize("mu", [(2, 2), (1, 1, 1, 1), (3, 1), (4,)])
    def test_partition_denominator(self, mu):
        assert partition_denominator(8, mu) == 72

    def test_partition(self):
        assert_allclose(detection_bound(partition_witness(8, (2, 2))), -1 / 9)
        assert_allclose(npt_floor(partition_witness(8, (2, 2))), -3.0)

    def test_embedded_uses_small_factor(self):
        assert_allclose(detection_bound(embedded_witness(4, 5, (0, 1, 2, 4), [1.0, 1.0])), -0.2)

    def test_extended(self):
        assert_allclose(detection_bound(extended_witness(8)), -0.1)
        assert detection_bound(extended_witness(6)) is None
        assert npt_floor(extended_witness(4)) is None

    def test_custom_witness_has_no_bound(self):
        assert detection_bound(Witness(identity(2, 2))) is None
