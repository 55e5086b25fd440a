import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st

from core.errors import ConfigurationError, RoleError
from core.matrices import HermitianMatrix, SkewHermitianMatrix, random_hermitian_array
from expectations.chains import ExpectationChain, chain_compose, composition_residual
from expectations.conditional import (
    ConditionalExpectation,
    pinch,
    sigma_invariant_subgroup,
    split_spaces,
    verify_expectation,
)
from expectations.partitions import BlockPartition, default_partitions


def test_partition_parse_and_text():
    partition = BlockPartition.parse("2,1", 3)
    assert partition.blocks == (2, 1)
    assert not partition.corner_flag
    assert partition.to_text() == "2,1"

    corner = BlockPartition.parse("1,+", 3)
    assert corner.corner_flag
    assert corner.remainder == 2
    assert corner.to_text() == "1,+"
    assert corner.intervals == [(2, 3)]


@pytest.mark.parametrize("text", ["2,x", "1,1", "2,2,+", "0,3", "4"])
def test_partition_parse_rejects(text):
    with pytest.raises(ConfigurationError):
        BlockPartition.parse(text, 3)


def test_partition_document_round_trip():
    corner = BlockPartition(4, (1, 1))
    assert BlockPartition.from_document(corner.to_document()) == corner
    with pytest.raises(ConfigurationError):
        BlockPartition.from_document({"dim": 4, "blocks": [1, 1], "corner": False})


def test_partition_refinement():
    assert BlockPartition.diagonal(4).refines(BlockPartition(4, (2, 2)))
    assert not BlockPartition(4, (1, 3)).refines(BlockPartition(4, (2, 2)))
    assert BlockPartition(4, (2, 2)).extended(1) == BlockPartition(5, (2, 2, 1))


def test_default_partitions():
    assert default_partitions(1) == [BlockPartition.diagonal(1)]
    assert [p.blocks for p in default_partitions(2)] == [(1, 1), (1,)]
    assert [p.blocks for p in default_partitions(4)] == [(1, 1, 1, 1), (2, 2), (3,)]


def test_pinch_keeps_diagonal_matrices():
    E = ConditionalExpectation(BlockPartition.diagonal(3))
    X = np.diag([1.0, -2.0, 5.0])
    assert np.array_equal(pinch(E, X).data, X)


def test_pinch_kills_off_diagonal():
    E = ConditionalExpectation(BlockPartition(2, (1, 1)))
    assert np.array_equal(pinch(E, np.array([[0.0, 1.0], [1.0, 0.0]])).data, np.zeros((2, 2)))


def test_corner_pinch_keeps_only_the_block(rng):
    E = ConditionalExpectation(BlockPartition(3, (2,)))
    X = rng.standard_normal((3, 3))
    expected = np.zeros((3, 3))
    expected[1:, 1:] = X[1:, 1:]
    assert np.array_equal(E(X), expected)
    assert E.kind == "corner"
    assert np.allclose(E(np.eye(3)), np.diag([0.0, 1.0, 1.0]))


def test_pinch_keeps_roles(halves, hermitian4):
    assert isinstance(pinch(halves, HermitianMatrix(hermitian4)), HermitianMatrix)
    assert isinstance(pinch(halves, SkewHermitianMatrix(1j * hermitian4)), SkewHermitianMatrix)


def test_expectation_rejects_wrong_dim(halves):
    with pytest.raises(RoleError):
        halves(np.eye(3))


def test_split_spaces_examples(halves, hermitian4, rng):
    inside = halves.random_hermitian(rng)
    Y, Z = split_spaces(halves, inside)
    assert np.allclose(Y.data, inside) and np.allclose(Z.data, 0)

    kernel = halves.random_kernel_hermitian(rng)
    Y, Z = split_spaces(halves, kernel)
    assert np.allclose(Y.data, 0) and np.allclose(Z.data, kernel)

    Y, Z = split_spaces(halves, hermitian4)
    mask = BlockPartition(4, (2, 2)).mask
    assert np.array_equal(Y.data, np.where(mask, hermitian4, 0))
    assert np.array_equal(Z.data, np.where(mask, 0, hermitian4))


def test_verify_expectation_diagonal(diagonal3):
    report = verify_expectation(diagonal3, 100, 0)
    assert report.all_passed
    assert max(report.residuals.values()) <= 1e-12
    assert "trace" in report.residuals


def test_verify_expectation_corner_skips_trace():
    report = verify_expectation(ConditionalExpectation(BlockPartition(2, (1,))), 20, 1)
    assert report.not_applicable == ["trace"]
    assert "trace" not in report.residuals
    assert report.all_passed


def test_verify_expectation_identity_is_exact():
    E = ConditionalExpectation(BlockPartition.full(3))
    assert E.kind == "identity"
    report = verify_expectation(E, 10, 2)
    assert all(value == 0.0 for value in report.residuals.values())


def test_verify_expectation_needs_samples(diagonal3):
    with pytest.raises(ValueError):
        verify_expectation(diagonal3, 0, 0)


@seed(11)
@settings(max_examples=20, deadline=None)
@given(
    blocks=st.lists(st.integers(min_value=1, max_value=2), min_size=1, max_size=3),
    remainder=st.integers(min_value=0, max_value=2),
    case_seed=st.integers(min_value=0, max_value=2 ** 31 - 1),
)
def test_expectation_axioms_hold_for_any_partition(blocks, remainder, case_seed):
    E = ConditionalExpectation(BlockPartition(sum(blocks) + remainder, tuple(blocks)))
    report = verify_expectation(E, 3, case_seed)
    assert report.all_passed, report.to_document()


def test_group_membership_on_corner(corner3, rng):
    b = corner3.random_group(rng)
    assert corner3.contains_group(b)
    assert np.allclose(b[:2, :2], np.eye(2))
    assert not corner3.contains_group(np.diag([2.0, 1.0, 1.0]))
    assert sigma_invariant_subgroup(corner3, 10, 0) <= 1e-10


def test_random_samplers_land_in_their_spaces(halves, rng):
    assert halves.contains(halves.random_algebra(rng))
    assert halves.contains_group(halves.random_unitary(rng))
    assert halves.kernel_defect(halves.random_kernel_hermitian(rng)) == 0.0


def test_chain_validation_and_levels():
    chain = ExpectationChain.parse("1,1,1,1;2,2", 4)
    assert chain.depth == 3
    assert chain.partition(3) == BlockPartition.full(4)
    assert chain.expectation(2).partition == BlockPartition.diagonal(4)
    assert chain.expectation(3).partition == BlockPartition(4, (2, 2))
    assert chain.to_text() == "1,1,1,1;2,2"
    assert ExpectationChain.from_document(chain.to_document()) == chain
    with pytest.raises(IndexError):
        chain.expectation(1)
    with pytest.raises(ConfigurationError):
        ExpectationChain.parse("1,3;2,2", 4)
    with pytest.raises(ConfigurationError):
        ExpectationChain.parse("", 4)


def test_chain_nesting():
    chain = ExpectationChain.parse("1,1,1,1;2,2", 4)
    assert chain.nesting_residual(5, 0) == 0.0
    assert chain.truncated(2).depth == 2


def test_chain_compose_examples(rng):
    chain = ExpectationChain.parse("1,1,1,1;2,2", 4)
    assert chain_compose(chain, 3, 2).partition == chain.expectation(3).partition
    assert composition_residual(chain, 3, 1, 10, 0) <= 1e-12

    block_diagonal = chain.level_expectation(2).random_algebra(rng)
    assert np.allclose(chain_compose(chain, 3, 2)(block_diagonal), block_diagonal)
    with pytest.raises(IndexError):
        chain_compose(chain, 2, 2)


def test_expectation_is_contractive_in_operator_norm(halves, rng):
    X = random_hermitian_array(rng, 4)
    assert np.linalg.norm(halves(X), 2) <= np.linalg.norm(X, 2) + 1e-12
