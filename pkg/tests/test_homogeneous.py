import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st

from conftest import kernel_hermitian
from core.errors import ConfigurationError, GapError, RoleError
from core.matrices import FROBENIUS, expm_h, haar_unitary_array, random_invertible_array
from expectations.conditional import ConditionalExpectation
from expectations.partitions import BlockPartition
from homogeneous.cosets import (
    BundlePoint,
    GCoset,
    TangentVector,
    UCoset,
    bundle_equal,
    bundle_to_coset,
    compose,
    coset_reduce,
    from_tangent,
    is_sigma_fixed,
    kernel_decomposition,
    project_to_base,
    retract,
    sigma_G,
    tangent_at_base,
    tangent_equal,
    tau_G,
    to_tangent,
)
from homogeneous.functoriality import BlockEmbedding, pushforward_check
from homogeneous.orbits import (
    coadjoint_of,
    coadjoint_setup,
    flag_of,
    grassmannian_of,
    stiefel_of,
)


def random_point(E, rng):
    return BundlePoint.build(haar_unitary_array(rng, E.dim), kernel_hermitian(E, rng), E)


# cosets ----------------------------------------------------------------------

def test_gcoset_equality_is_representative_independent(halves, rng):
    g = random_invertible_array(rng, 4)
    b = halves.random_group(rng)
    assert GCoset(g, halves) == GCoset(g @ b, halves)
    assert GCoset(g, halves) != GCoset(g @ random_invertible_array(rng, 4), halves)


def test_ucoset_equality(halves, rng):
    u = haar_unitary_array(rng, 4)
    assert UCoset(u, halves) == UCoset(u @ halves.random_unitary(rng), halves)
    assert UCoset(u, halves) != UCoset(haar_unitary_array(rng, 4), halves)


def test_cosets_are_unhashable(halves):
    with pytest.raises(TypeError):
        hash(GCoset.identity(halves))


def test_reduce_identity_coset(halves):
    point = coset_reduce(GCoset.identity(halves))
    assert np.allclose(point.u.data, np.eye(4), atol=1e-12)
    assert np.allclose(point.X.data, 0, atol=1e-12)


def test_reduce_constructed_coset(halves, rng):
    u0 = haar_unitary_array(rng, 4)
    X0 = kernel_hermitian(halves, rng)
    point = coset_reduce(GCoset(u0 @ expm_h(X0), halves))
    assert bundle_equal(point, BundlePoint.build(u0, X0, halves))
    assert np.allclose(point.X.data, X0, atol=1e-8)


def test_reduce_is_representative_independent(halves, rng):
    g = random_invertible_array(rng, 4)
    b = halves.random_group(rng)
    assert bundle_equal(coset_reduce(GCoset(g, halves)), coset_reduce(GCoset(g @ b, halves)))


@seed(17)
@settings(max_examples=15, deadline=None)
@given(case_seed=st.integers(min_value=0, max_value=2 ** 31 - 1))
def test_compose_and_reduce_are_inverse(case_seed):
    rng = np.random.default_rng(case_seed)
    E = ConditionalExpectation(BlockPartition(4, (1, 2)))
    point = random_point(E, rng)
    assert bundle_equal(coset_reduce(compose(point)), point)
    s = GCoset(random_invertible_array(rng, 4), E)
    assert bundle_to_coset(coset_reduce(s)) == s


def test_bundle_equivalence(halves, rng):
    point = random_point(halves, rng)
    assert bundle_equal(point, point)
    assert bundle_equal(point, point.act(halves.random_unitary(rng)))
    assert not bundle_equal(point, tau_G(point))


def test_bundle_rejects_fiber_outside_kernel(halves, hermitian4):
    with pytest.raises(RoleError):
        BundlePoint.build(np.eye(4), hermitian4, halves)


def test_projection_to_base(halves, rng):
    X = kernel_hermitian(halves, rng)
    assert project_to_base(BundlePoint.build(np.eye(4), X, halves)) == UCoset(np.eye(4), halves)

    point = random_point(halves, rng)
    v = halves.random_unitary(rng)
    assert project_to_base(point.act(v)) == project_to_base(point)

    w = haar_unitary_array(rng, 4)
    assert project_to_base(point.translate(w)) == project_to_base(point).translate(w)


def test_sigma_fixes_exactly_the_unitary_cosets(halves, rng):
    assert is_sigma_fixed(GCoset(haar_unitary_array(rng, 4), halves))
    assert is_sigma_fixed(UCoset(haar_unitary_array(rng, 4), halves).as_gcoset())
    assert not is_sigma_fixed(GCoset(expm_h(kernel_hermitian(halves, rng)), halves))


def test_sigma_diagram_commutes(halves, rng):
    s = GCoset(random_invertible_array(rng, 4), halves)
    assert bundle_equal(coset_reduce(sigma_G(s)), tau_G(coset_reduce(s)))


def test_retraction(halves, rng):
    point = random_point(halves, rng)
    assert bundle_equal(retract(point, 1.0), point)

    collapsed = retract(point, 0.0)
    assert np.allclose(collapsed.X.data, 0)
    assert bundle_equal(tau_G(collapsed), collapsed)

    v = halves.random_unitary(rng)
    assert bundle_equal(retract(point.act(v), 0.5), retract(point, 0.5))
    with pytest.raises(ValueError):
        retract(point, 1.5)


def test_tangent_of_identity_is_zero(halves):
    tangent = to_tangent(GCoset.identity(halves))
    assert tangent.is_zero()
    assert tangent.base == UCoset(np.eye(4), halves)


@seed(23)
@settings(max_examples=20, deadline=None)
@given(case_seed=st.integers(min_value=0, max_value=2 ** 31 - 1))
def test_tangent_round_trip(case_seed):
    rng = np.random.default_rng(case_seed)
    E = ConditionalExpectation(BlockPartition(4, (2, 2)))
    s = GCoset(random_invertible_array(rng, 4), E)
    assert from_tangent(to_tangent(s)) == s


def test_tangent_of_sigma_is_negated(halves, rng):
    s = GCoset(random_invertible_array(rng, 4), halves)
    assert tangent_equal(to_tangent(sigma_G(s)), to_tangent(s).negated())


def test_tangent_vectors(halves, rng):
    u = haar_unitary_array(rng, 4)
    W = 1j * kernel_hermitian(halves, rng)
    vector = TangentVector.build(u, W, halves)
    assert tangent_equal(vector, vector.act(halves.random_unitary(rng)))
    assert vector.magnitude(FROBENIUS) == pytest.approx(0.7)
    assert not vector.is_zero()
    with pytest.raises(RoleError):
        TangentVector.build(u, 1j * np.eye(4), halves)


def test_kernel_decomposition(halves, rng):
    skew = 1j * kernel_hermitian(halves, rng)
    hermitian = kernel_hermitian(halves, rng)
    W, X = kernel_decomposition(halves, skew + hermitian)
    assert np.allclose(W.data, skew) and np.allclose(X.data, hermitian)
    assert np.allclose(halves(tangent_at_base(halves, rng.standard_normal((4, 4)))), 0)


# functoriality -----------------------------------------------------------------

def test_trivial_embedding_commutes(diagonal3, rng):
    s = GCoset(random_invertible_array(rng, 3), diagonal3)
    report = pushforward_check(BlockEmbedding(diagonal3, 0), s)
    assert report.passed
    assert report.target_dim == 3


def test_embedding_two_into_three(rng):
    E = ConditionalExpectation(BlockPartition(2, (1, 1)))
    s = GCoset(random_invertible_array(rng, 2), E)
    report = pushforward_check(BlockEmbedding(E, 1), s, samples=5, seed=1)
    assert report.passed, report.to_document()


def test_embedding_of_identity_coset_is_zero(corner3):
    embedding = BlockEmbedding(corner3, 2)
    image = to_tangent(embedding.coset(GCoset.identity(corner3)))
    assert image.is_zero()
    assert embedding.tangent(to_tangent(GCoset.identity(corner3))).is_zero()


def test_embedding_rejects_incompatible_partitions(rng):
    E = ConditionalExpectation(BlockPartition(2, (1, 1)))
    with pytest.raises(ConfigurationError):
        BlockEmbedding(E, 1, target=BlockPartition(3, (1, 2)))
    with pytest.raises(ConfigurationError):
        BlockEmbedding(E, 1, target=BlockPartition(4, (1, 1, 2)))
    other = ConditionalExpectation(BlockPartition(2, (2,)))
    with pytest.raises(ConfigurationError):
        pushforward_check(BlockEmbedding(E, 1), GCoset(np.eye(2), other))


# orbits --------------------------------------------------------------------------

def test_flag_base_point():
    partition = BlockPartition(3, (1, 2))
    flag = flag_of(np.eye(3), partition)
    for projection, expected in zip(flag.projections, partition.block_projections()):
        assert np.allclose(projection, expected)
    assert flag.defect() <= 1e-10


def test_flag_is_constant_on_cosets(halves, rng):
    u = haar_unitary_array(rng, 4)
    v = halves.random_unitary(rng)
    assert flag_of(u, halves.partition).distance(flag_of(u @ v, halves.partition)) <= 1e-10


def test_flag_of_rotation():
    angle = np.pi / 4
    rotation = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    partition = BlockPartition.diagonal(2)
    flag = flag_of(rotation, partition)
    assert np.allclose(flag.projections[0], 0.5 * np.array([[1.0, 1.0], [1.0, 1.0]]))
    assert np.allclose(flag.projections[1], 0.5 * np.array([[1.0, -1.0], [-1.0, 1.0]]))
    assert not flag.same_as(flag_of(np.eye(2), partition))


def test_flag_needs_total_partition(corner3):
    with pytest.raises(ConfigurationError):
        flag_of(np.eye(3), corner3.partition)


def test_grassmannian(rng):
    u = haar_unitary_array(rng, 4)
    projection = grassmannian_of(u, 2, 4)
    assert np.allclose(projection @ projection, projection)
    assert np.trace(projection).real == pytest.approx(2.0)
    with pytest.raises(ConfigurationError):
        grassmannian_of(u, 4, 4)


def test_stiefel_points(rng):
    partition = BlockPartition(2, (1,))
    assert np.allclose(stiefel_of(np.eye(2), partition).matrix, partition.remainder_projection())

    u = haar_unitary_array(rng, 2)
    w = np.exp(1j * 0.3)
    point = stiefel_of(u, partition)
    assert point.same_as(stiefel_of(u @ np.diag([1.0, w]), partition))
    assert np.allclose(point.sphere_vector(), u[:, 0])
    assert np.linalg.norm(point.sphere_vector()) == pytest.approx(1.0)

    with pytest.raises(ConfigurationError):
        stiefel_of(u, BlockPartition.diagonal(2))


def test_stiefel_rejects_several_blocks(rng):
    u = haar_unitary_array(rng, 4)
    with pytest.raises(ConfigurationError, match="exactly one block"):
        stiefel_of(u, BlockPartition(4, (1, 1)))


def test_stiefel_point_equality_matches_coset_equality(rng):
    E = ConditionalExpectation(BlockPartition(4, (2,)))
    u = haar_unitary_array(rng, 4)
    inside = u @ E.random_unitary(rng)
    outside = haar_unitary_array(rng, 4)
    point = stiefel_of(u, E.partition)

    assert point.same_as(stiefel_of(inside, E.partition))
    assert UCoset(u, E).same_as(UCoset(inside, E))
    assert not point.same_as(stiefel_of(outside, E.partition))
    assert not UCoset(u, E).same_as(UCoset(outside, E))


def test_stiefel_frame_rank(corner3, rng):
    point = stiefel_of(haar_unitary_array(rng, 3), corner3.partition)
    assert point.rank == 2
    assert np.allclose(point.frame.conj().T @ point.frame, np.eye(2))


def test_coadjoint_identity():
    X0 = np.diag([1j, -1j])
    model = coadjoint_setup(X0)
    assert np.allclose(coadjoint_of(model, np.eye(2)).point, X0)
    assert model.tangent(np.eye(2)).is_zero()
    assert is_sigma_fixed(model.coset(np.eye(2)))


def test_coadjoint_isotropy(rng):
    X0 = np.diag([2j, 2j, -1j])
    model = coadjoint_setup(X0)
    assert sorted(model.partition.blocks) == [1, 2]
    inside = model.from_frame(model.E.random_group(rng))
    assert model.fixes_base(inside)
    assert model.in_isotropy_group(inside)
    outside = random_invertible_array(rng, 3)
    assert not model.fixes_base(outside)


def test_coadjoint_eigenprojections():
    X0 = np.diag([2j, 2j, -1j])
    model = coadjoint_setup(X0)
    projections = model.eigenprojections()
    assert [int(round(np.trace(p).real)) for p in projections] == list(model.partition.blocks)
    assert np.allclose(sum(projections), np.eye(3), atol=1e-12)
    for p in projections:
        assert np.allclose(p @ p, p, atol=1e-12)
    rebuilt = sum(1j * value * p for value, p in zip(model.eigenvalues, projections))
    assert np.allclose(rebuilt, X0, atol=1e-12)


def test_coadjoint_round_trip_through_coset(rng):
    model = coadjoint_setup(np.diag([1j, -1j]))
    g = random_invertible_array(rng, 2)
    point = coadjoint_of(model, g).point
    assert np.allclose(model.point_of_coset(model.coset(g)), point, atol=1e-8)
    assert np.allclose(model.point_of_coset(model.coset(g @ model.from_frame(model.E.random_group(rng)))),
                       point, atol=1e-8)


def test_coadjoint_gap():
    with pytest.raises(GapError):
        coadjoint_setup(np.diag([1j, 1j * (1 + 1e-8)]))
    with pytest.raises(RoleError):
        coadjoint_setup(np.diag([1.0, -1.0]))
