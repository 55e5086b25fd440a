import os
import sys

import numpy as np
import pytest

# Add the parent directory to sys.path
current_dir = os.path.dirname(os.path.abspath(__file__))
parent_dir = os.path.dirname(current_dir)
if parent_dir not in sys.path:
    sys.path.append(parent_dir)

from core.matrices import DEFAULT_TOLERANCES, random_hermitian_array, random_invertible_array  # noqa: E402
from expectations.conditional import ConditionalExpectation  # noqa: E402
from expectations.partitions import BlockPartition  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


@pytest.fixture
def tolerances():
    return DEFAULT_TOLERANCES


@pytest.fixture
def halves():
    return ConditionalExpectation(BlockPartition(4, (2, 2)))


@pytest.fixture
def diagonal3():
    return ConditionalExpectation(BlockPartition.diagonal(3))


@pytest.fixture
def corner3():
    """Remainder of size 2 in the leading coordinates, one block of size 1"""
    return ConditionalExpectation(BlockPartition(3, (1,)))


@pytest.fixture
def invertible4(rng):
    return random_invertible_array(rng, 4)


@pytest.fixture
def hermitian4(rng):
    return random_hermitian_array(rng, 4)


def kernel_hermitian(E, rng, scale=0.7):
    """Random element of Ker E among the Hermitian matrices, scaled in Frobenius norm"""
    X = E.random_kernel_hermitian(rng)
    return scale * X / np.linalg.norm(X, "fro")
