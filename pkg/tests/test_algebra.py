import numpy as np
import pytest
from hypothesis import given, strategies as st

from cpmodules.algebra import (
    BlockAlgebra,
    ElementMatrix,
    is_positive,
    positive_decomposition,
    reconstruct,
    seminorm,
    sqrt_psd,
)
from cpmodules.exceptions import DimensionMismatch, NotHermitianError, NotPositiveError

M2 = BlockAlgebra((2,))
seeds = st.integers(0, 2**32 - 1)


def _algebra(rng, max_blocks=2, max_dim=3):
    return BlockAlgebra(tuple(int(rng.integers(1, max_dim + 1)) for _ in range(int(rng.integers(1, max_blocks + 1)))))


def _random_psd_matrix(rng, A, n, rank):
    X = [[A.random(rng) for _ in range(n)] for _ in range(rank)]
    total = ElementMatrix.gram(X[0])
    for row in X[1:]:
        total = total + ElementMatrix.gram(row)
    return total


def test_basis_and_layout():
    A = BlockAlgebra((2, 1))
    assert A.dim == 5
    assert A.basis_labels[:4] == ((0, 0, 0), (0, 0, 1), (0, 1, 0), (0, 1, 1))
    e = A.matrix_unit(0, 0, 1)
    assert np.allclose(e.blocks[0], [[0, 1], [0, 0]]) and np.allclose(e.blocks[1], 0)
    a = A.random(np.random.default_rng(0))
    assert A.from_vec(a.vec()).distance(a) == 0.0


def test_bad_algebra():
    with pytest.raises(DimensionMismatch):
        BlockAlgebra(())
    with pytest.raises(DimensionMismatch):
        BlockAlgebra((2, 0))


@pytest.mark.parametrize("j", [0, 1])
def test_seminorm_trivial(j):
    A = BlockAlgebra((2, 3))
    assert seminorm(A.unit(), j) == pytest.approx(1.0)
    assert seminorm(A.zero(), j) == 0.0


def test_seminorm_hand_value():
    assert seminorm(M2.element([np.array([[0, 2], [0, 0]])]), 0) == pytest.approx(2.0)
    with pytest.raises(IndexError):
        seminorm(M2.unit(), 1)


@given(seeds)
def test_cstar_identity(seed):
    rng = np.random.default_rng(seed)
    A = _algebra(rng)
    a = A.random(rng)
    for j in range(A.num_blocks):
        p = seminorm(a, j)
        assert abs(seminorm(a @ a.adjoint(), j) - p**2) <= 1e-10 * (1 + p**2)


def test_positivity_examples():
    assert is_positive(M2.unit())
    assert not is_positive(M2.element([np.diag([1.0, -1.0])]))
    b = M2.element([np.array([[2.0, 1.0], [1.0, 1.0]])])
    assert is_positive(b)
    # hand oracle: eigenvalues (3 +- sqrt 5) / 2
    assert np.allclose(np.linalg.eigvalsh(b.blocks[0]), [(3 - 5**0.5) / 2, (3 + 5**0.5) / 2])
    with pytest.raises(NotHermitianError):
        is_positive(M2.element([np.array([[0.0, 1.0], [0.0, 0.0]])]))


def test_b_star_b_positive_many():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        A = _algebra(rng)
        b = A.random(rng)
        assert is_positive(b.adjoint() @ b)


def test_sqrt_examples(rng):
    assert sqrt_psd(M2.unit()).distance(M2.unit()) < 1e-15
    s = sqrt_psd(M2.element([np.diag([4.0, 9.0])]))
    assert np.allclose(s.blocks[0], np.diag([2.0, 3.0]), atol=1e-12)
    A = BlockAlgebra((3, 2))
    b = A.random(rng)
    P = b.adjoint() @ b
    S = sqrt_psd(P)
    assert (S @ S).distance(P) <= 1e-10
    with pytest.raises(NotPositiveError):
        sqrt_psd(M2.element([np.diag([1.0, -1.0])]))


@given(st.lists(st.floats(0, 100), min_size=1, max_size=4))
def test_sqrt_diagonal_exact(d):
    A = BlockAlgebra((len(d),))
    a = A.element([np.diag(d)])
    s = sqrt_psd(a)
    assert np.max(np.abs(s.blocks[0] @ s.blocks[0] - np.diag(d))) <= 1e-12 * (1 + max(d))


def test_decomposition_identity():
    C = BlockAlgebra((1,))
    P = ElementMatrix.from_entries([[C.unit(), C.zero()], [C.zero(), C.unit()]])
    tuples = positive_decomposition(P)
    assert len(tuples) == 2
    vals = sorted(tuple(abs(a.blocks[0][0, 0]) for a in t) for t in tuples)
    assert np.allclose(vals, [(0, 1), (1, 0)])
    assert reconstruct(tuples, C, 2).distance(P) == 0.0


def test_decomposition_single_tuple(rng):
    A = BlockAlgebra((2,))
    # rank one in every block: a_i = v w_i^* so [a_i^* a_l] has rank one
    v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    tup = tuple(A.element([np.outer(v, rng.standard_normal(2)).astype(complex)]) for _ in range(2))
    P = ElementMatrix.gram(tup)
    tuples = positive_decomposition(P)
    assert len(tuples) == 1
    assert reconstruct(tuples, A, 2).distance(P) <= 1e-10


def test_decomposition_two_block_3x3(rng):
    A = BlockAlgebra((2, 1))
    P = _random_psd_matrix(rng, A, 3, 3)
    assert reconstruct(positive_decomposition(P), A, 3).distance(P) <= 1e-10


@given(seeds)
def test_decomposition_property(seed):
    rng = np.random.default_rng(seed)
    A = _algebra(rng)
    n = int(rng.integers(1, 5))
    P = _random_psd_matrix(rng, A, n, int(rng.integers(1, n + 1)))
    tuples = positive_decomposition(P)
    assert len(tuples) <= n
    assert reconstruct(tuples, A, n).distance(P) <= 1e-10


def test_decomposition_rejects_non_positive():
    C = BlockAlgebra((1,))
    P = ElementMatrix.from_entries([[C.zero(), C.unit()], [C.unit(), C.zero()]])
    with pytest.raises(NotPositiveError):
        positive_decomposition(P)


def test_element_matrix_flattening():
    A = BlockAlgebra((2,))
    a, b = A.matrix_unit(0, 0, 1), A.unit()
    P = ElementMatrix.from_entries([[a, b], [b, a]])
    assert P.entry(0, 1).distance(b) == 0.0
    assert np.allclose(P.flat[0][:2, :2], a.blocks[0])
