import numpy as np
import pytest
from hypothesis import given, strategies as st

from cpmodules.algebra import BlockAlgebra, is_positive
from cpmodules.exceptions import DimensionMismatch
from cpmodules.modules import (
    LeftActionSpec,
    ModuleOperator,
    ModuleShape,
    adjoint,
    inner_product,
    is_partial_isometry,
    kernel_projection,
    operator_norm,
    range_projection,
)

seeds = st.integers(0, 2**32 - 1)


def _shape(rng, left_action=False):
    A = BlockAlgebra(tuple(int(rng.integers(1, 4)) for _ in range(int(rng.integers(1, 3)))))
    if left_action:
        mult = tuple(int(rng.integers(1, 3)) for _ in A.block_dims)
        return ModuleShape(A, tuple(k * n for k, n in zip(mult, A.block_dims)), LeftActionSpec(mult))
    return ModuleShape(A, tuple(int(rng.integers(1, 4)) for _ in A.block_dims))


def _operator(rng, E, F=None):
    F = E if F is None else F
    return ModuleOperator(E, F, tuple(
        rng.standard_normal((mf, me)) + 1j * rng.standard_normal((mf, me)) for me, mf in zip(E.heights, F.heights)
    ))


def test_shape_validation():
    A = BlockAlgebra((2,))
    with pytest.raises(DimensionMismatch):
        ModuleShape(A, (1, 2))
    with pytest.raises(DimensionMismatch):
        ModuleShape(A, (3,), LeftActionSpec((2,)))
    F = ModuleShape(A, (4,), LeftActionSpec((2,)))
    assert F.dim == 8


def test_inner_product_examples():
    A = BlockAlgebra((2,))
    E = ModuleShape(A, (2,))
    I = E.element([np.eye(2)])
    assert inner_product(I, I).distance(A.unit()) == 0.0
    x = E.element([np.array([[1.0, 0.0], [0.0, 0.0]])])
    y = E.element([np.array([[0.0, 0.0], [0.0, 1.0]])])
    assert inner_product(x, y).distance(A.zero()) == 0.0


def test_inner_product_worked_example(pair_5x2):
    Phi = pair_5x2.maps["Phi"]
    E = Phi.domain
    img = Phi(E.element([np.eye(2)]))
    A = E.algebra
    assert inner_product(img, img).distance(A.element([np.diag([0.25, 1.0])])) <= 1e-15


@given(seeds)
def test_right_linearity(seed):
    rng = np.random.default_rng(seed)
    E = _shape(rng)
    x, y, b = E.random(rng), E.random(rng), E.algebra.random(rng)
    assert inner_product(x, y.right_mul(b)).distance(inner_product(x, y) @ b) <= 1e-12 * (1 + 50)


def test_inner_products_positive_many():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        E = _shape(rng)
        x = E.random(rng)
        assert is_positive(inner_product(x, x))


@given(seeds)
def test_fullness_of_block_model(seed):
    rng = np.random.default_rng(seed)
    E = _shape(rng)
    basis = E.basis()
    span = np.array([inner_product(x, y).vec() for x in basis for y in basis])
    assert np.linalg.matrix_rank(span) == sum(n * n for n in E.algebra.block_dims)


@given(seeds)
def test_left_action_homomorphism(seed):
    rng = np.random.default_rng(seed)
    F = _shape(rng, left_action=True)
    B = F.algebra
    b, c = B.random(rng), B.random(rng)
    assert F.tau(b).adjoint().distance(F.tau(b.adjoint())) == 0.0
    assert F.tau(b @ c).distance(F.tau(b) @ F.tau(c)) <= 1e-13
    assert F.tau(B.unit()).distance(F.identity()) == 0.0


def test_adjoint_examples(rng):
    E = ModuleShape(BlockAlgebra((2,)), (2,))
    assert adjoint(E.identity()).distance(E.identity()) == 0.0
    T = ModuleOperator(E, E, (np.array([[0, 1], [0, 0]], dtype=complex),))
    assert np.array_equal(adjoint(T).blocks[0], [[0, 0], [1, 0]])


@given(seeds)
def test_adjoint_pairing(seed):
    rng = np.random.default_rng(seed)
    E, F = _shape(rng), None
    F = ModuleShape(E.algebra, tuple(int(rng.integers(1, 4)) for _ in E.heights))
    T = _operator(rng, E, F)
    x, y = E.random(rng), F.random(rng)
    lhs = inner_product(T @ x, y)
    rhs = inner_product(x, adjoint(T) @ y)
    assert lhs.distance(rhs) <= 1e-12 * (1 + 100 * T.norm())


def test_partial_isometry_examples(pair_4x2):
    V = pair_4x2.operators["V_reference"]
    assert is_partial_isometry(V)
    E = ModuleShape(BlockAlgebra((2,)), (3,))
    assert not is_partial_isometry(2.0 * E.identity())


def test_stored_5x2_intertwiner_is_not_a_partial_isometry(pair_5x2):
    # its second row is sqrt(3) e_5, so V V^* = diag(1, 3, 0, 1, 1)
    V = pair_5x2.operators["V_reference"]
    VVh = (V @ V.adjoint()).blocks[0]
    assert np.allclose(VVh, np.diag([1.0, 3.0, 0.0, 1.0, 1.0]))
    assert operator_norm(V, 0) == pytest.approx(3**0.5)
    assert not is_partial_isometry(V)


def test_kernel_projection_examples():
    E = ModuleShape(BlockAlgebra((2,)), (2,))
    assert kernel_projection(E.zero_operator()).distance(E.identity()) <= 1e-15
    assert kernel_projection(E.identity()).norm() == 0.0
    P = kernel_projection(ModuleOperator(E, E, (np.diag([1.0, 0.0]).astype(complex),)))
    assert np.allclose(P.blocks[0], np.diag([0.0, 1.0]))


@given(seeds)
def test_kernel_projection_properties(seed):
    rng = np.random.default_rng(seed)
    E = _shape(rng)
    # low-rank operator per block
    blocks = []
    for m in E.heights:
        r = int(rng.integers(0, m + 1))
        blocks.append((rng.standard_normal((m, r)) @ rng.standard_normal((r, m))).astype(complex))
    T = ModuleOperator(E, E, tuple(blocks))
    P = kernel_projection(T)
    assert (P @ P - P).norm() <= 1e-10
    assert (P - P.adjoint()).norm() <= 1e-12
    assert (T @ P).norm() <= 1e-9 * (1 + T.norm())
    # the range projection of T^* is the complement of ker T
    assert (range_projection(T.adjoint()) + P).distance(E.identity()) <= 1e-9


def test_operator_norm_examples():
    E = ModuleShape(BlockAlgebra((2, 1)), (2, 3))
    assert operator_norm(E.identity(), 0) == pytest.approx(1.0)
    assert operator_norm(E.zero_operator(), 1) == 0.0
    with pytest.raises(IndexError):
        operator_norm(E.identity(), 2)


def test_operator_composition_checks_shapes(rng):
    E = ModuleShape(BlockAlgebra((2,)), (2,))
    F = ModuleShape(BlockAlgebra((2,)), (3,))
    T = _operator(rng, E, F)
    with pytest.raises(DimensionMismatch):
        T @ T
    assert (T.adjoint() @ T).domain == E
