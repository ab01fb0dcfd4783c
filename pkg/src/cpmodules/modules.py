"""Hilbert modules over block algebras and their adjointable operators.

Block ``j`` of a module over ``M_{n_1} x ... x M_{n_J}`` is ``M_{m_j x n_j}``
with inner product ``<x, y>_j = x_j^* y_j`` and right action by matrix
multiplication.  Adjointable module maps act by left multiplication, one
scalar ``m'_j x m_j`` matrix per block.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from numbers import Number

import numpy as np

from . import _linalg as la
from .algebra import AlgebraElement, BlockAlgebra, blocks_positive
from .exceptions import DimensionMismatch


@dataclass(frozen=True)
class LeftActionSpec:
    """Ampliation ``tau(b)_j = b_j (x) I_{mult_j}`` turning F into a two-sided module."""

    multiplicities: tuple

    def __post_init__(self):
        mult = tuple(int(m) for m in self.multiplicities)
        if any(m < 1 for m in mult):
            raise DimensionMismatch("left-action multiplicities must be positive")
        object.__setattr__(self, "multiplicities", mult)


@dataclass(frozen=True)
class ModuleShape:
    algebra: BlockAlgebra
    heights: tuple
    left_action: LeftActionSpec | None = None

    def __post_init__(self):
        heights = tuple(int(m) for m in self.heights)
        if len(heights) != self.algebra.num_blocks:
            raise DimensionMismatch(
                f"module needs one height per algebra block ({self.algebra.num_blocks}), got {len(heights)}"
            )
        # zero heights only arise for dilation spaces of maps vanishing on a block
        if any(m < 0 for m in heights):
            raise DimensionMismatch("module heights must be non-negative")
        object.__setattr__(self, "heights", heights)
        if self.left_action is not None:
            mult = self.left_action.multiplicities
            if len(mult) != len(heights):
                raise DimensionMismatch("one left-action multiplicity per block is required")
            for m, k, n in zip(heights, mult, self.algebra.block_dims):
                if m != k * n:
                    raise DimensionMismatch(
                        f"left action needs height = multiplicity * block dim ({m} != {k}*{n})"
                    )

    @property
    def block_shapes(self):
        return tuple(zip(self.heights, self.algebra.block_dims))

    @property
    def dim(self) -> int:
        """Complex dimension (length of :meth:`ModuleElement.vec`)."""
        return sum(m * n for m, n in self.block_shapes)

    @cached_property
    def offsets(self):
        out, acc = [], 0
        for m, n in self.block_shapes:
            out.append(acc)
            acc += m * n
        return tuple(out)

    @cached_property
    def basis_labels(self):
        return tuple(
            (j, p, q) for j, (m, n) in enumerate(self.block_shapes) for p in range(m) for q in range(n)
        )

    def element(self, blocks) -> "ModuleElement":
        return ModuleElement(self, tuple(blocks))

    def zero(self):
        return self.element(np.zeros(s, complex) for s in self.block_shapes)

    def basis_element(self, j, p, q):
        blocks = [np.zeros(s, complex) for s in self.block_shapes]
        blocks[j][p, q] = 1.0
        return self.element(blocks)

    def basis(self):
        return [self.basis_element(*lab) for lab in self.basis_labels]

    def from_vec(self, vec) -> "ModuleElement":
        vec = np.asarray(vec, dtype=complex)
        if vec.shape != (self.dim,):
            raise DimensionMismatch(f"expected vector of length {self.dim}, got {vec.shape}")
        return self.element(
            vec[o:o + m * n].reshape(m, n) for o, (m, n) in zip(self.offsets, self.block_shapes)
        )

    def random(self, rng) -> "ModuleElement":
        return self.element(
            rng.standard_normal(s) + 1j * rng.standard_normal(s) for s in self.block_shapes
        )

    def identity(self) -> "ModuleOperator":
        return ModuleOperator(self, self, tuple(np.eye(m, dtype=complex) for m in self.heights))

    def zero_operator(self, codomain=None) -> "ModuleOperator":
        codomain = self if codomain is None else codomain
        return ModuleOperator(
            self, codomain, tuple(np.zeros((mc, m), complex) for mc, m in zip(codomain.heights, self.heights))
        )

    def tau(self, b: AlgebraElement) -> "ModuleOperator":
        """Left action of ``b`` when the module is two-sided."""
        if self.left_action is None:
            raise DimensionMismatch("module has no left action")
        if b.algebra != self.algebra:
            raise DimensionMismatch("left action of an element of a different algebra")
        return ModuleOperator(
            self, self,
            tuple(np.kron(bj, np.eye(k)) for bj, k in zip(b.blocks, self.left_action.multiplicities)),
        )


@dataclass(frozen=True, eq=False)
class ModuleElement:
    shape: ModuleShape
    blocks: tuple

    def __post_init__(self):
        blocks = tuple(la.as_complex(b) for b in self.blocks)
        if len(blocks) != len(self.shape.heights):
            raise DimensionMismatch("wrong number of module blocks")
        for j, (b, s) in enumerate(zip(blocks, self.shape.block_shapes)):
            if b.shape != s:
                raise DimensionMismatch(f"module block {j} has shape {b.shape}, expected {s}")
        object.__setattr__(self, "blocks", blocks)

    def vec(self):
        if not self.blocks:
            return np.zeros(0, complex)
        return np.concatenate([b.ravel() for b in self.blocks])

    def right_mul(self, a: AlgebraElement) -> "ModuleElement":
        """Right module action ``x . a``."""
        if a.algebra != self.shape.algebra:
            raise DimensionMismatch("right action by an element of a different algebra")
        return ModuleElement(self.shape, tuple(x @ aj for x, aj in zip(self.blocks, a.blocks)))

    def __add__(self, other):
        return ModuleElement(self.shape, tuple(a + b for a, b in zip(self.blocks, other.blocks)))

    def __sub__(self, other):
        return ModuleElement(self.shape, tuple(a - b for a, b in zip(self.blocks, other.blocks)))

    def __mul__(self, scalar):
        if not isinstance(scalar, Number):
            return NotImplemented
        return ModuleElement(self.shape, tuple(scalar * b for b in self.blocks))

    __rmul__ = __mul__

    def distance(self, other) -> float:
        return max((la.spectral_norm(a - b) for a, b in zip(self.blocks, other.blocks)), default=0.0)


@dataclass(frozen=True, eq=False)
class ModuleOperator:
    domain: ModuleShape
    codomain: ModuleShape
    blocks: tuple

    def __post_init__(self):
        if self.domain.algebra != self.codomain.algebra:
            raise DimensionMismatch("operator between modules over different algebras")
        blocks = tuple(la.as_complex(b) for b in self.blocks)
        if len(blocks) != len(self.domain.heights):
            raise DimensionMismatch("wrong number of operator blocks")
        for j, b in enumerate(blocks):
            want = (self.codomain.heights[j], self.domain.heights[j])
            if b.shape != want:
                raise DimensionMismatch(f"operator block {j} has shape {b.shape}, expected {want}")
        object.__setattr__(self, "blocks", blocks)

    def __matmul__(self, other):
        if isinstance(other, ModuleElement):
            if other.shape.heights != self.domain.heights:
                raise DimensionMismatch("operator applied to an element of the wrong module")
            return ModuleElement(self.codomain, tuple(t @ x for t, x in zip(self.blocks, other.blocks)))
        if isinstance(other, ModuleOperator):
            if other.codomain.heights != self.domain.heights:
                raise DimensionMismatch("operator composition with mismatched modules")
            return ModuleOperator(other.domain, self.codomain,
                                  tuple(a @ b for a, b in zip(self.blocks, other.blocks)))
        return NotImplemented

    def _same(self, other):
        if other.domain.heights != self.domain.heights or other.codomain.heights != self.codomain.heights:
            raise DimensionMismatch("operators act between different modules")

    def __add__(self, other):
        self._same(other)
        return ModuleOperator(self.domain, self.codomain, tuple(a + b for a, b in zip(self.blocks, other.blocks)))

    def __sub__(self, other):
        self._same(other)
        return ModuleOperator(self.domain, self.codomain, tuple(a - b for a, b in zip(self.blocks, other.blocks)))

    def __mul__(self, scalar):
        if not isinstance(scalar, Number):
            return NotImplemented
        return ModuleOperator(self.domain, self.codomain, tuple(scalar * b for b in self.blocks))

    __rmul__ = __mul__

    def adjoint(self) -> "ModuleOperator":
        return ModuleOperator(self.codomain, self.domain, tuple(la.dagger(b) for b in self.blocks))

    @property
    def H(self):
        return self.adjoint()

    def norm(self) -> float:
        """Supremum over the seminorm family (max over blocks)."""
        return max((la.spectral_norm(b) for b in self.blocks), default=0.0)

    def distance(self, other) -> float:
        self._same(other)
        return (self - other).norm()

    def map_blocks(self, func) -> "ModuleOperator":
        return ModuleOperator(self.domain, self.codomain, tuple(func(b) for b in self.blocks))

    def vec(self):
        return np.concatenate([b.ravel() for b in self.blocks]) if self.blocks else np.zeros(0, complex)


def inner_product(x: ModuleElement, y: ModuleElement) -> AlgebraElement:
    """Algebra-valued inner product ``<x, y> = x^* y`` (linear in ``y``)."""
    if x.shape.heights != y.shape.heights or x.shape.algebra != y.shape.algebra:
        raise DimensionMismatch("inner product of elements of different modules")
    return AlgebraElement(x.shape.algebra, tuple(la.dagger(a) @ b for a, b in zip(x.blocks, y.blocks)))


def adjoint(T: ModuleOperator) -> ModuleOperator:
    return T.adjoint()


def operator_norm(T: ModuleOperator, j: int) -> float:
    """Least constant ``M`` with ``||T x||_{p_j} <= M ||x||_{p_j}``."""
    if not 0 <= j < len(T.blocks):
        raise IndexError(f"block index {j} out of range")
    return la.spectral_norm(T.blocks[j])


def partial_isometry_residual(V: ModuleOperator) -> float:
    return (V @ V.adjoint() @ V - V).norm()


def is_partial_isometry(V: ModuleOperator, tol: float = la.DEFAULT_TOL) -> bool:
    return partial_isometry_residual(V) <= tol


def _projection(domain, bases):
    return ModuleOperator(domain, domain, tuple(q @ la.dagger(q) for q in bases))


def kernel_projection(T: ModuleOperator, tol: float = la.DEFAULT_TOL) -> ModuleOperator:
    """Orthogonal projection onto ``ker T``, blockwise from the SVD null space.

    Every kernel is complemented here, so the projection always exists.
    """
    if T.domain.heights != T.codomain.heights:
        raise DimensionMismatch("kernel projection needs an operator on a single module")
    return _projection(T.domain, [la.null_space(b, tol) for b in T.blocks])


def range_projection(T: ModuleOperator, tol: float = la.DEFAULT_TOL) -> ModuleOperator:
    """Orthogonal projection onto the closed range of ``T``."""
    return _projection(T.codomain, [la.range_basis(b, tol) for b in T.blocks])


def range_bases(T: ModuleOperator, tol: float = la.DEFAULT_TOL):
    return [la.range_basis(b, tol) for b in T.blocks]


def is_positive_operator(T: ModuleOperator, tol: float = la.DEFAULT_TOL) -> bool:
    return blocks_positive(T.blocks, tol)


def operator_sqrt(T: ModuleOperator) -> ModuleOperator:
    return T.map_blocks(la.psd_sqrt)


def random_unitary(n, rng):
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_isometry(rows, cols, rng):
    return random_unitary(rows, rng)[:, :cols]
