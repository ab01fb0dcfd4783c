"""Finite products of full matrix algebras.

A :class:`BlockAlgebra` ``M_{n_1} x ... x M_{n_J}`` carries one C*-seminorm per
factor, ``p_j(a) = ||a_j||``, which is how the multi-seminorm structure of a
pro-C*-algebra is kept at desk scale.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from numbers import Number

import numpy as np

from ._linalg import DEFAULT_TOL, as_complex, dagger, herm, psd_sqrt, spectral_norm
from .exceptions import DimensionMismatch, NotHermitianError, NotPositiveError


@dataclass(frozen=True)
class BlockAlgebra:
    """Product of matrix algebras ``M_{n_1} x ... x M_{n_J}``."""

    block_dims: tuple

    def __post_init__(self):
        dims = tuple(int(n) for n in self.block_dims)
        if not dims:
            raise DimensionMismatch("a block algebra needs at least one block")
        if any(n < 1 for n in dims):
            raise DimensionMismatch(f"block dimensions must be >= 1, got {dims}")
        object.__setattr__(self, "block_dims", dims)

    @property
    def num_blocks(self) -> int:
        return len(self.block_dims)

    @property
    def dim(self) -> int:
        """Complex dimension, i.e. the number of matrix units."""
        return sum(n * n for n in self.block_dims)

    @cached_property
    def offsets(self) -> tuple:
        out, acc = [], 0
        for n in self.block_dims:
            out.append(acc)
            acc += n * n
        return tuple(out)

    @cached_property
    def basis_labels(self) -> tuple:
        """Matrix units ``(j, r, s)`` in the order used by :meth:`AlgebraElement.vec`."""
        return tuple(
            (j, r, s) for j, n in enumerate(self.block_dims) for r in range(n) for s in range(n)
        )

    def basis_index(self, j, r, s) -> int:
        return self.offsets[j] + r * self.block_dims[j] + s

    def element(self, blocks) -> "AlgebraElement":
        return AlgebraElement(self, tuple(blocks))

    def zero(self) -> "AlgebraElement":
        return self.element(np.zeros((n, n), complex) for n in self.block_dims)

    def unit(self) -> "AlgebraElement":
        return self.element(np.eye(n, dtype=complex) for n in self.block_dims)

    def matrix_unit(self, j, r, s) -> "AlgebraElement":
        blocks = [np.zeros((n, n), complex) for n in self.block_dims]
        blocks[j][r, s] = 1.0
        return self.element(blocks)

    def basis(self):
        return [self.matrix_unit(*lab) for lab in self.basis_labels]

    def from_vec(self, vec) -> "AlgebraElement":
        vec = np.asarray(vec, dtype=complex)
        if vec.shape != (self.dim,):
            raise DimensionMismatch(f"expected vector of length {self.dim}, got {vec.shape}")
        return self.element(
            vec[o:o + n * n].reshape(n, n) for o, n in zip(self.offsets, self.block_dims)
        )

    def random(self, rng, hermitian=False) -> "AlgebraElement":
        blocks = []
        for n in self.block_dims:
            b = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            blocks.append(herm(b) if hermitian else b)
        return self.element(blocks)


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    algebra: BlockAlgebra
    blocks: tuple

    def __post_init__(self):
        blocks = tuple(as_complex(b) for b in self.blocks)
        dims = self.algebra.block_dims
        if len(blocks) != len(dims):
            raise DimensionMismatch(
                f"expected {len(dims)} blocks, got {len(blocks)}"
            )
        for j, (b, n) in enumerate(zip(blocks, dims)):
            if b.shape != (n, n):
                raise DimensionMismatch(f"block {j} has shape {b.shape}, expected {(n, n)}")
        object.__setattr__(self, "blocks", blocks)

    def _check(self, other):
        if not isinstance(other, AlgebraElement) or other.algebra != self.algebra:
            raise DimensionMismatch("elements belong to different algebras")

    def __add__(self, other):
        self._check(other)
        return AlgebraElement(self.algebra, tuple(a + b for a, b in zip(self.blocks, other.blocks)))

    def __sub__(self, other):
        self._check(other)
        return AlgebraElement(self.algebra, tuple(a - b for a, b in zip(self.blocks, other.blocks)))

    def __neg__(self):
        return AlgebraElement(self.algebra, tuple(-a for a in self.blocks))

    def __mul__(self, scalar):
        if not isinstance(scalar, Number):
            return NotImplemented
        return AlgebraElement(self.algebra, tuple(scalar * a for a in self.blocks))

    __rmul__ = __mul__

    def __matmul__(self, other):
        """Algebra product."""
        self._check(other)
        return AlgebraElement(self.algebra, tuple(a @ b for a, b in zip(self.blocks, other.blocks)))

    def adjoint(self) -> "AlgebraElement":
        return AlgebraElement(self.algebra, tuple(dagger(a) for a in self.blocks))

    def vec(self) -> np.ndarray:
        return np.concatenate([b.ravel() for b in self.blocks])

    def distance(self, other) -> float:
        self._check(other)
        return max(spectral_norm(a - b) for a, b in zip(self.blocks, other.blocks))


@dataclass(frozen=True, eq=False)
class ElementMatrix:
    """An element of ``M_n(A)`` in flattened block-of-blocks form.

    ``flat[j]`` is the ``(n*n_j) x (n*n_j)`` scalar matrix whose ``(i, l)``
    sub-block of size ``n_j`` is block ``j`` of entry ``(i, l)``.
    """

    algebra: BlockAlgebra
    size: int
    flat: tuple

    def __post_init__(self):
        flat = tuple(as_complex(f) for f in self.flat)
        if len(flat) != self.algebra.num_blocks:
            raise DimensionMismatch("one flattened matrix per algebra block is required")
        for f, nj in zip(flat, self.algebra.block_dims):
            if f.shape != (self.size * nj, self.size * nj):
                raise DimensionMismatch(f"flattened block has shape {f.shape}")
        object.__setattr__(self, "flat", flat)

    @classmethod
    def from_entries(cls, entries) -> "ElementMatrix":
        n = len(entries)
        if any(len(row) != n for row in entries):
            raise DimensionMismatch("element matrix must be square")
        algebra = entries[0][0].algebra
        flat = []
        for j in range(algebra.num_blocks):
            rows = []
            for row in entries:
                for a in row:
                    if a.algebra != algebra:
                        raise DimensionMismatch("all entries must share one algebra")
                rows.append(np.hstack([a.blocks[j] for a in row]))
            flat.append(np.vstack(rows))
        return cls(algebra, n, tuple(flat))

    @classmethod
    def gram(cls, tup) -> "ElementMatrix":
        """The matrix ``[a_i^* a_l]`` built from a tuple ``(a_1, ..., a_n)``."""
        return cls.from_entries([[a.adjoint() @ b for b in tup] for a in tup])

    def entry(self, i, l) -> AlgebraElement:
        blocks = []
        for f, nj in zip(self.flat, self.algebra.block_dims):
            blocks.append(f[i * nj:(i + 1) * nj, l * nj:(l + 1) * nj])
        return AlgebraElement(self.algebra, tuple(blocks))

    def __add__(self, other):
        return ElementMatrix(self.algebra, self.size, tuple(a + b for a, b in zip(self.flat, other.flat)))

    def distance(self, other) -> float:
        return max(spectral_norm(a - b) for a, b in zip(self.flat, other.flat))


def seminorm(a: AlgebraElement, j: int) -> float:
    """C*-seminorm ``p_j(a)``: operator norm of block ``j``."""
    if not 0 <= j < a.algebra.num_blocks:
        raise IndexError(f"seminorm index {j} out of range for {a.algebra.num_blocks} blocks")
    return spectral_norm(a.blocks[j])


def _scale(blocks):
    return max((spectral_norm(b) for b in blocks), default=0.0)


def _hermitian_blocks(blocks, tol):
    out = []
    for j, b in enumerate(blocks):
        if spectral_norm(b - dagger(b)) > tol * (1.0 + spectral_norm(b)):
            raise NotHermitianError(f"block {j} is not Hermitian within tol={tol:g}")
        out.append(herm(b))
    return out


def blocks_positive(blocks, tol=DEFAULT_TOL) -> bool:
    """Positivity test shared by algebra elements, element matrices and Choi blocks."""
    blocks = _hermitian_blocks(blocks, tol)
    floor = -tol * (1.0 + _scale(blocks))
    return all(b.shape[0] == 0 or np.linalg.eigvalsh(b)[0] >= floor for b in blocks)


def is_positive(a, tol: float = DEFAULT_TOL) -> bool:
    """True iff ``a`` (an element of A or of M_n(A)) is positive within ``tol``.

    Raises
    ------
    NotHermitianError
        If some block is not Hermitian within ``tol * (1 + ||block||)``.
    """
    blocks = a.flat if isinstance(a, ElementMatrix) else a.blocks
    return blocks_positive(blocks, tol)


def sqrt_psd(a: AlgebraElement, tol: float = DEFAULT_TOL) -> AlgebraElement:
    """Blockwise positive square root; small negative eigenvalues are clamped."""
    if not is_positive(a, tol):
        raise NotPositiveError("square root requested for a non-positive element")
    return AlgebraElement(a.algebra, tuple(psd_sqrt(b) for b in a.blocks))


# squared row norm below which a factor row is rounding noise
_DROP = 1e-13


def positive_decomposition(P: ElementMatrix, tol: float = DEFAULT_TOL) -> list:
    """Write a positive ``P`` in ``M_n(A)`` as a sum of matrices ``[a_i^* a_l]``.

    Factor ``P = Q^* Q`` and take the rows of ``Q``: row ``k`` gives the tuple
    ``(Q_k1, ..., Q_kn)`` and ``P = sum_k B_k^* B_k``.  The factor is taken as
    ``Lambda^{1/2} U^*`` from the eigendecomposition per block with eigenvalues
    in decreasing order, so that a low-rank ``P`` yields few non-zero rows;
    rows that vanish in every block (to rounding level) are dropped.

    Returns
    -------
    list of tuple of AlgebraElement
        At most ``n`` tuples of length ``n``.
    """
    if not is_positive(P, tol):
        raise NotPositiveError("positive_decomposition requires a positive element of M_n(A)")
    alg, n = P.algebra, P.size
    factors = []
    for f in P.flat:
        evals, evecs = np.linalg.eigh(herm(f))
        evals = np.clip(evals, 0.0, None)[::-1]
        evecs = evecs[:, ::-1]
        factors.append(np.sqrt(evals)[:, None] * dagger(evecs))
    scale = 1.0 + _scale(P.flat)
    tuples = []
    for k in range(n):
        row = []
        for i in range(n):
            blocks = [q[k * nj:(k + 1) * nj, i * nj:(i + 1) * nj]
                      for q, nj in zip(factors, alg.block_dims)]
            row.append(AlgebraElement(alg, tuple(blocks)))
        if max(_scale(a.blocks) for a in row) ** 2 > _DROP * scale:
            tuples.append(tuple(row))
    return tuples


def reconstruct(tuples, algebra: BlockAlgebra, n: int) -> ElementMatrix:
    """``sum over tuples of [a_i^* a_l]``: the inverse of :func:`positive_decomposition`."""
    total = ElementMatrix(
        algebra, n, tuple(np.zeros((n * nj, n * nj), complex) for nj in algebra.block_dims)
    )
    for tup in tuples:
        total = total + ElementMatrix.gram(tup)
    return total
