"""Completely positive maps between block algebras and phi-maps between modules.

A :class:`CPMap` stores one Choi matrix per pair of blocks,
``C[j][k] = sum_rs E_rs (x) phi_k(E^j_rs)`` with the domain factor first, so
entry ``(r*n' + u, s*n' + v)`` holds ``phi_k(E^j_rs)[u, v]``.
"""
from __future__ import annotations

from collections.abc import Callable, Mapping
from dataclasses import dataclass
from numbers import Number

import numpy as np

from . import _linalg as la
from .algebra import AlgebraElement, BlockAlgebra, ElementMatrix, blocks_positive, is_positive
from .exceptions import (
    DimensionMismatch,
    NotHermitianError,
    NotPhiMapError,
)
from .modules import ModuleElement, ModuleShape, inner_product


@dataclass(frozen=True, eq=False)
class CPMap:
    """A linear map ``A -> B`` acting blockwise; complete positivity is not enforced."""

    domain: BlockAlgebra
    codomain: BlockAlgebra
    choi: tuple
    continuous: bool = True  # automatic in finite dimensions

    def __post_init__(self):
        if len(self.choi) != self.domain.num_blocks:
            raise DimensionMismatch("Choi grid needs one row per domain block")
        grid = []
        for j, row in enumerate(self.choi):
            if len(row) != self.codomain.num_blocks:
                raise DimensionMismatch("Choi grid needs one column per codomain block")
            cells = []
            for k, c in enumerate(row):
                c = la.as_complex(c)
                size = self.domain.block_dims[j] * self.codomain.block_dims[k]
                if c.shape != (size, size):
                    raise DimensionMismatch(
                        f"Choi block [{j}][{k}] has shape {c.shape}, expected {(size, size)}"
                    )
                cells.append(c)
            grid.append(tuple(cells))
        object.__setattr__(self, "choi", tuple(grid))

    def __call__(self, a: AlgebraElement) -> AlgebraElement:
        return apply(self, a)

    def _same(self, other):
        if other.domain != self.domain or other.codomain != self.codomain:
            raise DimensionMismatch("maps have different signatures")

    def _combine(self, other, op):
        self._same(other)
        return CPMap(self.domain, self.codomain,
                     tuple(tuple(op(a, b) for a, b in zip(ra, rb)) for ra, rb in zip(self.choi, other.choi)))

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, scalar):
        if not isinstance(scalar, Number):
            return NotImplemented
        return CPMap(self.domain, self.codomain, tuple(tuple(scalar * c for c in row) for row in self.choi))

    __rmul__ = __mul__

    def distance(self, other) -> float:
        """Largest Choi-block spectral distance."""
        self._same(other)
        return max(la.spectral_norm(a - b) for ra, rb in zip(self.choi, other.choi) for a, b in zip(ra, rb))

    def scale(self) -> float:
        return max(la.spectral_norm(c) for row in self.choi for c in row)

    def tensor(self, j, k):
        """Choi block ``[j][k]`` reshaped to ``(r, u, s, v)``."""
        n, m = self.domain.block_dims[j], self.codomain.block_dims[k]
        return self.choi[j][k].reshape(n, m, n, m)

    def choi_eigenvalues(self):
        return [[np.linalg.eigvalsh(la.herm(c)) for c in row] for row in self.choi]


def zero_map(domain, codomain) -> CPMap:
    return CPMap(domain, codomain, tuple(
        tuple(np.zeros((n * m, n * m), complex) for m in codomain.block_dims) for n in domain.block_dims
    ))


def identity_map(algebra) -> CPMap:
    return choi_of_linear(algebra, algebra, lambda a: a)


def choi_of_linear(domain: BlockAlgebra, codomain: BlockAlgebra, values) -> CPMap:
    """Assemble the Choi grid from the images of the matrix units.

    ``values`` is either a callable on :class:`AlgebraElement` or a mapping from
    ``(j, r, s)`` to the image of ``E^j_rs``.
    """
    if isinstance(values, Mapping):
        missing = [lab for lab in domain.basis_labels if lab not in values]
        if missing:
            raise DimensionMismatch(f"missing matrix-unit images for {missing}")
        image = lambda lab: values[lab]  # noqa: E731
    elif isinstance(values, Callable):
        image = lambda lab: values(domain.matrix_unit(*lab))  # noqa: E731
    else:
        raise TypeError("values must be a callable or a mapping of matrix units")
    grid = []
    for j, n in enumerate(domain.block_dims):
        row = []
        for k, m in enumerate(codomain.block_dims):
            c = np.zeros((n, m, n, m), complex)
            for r in range(n):
                for s in range(n):
                    out = image((j, r, s))
                    if out.algebra != codomain:
                        raise DimensionMismatch("matrix-unit image lies in the wrong algebra")
                    c[r, :, s, :] = out.blocks[k]
            row.append(c.reshape(n * m, n * m))
        grid.append(tuple(row))
    return CPMap(domain, codomain, tuple(grid))


def from_kraus(domain: BlockAlgebra, codomain: BlockAlgebra, kraus: Mapping) -> CPMap:
    """``phi(a)_k = sum_j sum_i K_i^* a_j K_i`` with ``kraus[(j, k)] = [K_1, ...]``."""
    def image(a):
        out = []
        for k, m in enumerate(codomain.block_dims):
            acc = np.zeros((m, m), complex)
            for j in range(domain.num_blocks):
                for K in kraus.get((j, k), ()):
                    acc += la.dagger(K) @ a.blocks[j] @ K
            out.append(acc)
        return codomain.element(out)
    return choi_of_linear(domain, codomain, image)


def apply(phi: CPMap, a: AlgebraElement) -> AlgebraElement:
    if a.algebra != phi.domain:
        raise DimensionMismatch("argument does not belong to the domain algebra")
    out = []
    for k, m in enumerate(phi.codomain.block_dims):
        acc = np.zeros((m, m), complex)
        for j in range(phi.domain.num_blocks):
            acc += np.einsum("rs,rusv->uv", a.blocks[j], phi.tensor(j, k))
        out.append(acc)
    return phi.codomain.element(out)


def compose(theta: CPMap, phi: CPMap) -> CPMap:
    """``theta o phi``."""
    if theta.domain != phi.codomain:
        raise DimensionMismatch("cannot compose: codomain and domain differ")
    return choi_of_linear(phi.domain, theta.codomain, lambda a: apply(theta, apply(phi, a)))


def is_completely_positive(phi: CPMap, tol: float = la.DEFAULT_TOL) -> bool:
    """True iff every Choi block is positive semidefinite within ``tol``."""
    try:
        return blocks_positive([c for row in phi.choi for c in row], tol)
    except NotHermitianError:
        return False


def operational_cp_check(phi: CPMap, rng, trials: int = 20, n_max: int = 3,
                         tol: float = la.DEFAULT_TOL) -> bool:
    """Brute-force test: ``[phi(a_i^* a_l)]`` positive for a family of tuples.

    Positive elements of ``M_n(A)`` are sums of matrices ``[a_i^* a_l]``, so
    complete positivity reduces to these Gram-type inputs.  The family holds
    ``trials`` random tuples for every ``n <= n_max`` and every domain block,
    plus the row tuple ``(E_11, E_12, ..., E_1n)`` of each block.  The map is
    only ever evaluated through :func:`apply`.
    """
    A = phi.domain

    def tuple_ok(tup):
        gram = [[apply(phi, a.adjoint() @ b) for b in tup] for a in tup]
        try:
            return is_positive(ElementMatrix.from_entries(gram), tol)
        except NotHermitianError:
            return False

    for j, nj in enumerate(A.block_dims):
        row_units = tuple(A.matrix_unit(j, 0, s) for s in range(nj))
        if nj <= n_max and not tuple_ok(row_units):
            return False
        for n in range(1, n_max + 1):
            for _ in range(trials):
                tup = []
                for _ in range(n):
                    blocks = [np.zeros((m, m), complex) for m in A.block_dims]
                    blocks[j] = rng.standard_normal((nj, nj)) + 1j * rng.standard_normal((nj, nj))
                    tup.append(A.element(blocks))
                if not tuple_ok(tup):
                    return False
    return True


def cp_order_leq(psi: CPMap, phi: CPMap, tol: float = la.DEFAULT_TOL) -> bool:
    """``psi <= phi``, i.e. ``phi - psi`` completely positive."""
    if psi.domain != phi.domain or psi.codomain != phi.codomain:
        raise DimensionMismatch("order comparison of maps with different signatures")
    diff = phi - psi
    # tolerance relative to the larger map, not to the (possibly tiny) difference
    scale = 1.0 + max(phi.scale(), psi.scale())
    cells = [c for row in diff.choi for c in row]
    if any(la.spectral_norm(c - la.dagger(c)) > tol * scale for c in cells):
        return False
    return all(la.min_eigenvalue(c) >= -tol * scale for c in cells)


@dataclass(frozen=True, eq=False)
class PhiMap:
    """A linear map ``E -> F`` stored on the standard basis, with its underlying ``phi``."""

    domain: ModuleShape
    codomain: ModuleShape
    matrix: np.ndarray
    underlying: CPMap

    def __post_init__(self):
        mat = la.as_complex(self.matrix)
        if mat.shape != (self.codomain.dim, self.domain.dim):
            raise DimensionMismatch(
                f"phi-map matrix has shape {mat.shape}, expected {(self.codomain.dim, self.domain.dim)}"
            )
        if self.underlying.domain != self.domain.algebra or self.underlying.codomain != self.codomain.algebra:
            raise DimensionMismatch("underlying map does not match the module algebras")
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def from_function(cls, domain, codomain, func, underlying) -> "PhiMap":
        cols = [func(x).vec() for x in domain.basis()]
        return cls(domain, codomain, np.array(cols).T.reshape(codomain.dim, domain.dim), underlying)

    def __call__(self, x: ModuleElement) -> ModuleElement:
        if x.shape.heights != self.domain.heights:
            raise DimensionMismatch("argument does not belong to the domain module")
        return self.codomain.from_vec(self.matrix @ x.vec())

    def with_matrix(self, matrix) -> "PhiMap":
        return PhiMap(self.domain, self.codomain, matrix, self.underlying)

    def basis_images(self):
        return [self.codomain.from_vec(col) for col in self.matrix.T]

    def norm(self) -> float:
        return la.spectral_norm(self.matrix)


def phi_map_residual(Phi: PhiMap) -> float:
    basis = Phi.domain.basis()
    images = Phi.basis_images()
    res = 0.0
    for x, fx in zip(basis, images):
        for y, fy in zip(basis, images):
            lhs = inner_product(fx, fy)
            rhs = apply(Phi.underlying, inner_product(x, y))
            res = max(res, lhs.distance(rhs))
    return res


def phi_map_check(Phi: PhiMap, tol: float = la.DEFAULT_TOL) -> bool:
    """``<Phi(x), Phi(y)> = phi(<x, y>)`` on all basis pairs."""
    return phi_map_residual(Phi) <= tol * (1.0 + Phi.norm() ** 2)


def induced_phi(matrix, E: ModuleShape, F: ModuleShape, tol: float = la.DEFAULT_TOL) -> CPMap:
    """Recover the unique ``phi`` for which a module map is a phi-map.

    For basis elements ``<E_pq, E_p'q'> = delta_pp' E_qq'``, so each matrix unit
    ``E_qq'`` is hit once per row index ``p``; the least-squares solution
    averages over ``p``.  All basis pairs are then re-checked.

    Raises
    ------
    NotPhiMapError
        If the Gram data is inconsistent with any ``phi``.
    """
    matrix = la.as_complex(matrix)
    if matrix.shape != (F.dim, E.dim):
        raise DimensionMismatch("matrix does not map E to F")
    if E.algebra.num_blocks != len(E.heights):
        raise DimensionMismatch("bad domain module")
    A, B = E.algebra, F.algebra
    images = [F.from_vec(col) for col in matrix.T]
    index = {lab: i for i, lab in enumerate(E.basis_labels)}
    values = {}
    for (j, q, qq) in A.basis_labels:
        h = E.heights[j]
        acc = B.zero()
        for p in range(h):
            acc = acc + inner_product(images[index[(j, p, q)]], images[index[(j, p, qq)]])
        values[(j, q, qq)] = acc * (1.0 / h)
    phi = choi_of_linear(A, B, values)
    basis = E.basis()
    res = 0.0
    for x, fx in zip(basis, images):
        for y, fy in zip(basis, images):
            res = max(res, inner_product(fx, fy).distance(apply(phi, inner_product(x, y))))
    if res > tol * (1.0 + la.spectral_norm(matrix) ** 2):
        raise NotPhiMapError(f"not a phi-map for any phi (Gram residual {res:.3e})")
    return phi


def equivalence_residual(Phi: PhiMap, Psi: PhiMap, tol: float = la.DEFAULT_TOL) -> float:
    if Phi.domain != Psi.domain or Phi.codomain.heights != Psi.codomain.heights:
        raise DimensionMismatch("equivalence of maps between different modules")
    a = induced_phi(Phi.matrix, Phi.domain, Phi.codomain, tol)
    b = induced_phi(Psi.matrix, Psi.domain, Psi.codomain, tol)
    return a.distance(b)


def equivalence_check(Phi: PhiMap, Psi: PhiMap, tol: float = la.DEFAULT_TOL) -> bool:
    """``Phi ~ Psi``: equal ``<Phi(x), Phi(x)>`` for all x, decided on induced maps."""
    scale = 1.0 + max(Phi.norm(), Psi.norm()) ** 2
    return equivalence_residual(Phi, Psi, tol) <= tol * scale


def module_order_leq(Psi: PhiMap, Phi: PhiMap, tol: float = la.DEFAULT_TOL) -> bool:
    """``Psi`` precedes ``Phi`` when their underlying maps satisfy ``psi <= phi``."""
    return cp_order_leq(Psi.underlying, Phi.underlying, tol)


def compose_phi(Theta: PhiMap, Phi: PhiMap) -> PhiMap:
    """``Theta o Phi``; a ``theta o phi``-map."""
    if Theta.domain.heights != Phi.codomain.heights:
        raise DimensionMismatch("cannot compose module maps")
    return PhiMap(Phi.domain, Theta.codomain, Theta.matrix @ Phi.matrix, compose(Theta.underlying, Phi.underlying))
