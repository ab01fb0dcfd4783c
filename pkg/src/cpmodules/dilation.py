"""GNS and Stinespring constructions for CP maps and phi-maps.

Every Hilbert B-module that appears is realized concretely: block ``k`` of a
dilation space is ``M_{m_k x n'_k}`` where the scalar space ``C^{m_k}`` is the
orthonormalized quotient of a spanning set by the null space of its Gram
matrix.  Column ``u`` of an element plays the role of ``x . E_u1``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _linalg as la
from .cpmaps import CPMap, PhiMap, apply, is_completely_positive
from .exceptions import DimensionMismatch, NotCompletelyPositiveError, NotPhiMapError
from .modules import ModuleElement, ModuleOperator, ModuleShape, inner_product


@dataclass(frozen=True, eq=False)
class OperatorFamily:
    """A linear map from a space with a fixed basis into ``L_B(domain, codomain)``.

    ``images[k]`` has shape ``(N, m'_k, m_k)``: the block-``k`` matrices of the
    images of the ``N`` basis vectors.
    """

    domain: ModuleShape
    codomain: ModuleShape
    images: tuple

    def __len__(self):
        return self.images[0].shape[0] if self.images else 0

    def basis_image(self, i) -> ModuleOperator:
        return ModuleOperator(self.domain, self.codomain, tuple(im[i] for im in self.images))

    def __call__(self, element) -> ModuleOperator:
        """Image of an algebra or module element, via its standard-basis coordinates."""
        coeffs = element.vec()
        if coeffs.shape[0] != len(self):
            raise DimensionMismatch("element has the wrong number of coordinates")
        return ModuleOperator(self.domain, self.codomain,
                              tuple(np.tensordot(coeffs, im, axes=1) for im in self.images))

    def compress(self, left, right) -> "OperatorFamily":
        """``left[k]^* x right[k]`` applied to every image (isometries given per block)."""
        new_dom = ModuleShape(self.domain.algebra, tuple(r.shape[1] for r in right))
        new_cod = ModuleShape(self.codomain.algebra, tuple(q.shape[1] for q in left))
        return OperatorFamily(new_dom, new_cod, tuple(
            np.einsum("ai,nab,bj->nij", q.conj(), im, r) for q, im, r in zip(left, self.images, right)
        ))


@dataclass(frozen=True, eq=False)
class GNSData:
    phi: CPMap
    X: ModuleShape
    pi: OperatorFamily
    xi: ModuleElement


@dataclass(frozen=True, eq=False)
class StinespringData:
    """``(pi_phi, V_phi, K_phi)`` with ``D = B`` and ``xi = V_phi(1_B)``."""

    phi: CPMap
    D: ModuleShape
    K: ModuleShape
    pi: OperatorFamily
    V: ModuleOperator

    @property
    def xi(self) -> ModuleElement:
        return ModuleElement(self.K, self.V.blocks)

    def cyclic_columns(self, k):
        """Columns of ``pi(a) V(b)`` over all matrix units ``a`` and ``b = E_u1``."""
        im = self.pi.images[k]
        cols = np.einsum("nab,bu->anu", im, self.V.blocks[k])
        return la.flatten_rows(cols)


@dataclass(frozen=True, eq=False)
class ModuleStinespringData:
    """``(pi_Phi, W_Phi, K_Phi)`` on top of the algebra-level construction."""

    Phi: PhiMap
    S: StinespringData
    K: ModuleShape
    pi: OperatorFamily
    W: ModuleOperator

    def cyclic_columns(self, k):
        """Columns of ``pi_Phi(x) V_phi(b)`` over the basis of E and ``b = E_u1``."""
        im = self.pi.images[k]
        cols = np.einsum("nab,bu->anu", im, self.S.V.blocks[k])
        return la.flatten_rows(cols)


def _product_table(A):
    """``table[p, q]`` = basis index of ``a_p a_q`` or -1 when the product vanishes."""
    labels = A.basis_labels
    table = -np.ones((A.dim, A.dim), dtype=int)
    for p, (j, r, s) in enumerate(labels):
        for q, (jj, rr, ss) in enumerate(labels):
            if j == jj and s == rr:
                table[p, q] = A.basis_index(j, r, ss)
    return table


def paschke_gns(phi: CPMap, tol: float = la.DEFAULT_TOL) -> GNSData:
    """Paschke's GNS module for a CP map ``phi: A -> B``.

    The semi-inner product ``<a (x) b, a' (x) b'> = b^* phi(a^* a') b'`` on
    ``A (x) B`` is reduced per codomain block to a scalar Gram matrix on the
    spanning vectors ``a_i (x) E_u1``; that Gram matrix is a direct sum of
    copies of the Choi blocks.  Quotienting by its null space gives ``X``,
    ``pi(a)`` acts by left multiplication on the first factor and
    ``xi = [1 (x) 1]``.

    Raises
    ------
    NotCompletelyPositiveError
        If ``phi`` is not CP within ``tol``.
    """
    if not is_completely_positive(phi, tol):
        raise NotCompletelyPositiveError("GNS construction needs a completely positive map")
    A, B = phi.domain, phi.codomain
    table = _product_table(A)
    heights, pis, xis = [], [], []
    for k, nk in enumerate(B.block_dims):
        size = A.dim * nk
        gram = np.zeros((size, size), complex)
        for j, nj in enumerate(A.block_dims):
            for r in range(nj):
                start = A.basis_index(j, r, 0) * nk
                gram[start:start + nj * nk, start:start + nj * nk] = phi.choi[j][k]
        Y, Y_pinv = la.gram_factor(gram, tol)
        m = Y.shape[0]
        Yt = Y.reshape(m, A.dim, nk)
        pi_k = np.zeros((A.dim, m, m), complex)
        for p in range(A.dim):
            prod = np.zeros_like(Yt)
            ok = table[p] >= 0
            prod[:, ok, :] = Yt[:, table[p][ok], :]
            pi_k[p] = prod.reshape(m, size) @ Y_pinv
        diag = [A.basis_index(j, r, r) for j, nj in enumerate(A.block_dims) for r in range(nj)]
        xis.append(Yt[:, diag, :].sum(axis=1))
        heights.append(m)
        pis.append(pi_k)
    X = ModuleShape(B, tuple(heights))
    return GNSData(phi, X, OperatorFamily(X, X, tuple(pis)), ModuleElement(X, tuple(xis)))


def gns_residuals(g: GNSData, tol: float = la.DEFAULT_TOL) -> dict:
    A = g.phi.domain
    rep = 0.0
    for p, a in enumerate(A.basis()):
        lhs = apply(g.phi, a)
        pa = g.pi.basis_image(p)
        for k in range(len(g.X.heights)):
            rhs = la.dagger(g.xi.blocks[k]) @ pa.blocks[k] @ g.xi.blocks[k]
            rep = max(rep, la.spectral_norm(rhs - lhs.blocks[k]))
    dense = 0
    for k, m in enumerate(g.X.heights):
        cols = la.flatten_rows(np.einsum("nab,bu->anu", g.pi.images[k], g.xi.blocks[k]))
        dense = max(dense, m - la.matrix_rank(cols, tol))
    return {"reproduction": rep, "rank_deficit": float(dense)}


def stinespring(phi: CPMap, tol: float = la.DEFAULT_TOL) -> StinespringData:
    """Minimal Stinespring triple with ``D = B``, ``K = X``, ``V(b) = xi . b``."""
    g = paschke_gns(phi, tol)
    B = phi.codomain
    D = ModuleShape(B, B.block_dims)
    V = ModuleOperator(D, g.X, g.xi.blocks)
    return StinespringData(phi, D, g.X, g.pi, V)


def stinespring_residuals(S: StinespringData) -> dict:
    """Reconstruction and *-homomorphism residuals on the algebra basis."""
    A = S.phi.domain
    recon = 0.0
    for p, a in enumerate(A.basis()):
        lhs = apply(S.phi, a)
        rhs = S.V.adjoint() @ S.pi.basis_image(p) @ S.V
        recon = max(recon, max((la.spectral_norm(x - y) for x, y in zip(rhs.blocks, lhs.blocks)), default=0.0))
    unit = S.pi(A.unit()).distance(S.K.identity())
    table = _product_table(A)
    labels = A.basis_labels
    mult = star = 0.0
    for p in range(A.dim):
        P = S.pi.basis_image(p)
        j, r, s = labels[p]
        star = max(star, P.adjoint().distance(S.pi.basis_image(A.basis_index(j, s, r))))
        for q in range(A.dim):
            prod = P @ S.pi.basis_image(q)
            want = S.pi.basis_image(table[p, q]) if table[p, q] >= 0 else S.K.zero_operator()
            mult = max(mult, prod.distance(want))
    return {"reconstruction": recon, "unital": unit, "multiplicative": mult, "adjoint": star}


def module_stinespring(Phi: PhiMap, S: StinespringData | None = None,
                       tol: float = la.DEFAULT_TOL) -> ModuleStinespringData:
    """Module-level Stinespring construction for a phi-map ``Phi: E -> F``.

    ``K_Phi`` is the quotient of ``E (x) K_phi`` under
    ``<x (x) k, y (x) k'> = <k, pi_phi(<x, y>) k'>``, ``pi_Phi(x) k = [x (x) k]``,
    and ``W_Phi^*`` is the isometry ``K_Phi -> F`` sending
    ``pi_Phi(x) V_phi(b)`` to ``Phi(x) b``.

    Raises
    ------
    NotPhiMapError
        If the B-valued Gram data of ``Phi`` does not match ``phi``, or if some
        block of F is too small to receive the isometry.
    """
    if S is None:
        S = stinespring(Phi.underlying, tol)
    elif S.phi.distance(Phi.underlying) > tol * (1.0 + Phi.underlying.scale()):
        raise DimensionMismatch("Stinespring data was built for a different map")
    E, F = Phi.domain, Phi.codomain
    A = E.algebra
    e_labels = E.basis_labels
    images = Phi.basis_images()
    scale = 1.0 + Phi.norm() ** 2
    heights, pis, ws = [], [], []
    for k, m in enumerate(S.K.heights):
        nE = E.dim
        gram = np.zeros((nE * m, nE * m), complex)
        pik = S.pi.images[k]
        for p, (j, a, b) in enumerate(e_labels):
            for q, (jj, aa, bb) in enumerate(e_labels):
                if j == jj and a == aa:
                    gram[p * m:(p + 1) * m, q * m:(q + 1) * m] = pik[A.basis_index(j, b, bb)]
        Z, _ = la.gram_factor(gram, tol)
        M = Z.shape[0]
        piPhi = Z.reshape(M, nE, m).transpose(1, 0, 2)
        kcols = la.flatten_rows(np.einsum("nab,bu->anu", piPhi, S.V.blocks[k]))
        fcols = la.flatten_rows(np.stack([img.blocks[k] for img in images], axis=1))
        mismatch = la.max_abs(la.dagger(kcols) @ kcols - la.dagger(fcols) @ fcols)
        if mismatch > tol * scale:
            raise NotPhiMapError(f"Gram data of Phi does not match phi in block {k} (residual {mismatch:.3e})")
        if F.heights[k] < M:
            raise NotPhiMapError(
                f"F block {k} has height {F.heights[k]} but the dilation needs {M}"
            )
        w_star, res = la.right_inverse_solve(fcols, kcols, tol)
        iso = la.max_abs(la.dagger(w_star) @ w_star - np.eye(M))
        if max(res, iso) > np.sqrt(tol) * scale:
            raise NotPhiMapError(f"no isometry K_Phi -> F reproduces Phi in block {k} (residual {max(res, iso):.3e})")
        heights.append(M)
        pis.append(piPhi)
        ws.append(la.dagger(w_star))
    K = ModuleShape(F.algebra, tuple(heights))
    pi = OperatorFamily(S.K, K, tuple(pis))
    W = ModuleOperator(F, K, tuple(ws))
    return ModuleStinespringData(Phi, S, K, pi, W)


def module_stinespring_residuals(M: ModuleStinespringData) -> dict:
    E = M.Phi.domain
    basis = E.basis()
    S = M.S
    morph = recon = inter = 0.0
    images = M.Phi.basis_images()
    A = E.algebra
    for p, x in enumerate(basis):
        Px = M.pi.basis_image(p)
        for q, y in enumerate(basis):
            lhs = Px.adjoint() @ M.pi.basis_image(q)
            rhs = S.pi(inner_product(x, y))
            morph = max(morph, lhs.distance(rhs))
        out = M.W.adjoint() @ Px @ S.V
        recon = max(recon, max(la.spectral_norm(a - b) for a, b in zip(out.blocks, images[p].blocks)))
        for i, a in enumerate(A.basis()):
            lhs = M.pi(x.right_mul(a))
            inter = max(inter, lhs.distance(Px @ S.pi.basis_image(i)))
    cois = (M.W @ M.W.adjoint()).distance(M.K.identity())
    return {"morphism": morph, "reconstruction": recon, "intertwining": inter, "coisometry": cois}


def minimality_check(data, tol: float = la.DEFAULT_TOL) -> bool:
    """``[pi(.) V D]`` spans the whole dilation space, block by block."""
    for k, m in enumerate(data.K.heights):
        if la.matrix_rank(data.cyclic_columns(k), tol) != m:
            return False
    return True
