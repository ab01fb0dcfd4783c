"""Seeded random CP maps and phi-maps."""
from __future__ import annotations

import numpy as np

from . import _linalg as la
from .algebra import BlockAlgebra
from .cpmaps import PhiMap, from_kraus
from .modules import ModuleShape, random_isometry

# caps for generated instance files
MAX_BLOCK_DIM = 4
MAX_HEIGHT = 8


def make_rng(seed, *stream):
    """Independent generator for instance ``stream`` under a master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, stream)]))


def cgauss(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_algebra(rng, max_blocks=2, max_dim=3) -> BlockAlgebra:
    nb = int(rng.integers(1, max_blocks + 1))
    return BlockAlgebra(tuple(int(rng.integers(1, max_dim + 1)) for _ in range(nb)))


def random_kraus(rng, A: BlockAlgebra, B: BlockAlgebra, max_rank=2, normalize=True):
    """Kraus operators for every block pair; every codomain block receives at least one."""
    kraus = {}
    for k, m in enumerate(B.block_dims):
        hit = int(rng.integers(A.num_blocks))
        for j, n in enumerate(A.block_dims):
            rank = int(rng.integers(1, max_rank + 1)) if j == hit else int(rng.integers(0, max_rank + 1))
            if rank:
                kraus[(j, k)] = [cgauss(rng, (n, m)) for _ in range(rank)]
    if normalize:
        # scale each codomain block so that ||phi(1)_k|| = 1
        for k in range(B.num_blocks):
            total = sum(la.dagger(K) @ K for (j, kk), ops in kraus.items() if kk == k for K in ops)
            c = 1.0 / np.sqrt(la.spectral_norm(total))
            for key in [key for key in kraus if key[1] == k]:
                kraus[key] = [c * K for K in kraus[key]]
    return kraus


def kraus_phi_map(E: ModuleShape, B: BlockAlgebra, kraus, rng=None, pad=0) -> PhiMap:
    """``Phi(x)_k = stack_{j,i} x_j K_i`` followed by a random isometry adding ``pad`` rows.

    ``<Phi(x), Phi(y)>_k = sum K_i^* x_j^* y_j K_i = phi(<x, y>)_k``.
    """
    A = E.algebra
    phi = from_kraus(A, B, kraus)
    stacks = []
    for k in range(B.num_blocks):
        stacks.append([(j, K) for j in range(A.num_blocks) for K in kraus.get((j, k), ())])
    base = [sum(E.heights[j] for j, _ in st) for st in stacks]
    iso = []
    for h in base:
        if pad and rng is not None:
            iso.append(random_isometry(h + pad, h, rng))
        else:
            iso.append(np.eye(h))
    F = ModuleShape(B, tuple(q.shape[0] for q in iso))

    def func(x):
        blocks = []
        for k, st in enumerate(stacks):
            rows = [x.blocks[j] @ K for j, K in st]
            mat = np.vstack(rows) if rows else np.zeros((0, B.block_dims[k]), complex)
            blocks.append(iso[k] @ mat)
        return F.element(blocks)

    return PhiMap.from_function(E, F, func, phi)


def random_phi_map(rng, max_blocks=2, max_dim=3, max_height=2, max_rank=2, pad=None):
    """A random phi-map ``E -> F`` built from Kraus operators, all heights capped."""
    while True:
        A = random_algebra(rng, max_blocks, max_dim)
        B = random_algebra(rng, max_blocks, max_dim)
        E = ModuleShape(A, tuple(int(rng.integers(1, max_height + 1)) for _ in A.block_dims))
        kraus = random_kraus(rng, A, B, max_rank)
        extra = int(rng.integers(0, 2)) if pad is None else pad
        Phi = kraus_phi_map(E, B, kraus, rng, extra)
        if max(Phi.codomain.heights) <= MAX_HEIGHT:
            return Phi
