"""Dense linear-algebra kernels shared by every module.

All rank decisions go through :func:`rank_threshold` so that GNS quotients,
commutants and kernels agree on what counts as zero.
"""
import numpy as np
import scipy.linalg as sla

DEFAULT_TOL = 1e-9


def as_complex(a):
    arr = np.asarray(a, dtype=complex)
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix entries must be finite")
    return arr


def dagger(a):
    return np.conj(np.swapaxes(a, -1, -2))


def spectral_norm(a):
    """Largest singular value; 0 for empty matrices."""
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def max_abs(a):
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def herm(a):
    return 0.5 * (a + dagger(a))


def rank_threshold(values, tol):
    """Cut-off below which singular values (or Gram eigenvalues) count as zero."""
    values = np.asarray(values)
    if values.size == 0:
        return 0.0
    top = float(np.max(np.abs(values)))
    return tol * top


def gram_factor(gram, tol=DEFAULT_TOL):
    """Factor a PSD Gram matrix as ``G = Y^* Y`` with ``Y`` of full row rank.

    Eigenvalues at or below ``tol * lambda_max`` are discarded.  Returns
    ``(Y, Y_pinv)`` where ``Y_pinv`` is the right inverse ``U diag(1/sqrt(l))``.
    """
    gram = herm(np.asarray(gram, dtype=complex))
    n = gram.shape[0]
    if n == 0:
        return np.zeros((0, 0), complex), np.zeros((0, 0), complex)
    evals, evecs = np.linalg.eigh(gram)
    keep = evals > rank_threshold(evals, tol)
    lam = evals[keep][::-1]
    vecs = evecs[:, keep][:, ::-1]
    root = np.sqrt(lam)
    y = root[:, None] * dagger(vecs)
    y_pinv = vecs / root[None, :]
    return y, y_pinv


def psd_sqrt(a, clamp=True):
    a = herm(np.asarray(a, dtype=complex))
    if a.shape[0] == 0:
        return a.copy()
    evals, evecs = np.linalg.eigh(a)
    if clamp:
        evals = np.clip(evals, 0.0, None)
    return (evecs * np.sqrt(evals)) @ dagger(evecs)


def psd_power(a, p):
    a = herm(np.asarray(a, dtype=complex))
    if a.shape[0] == 0:
        return a.copy()
    evals, evecs = np.linalg.eigh(a)
    evals = np.clip(evals, 0.0, None)
    return (evecs * evals**p) @ dagger(evecs)


def min_eigenvalue(a):
    a = herm(np.asarray(a, dtype=complex))
    if a.shape[0] == 0:
        return 0.0
    return float(np.linalg.eigvalsh(a)[0])


def null_space(a, tol=DEFAULT_TOL):
    """Orthonormal null-space basis (columns) with a relative SVD cut-off."""
    a = np.asarray(a, dtype=complex)
    ncols = a.shape[1]
    if a.shape[0] == 0:
        return np.eye(ncols, dtype=complex)
    if ncols == 0:
        return np.zeros((0, 0), complex)
    _, s, vh = sla.svd(a, full_matrices=True, lapack_driver="gesvd")
    cut = rank_threshold(s, tol)
    rank = int(np.sum(s > cut)) if s.size and s[0] > 0 else 0
    return dagger(vh[rank:])


def range_basis(a, tol=DEFAULT_TOL):
    """Orthonormal basis (columns) of the column space of ``a``."""
    a = np.asarray(a, dtype=complex)
    if a.size == 0:
        return np.zeros((a.shape[0], 0), complex)
    u, s, _ = sla.svd(a, full_matrices=False, lapack_driver="gesvd")
    cut = rank_threshold(s, tol)
    rank = int(np.sum(s > cut)) if s[0] > 0 else 0
    return u[:, :rank]


def matrix_rank(a, tol=DEFAULT_TOL):
    return range_basis(a, tol).shape[1]


def right_inverse_solve(targets, sources, tol=DEFAULT_TOL):
    """Least-squares ``X`` with ``X @ sources ~= targets``; returns ``(X, residual)``."""
    sources = np.asarray(sources, dtype=complex)
    targets = np.asarray(targets, dtype=complex)
    if sources.shape[0] == 0:
        x = np.zeros((targets.shape[0], 0), complex)
        return x, max_abs(targets)
    if targets.shape[0] == 0:
        return np.zeros((0, sources.shape[0]), complex), 0.0
    x = targets @ np.linalg.pinv(sources, rcond=1e-12)
    return x, max_abs(x @ sources - targets)


def flatten_rows(a):
    """Merge all trailing axes; unlike ``reshape(n, -1)`` this survives ``n == 0``."""
    return a.reshape(a.shape[0], int(np.prod(a.shape[1:])))
