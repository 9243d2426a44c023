"""Small dense linear algebra for the recovery toolkit.

Vectors and matrices are plain float64 numpy arrays. The module houses
the shrinkage (soft-thresholding) operators, SVD and symmetric
eigendecompositions with explicit accuracy contracts, and the smallest
strictly positive eigenvalue used by the convergence constants.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from . import _kernels

# relative cutoff below which an eigenvalue counts as zero
EPS_RANK = 1e-10
# largest dimension svd/sym_eig accept; everything here is desk scale
SIZE_CAP = 512


class SvdResult(NamedTuple):
    """Thin SVD: U has orthonormal columns, sigma is descending >= 0,
    V has orthonormal columns, and U @ diag(sigma) @ V.T reconstructs
    the input."""

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray


class SymEigResult(NamedTuple):
    """Eigenvalues ascending, eigenvectors as orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_vector(v, name="vector"):
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def as_matrix(X, name="matrix"):
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def shrink(v, mu=1.0):
    """Soft-thresholding sign(v_i) * max(|v_i| - mu, 0), componentwise.

    Parameters
    ----------
    v : array_like
        Vector (or any array, applied elementwise).
    mu : float
        Threshold, must be positive. Defaults to 1, the value used by
        the smoothed duals.
    """
    if mu <= 0:
        raise ValueError("shrink threshold mu must be positive")
    arr = np.ascontiguousarray(v, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("shrink input has non-finite entries")
    return _kernels.shrink_vec(arr, float(mu))


def svd(X, size_cap=SIZE_CAP):
    """Thin SVD of a small dense matrix.

    Reconstruction error is at most 1e-10 * ||X||_F and orthonormality
    defects at most 1e-10. Matrices larger than `size_cap` in either
    dimension are refused.
    """
    X = as_matrix(X, "svd input")
    if max(X.shape) > size_cap:
        raise ValueError(
            f"matrix of shape {X.shape} exceeds the size cap {size_cap}"
        )
    try:
        U, sigma, Vh = np.linalg.svd(X, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(f"SVD did not converge: {exc}") from exc
    return SvdResult(U, sigma, Vh.T)


def sv_shrink(X, mu=1.0):
    """Singular value soft-thresholding U diag(shrink(sigma, mu)) V'."""
    res = svd(X)
    return (res.U * shrink(res.sigma, mu)) @ res.V.T


def sym_eig(S):
    """Eigendecomposition of a symmetric matrix, eigenvalues ascending.

    The input must be symmetric to within 1e-12 relative tolerance;
    it is symmetrized before factorization so the result is exact for
    the nearby symmetric matrix.
    """
    S = as_matrix(S, "sym_eig input")
    if S.shape[0] != S.shape[1]:
        raise ValueError("sym_eig input must be square")
    scale = np.abs(S).max() if S.size else 0.0
    if np.abs(S - S.T).max() > 1e-12 * max(scale, 1e-300):
        raise ValueError("matrix is not symmetric within tolerance")
    w, Q = np.linalg.eigh(0.5 * (S + S.T))
    return SymEigResult(w, Q)


def lambda_min_pp(S, eps_rank=EPS_RANK):
    """Smallest strictly positive eigenvalue of a symmetric PSD matrix.

    Eigenvalues at or below eps_rank * lambda_max count as zero; an all-
    zero (or negative semidefinite) matrix is rejected because the
    quantity is undefined there.
    """
    res = sym_eig(S)
    w = res.eigenvalues
    lam_max = w[-1]
    if lam_max <= 0.0:
        raise ValueError("matrix has no strictly positive eigenvalue")
    if w[0] < -1e-8 * lam_max:
        raise ValueError("matrix is not positive semidefinite")
    positive = w[w > eps_rank * lam_max]
    if positive.size == 0:
        raise ValueError("all eigenvalues fall below the rank threshold")
    return float(positive[0])


def spectral_norm(A):
    """Largest singular value."""
    A = as_matrix(A, "spectral_norm input")
    if A.size == 0 or not A.any():
        return 0.0
    return float(np.linalg.svd(A, compute_uv=False)[0])


def nuclear_norm(X):
    """Sum of singular values."""
    X = as_matrix(X, "nuclear_norm input")
    if X.size == 0 or not X.any():
        return 0.0
    return float(np.linalg.svd(X, compute_uv=False).sum())
