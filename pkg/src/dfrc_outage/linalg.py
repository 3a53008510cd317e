"""Hermitian <-> real coordinate maps shared by the loss, outage and solver code.

A Hermitian ``N x N`` matrix has ``N**2`` real degrees of freedom.  ``hvec``
lays them out as ``[diag, sqrt(2) Re(upper), sqrt(2) Im(upper)]`` with the upper
triangle read diagonal by diagonal, so that ``hvec(X) @ hvec(Y) == Re Tr(X Y^H)``.
Every conic block in this package lives in these coordinates.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

SQRT2 = np.sqrt(2.0)


@lru_cache(maxsize=None)
def upper_diagonalwise(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Row/column indices of the strict upper triangle, offset 1 first, then 2, ..."""
    rows, cols = [], []
    for off in range(1, n):
        r = np.arange(n - off)
        rows.append(r)
        cols.append(r + off)
    if not rows:
        return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
    return np.concatenate(rows), np.concatenate(cols)


def hvec_dim(n: int) -> int:
    return n * n


def hvec(X: np.ndarray) -> np.ndarray:
    """Isometric real coordinates of a Hermitian matrix (last two axes)."""
    X = np.asarray(X)
    n = X.shape[-1]
    r, c = upper_diagonalwise(n)
    diag = np.real(np.diagonal(X, axis1=-2, axis2=-1))
    up = X[..., r, c]
    return np.concatenate([diag, SQRT2 * up.real, SQRT2 * up.imag], axis=-1)


def hmat(v: np.ndarray, n: int | None = None) -> np.ndarray:
    """Inverse of :func:`hvec`."""
    v = np.asarray(v, dtype=float)
    if n is None:
        n = int(round(np.sqrt(v.shape[-1])))
    if n * n != v.shape[-1]:
        raise ValueError(f"vector of length {v.shape[-1]} is not a Hermitian {n}x{n} layout")
    r, c = upper_diagonalwise(n)
    m = len(r)
    X = np.zeros(v.shape[:-1] + (n, n), dtype=complex)
    idx = np.arange(n)
    X[..., idx, idx] = v[..., :n]
    up = (v[..., n:n + m] + 1j * v[..., n + m:]) / SQRT2
    X[..., r, c] = up
    X[..., c, r] = np.conj(up)
    return X


def hermitian_part(X: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Return ``(X + X^H)/2`` if ``X`` is Hermitian to ``tol`` (Frobenius-relative).

    Raises
    ------
    ValueError
        If the anti-Hermitian part is larger than ``tol`` relative to ``X``.
    """
    X = np.asarray(X, dtype=complex)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {X.shape}")
    scale = np.linalg.norm(X)
    skew = np.linalg.norm(X - X.conj().T) / 2
    if scale > 0 and skew > tol * scale:
        raise ValueError(f"matrix is not Hermitian (relative asymmetry {skew / scale:.2e})")
    return (X + X.conj().T) / 2


def real_embedding(X: np.ndarray) -> np.ndarray:
    """Map complex ``X = A + jB`` to the real ``2N x 2N`` matrix ``[[A, -B], [B, A]]``.

    Hermitian PSD ``X`` maps to symmetric PSD with every eigenvalue doubled in
    multiplicity, so traces and squared Frobenius norms pick up a factor 2.
    """
    X = np.asarray(X)
    A, B = X.real, X.imag
    return np.block([[A, -B], [B, A]])


def from_real_embedding(Y: np.ndarray) -> np.ndarray:
    """Recover ``X`` from a (possibly perturbed) real embedding by averaging blocks."""
    Y = np.asarray(Y, dtype=float)
    n = Y.shape[0] // 2
    A = (Y[:n, :n] + Y[n:, n:]) / 2
    B = (Y[n:, :n] - Y[:n, n:]) / 2
    return A + 1j * B


def hermitian_basis_map(n: int, fn) -> np.ndarray:
    """Stack ``fn(E_i)`` over the ``hvec`` basis ``E_i``; columns of the linear map.

    ``fn`` must be real-linear in its Hermitian argument and return a real or
    complex 1-D array.
    """
    d = hvec_dim(n)
    basis = hmat(np.eye(d), n)
    cols = [np.atleast_1d(fn(basis[i])) for i in range(d)]
    return np.stack(cols, axis=-1)
