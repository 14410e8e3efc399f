"""Dense Fock-basis linear algebra used throughout the package.

Everything here is a pure function of its arguments.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

HERMITIAN_TOL = 1e-12


def ladder_matrix(N: int) -> np.ndarray:
    """Truncated annihilation operator on the first ``N`` Fock states."""
    if N < 2:
        raise ValueError(f"truncation dimension must be >= 2, got {N}")
    return np.diag(np.sqrt(np.arange(1, N, dtype=float)), k=1).astype(complex)


def matrix_exp(M: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling-and-squaring with Pade approximants.

    Raises:
        ValueError: if ``M`` is not square.
        OverflowError: if the result contains non-finite entries.
    """
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"matrix_exp needs a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix_exp input has non-finite entries")
    with np.errstate(over="raise", invalid="raise"):
        try:
            out = scipy.linalg.expm(M)
        except FloatingPointError as exc:
            raise OverflowError("matrix exponential overflowed") from exc
    if not np.all(np.isfinite(out)):
        raise OverflowError("matrix exponential overflowed")
    return out


def check_hermitian(M: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    M = np.asarray(M)
    if M.ndim < 2 or M.shape[-1] != M.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {M.shape}")
    dev = np.max(np.abs(M - np.conj(np.swapaxes(M, -1, -2))), initial=0.0)
    if dev > tol:
        raise ValueError(f"matrix is not Hermitian (max deviation {dev:.3e} > {tol:.0e})")


def hermitian_max_eig(M: np.ndarray, tol: float = HERMITIAN_TOL) -> float:
    """Largest eigenvalue of a Hermitian matrix."""
    check_hermitian(M, tol)
    return float(np.linalg.eigvalsh(M)[-1])


def hermitian_max_eig_batch(M: np.ndarray) -> np.ndarray:
    """Largest eigenvalue of each matrix in a ``(..., d, d)`` stack.

    No Hermiticity check: intended for internally assembled real symmetric stacks.
    """
    if M.shape[-1] == 1:
        return np.real(M[..., 0, 0])
    return np.linalg.eigvalsh(M)[..., -1]


def hermite_poly(k: int, z: complex) -> complex:
    """Physicists' Hermite polynomial ``H_k(z)`` via the three-term recurrence.

    Safe range is roughly ``k <= 100`` and ``|z| <= 50``; beyond that the value
    can overflow double precision.
    """
    if k < 0:
        raise ValueError(f"degree must be non-negative, got {k}")
    h_prev, h = 1.0 + 0j, 2.0 * z
    if k == 0:
        return h_prev
    for n in range(1, k):
        h_prev, h = h, 2.0 * z * h - 2.0 * n * h_prev
    return h


def scaled_hermite(n_max: int, c, s) -> np.ndarray:
    """Values ``G_n = A**n * H_n(c / A)`` for ``n = 0..n_max`` with ``s = A**2``.

    ``G_n`` is a polynomial in ``c`` and ``s`` and stays finite as ``A -> 0``,
    where it reduces to ``(2c)**n``. Broadcasts over array-valued ``c`` and ``s``;
    the leading axis of the result indexes ``n``.
    """
    c, s = np.broadcast_arrays(np.asarray(c), np.asarray(s))
    dtype = np.result_type(c, s, float)
    G = np.empty((n_max + 1,) + c.shape, dtype=dtype)
    G[0] = 1.0
    if n_max >= 1:
        G[1] = 2.0 * c
    for n in range(1, n_max):
        G[n + 1] = 2.0 * c * G[n] - 2.0 * n * s * G[n - 1]
    return G
