"""Dense complex linear-algebra kernels.

Everything here is pure: inputs are never modified and every result is a fresh
``complex128`` array.  Tolerances are relative to the operator 2-norm of the
input unless stated otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatch,
    NonDiagonalizable,
    NotFinite,
    NotHermitian,
    NotPositiveDefinite,
    ValidationError,
)

DEFAULT_TOL = 1e-10


def as_cmatrix(M, name: str = "matrix", square: bool = True) -> np.ndarray:
    """Validate ``M`` as a finite 2-D complex matrix and return a complex copy."""
    A = np.array(M, dtype=np.complex128)
    if A.ndim != 2 or A.size == 0:
        raise DimensionMismatch(f"{name} must be a non-empty 2-D array, got shape {A.shape}")
    if square and A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NotFinite(f"{name} has non-finite entries")
    return A


def as_cvector(v, name: str = "vector") -> np.ndarray:
    x = np.array(v, dtype=np.complex128)
    if x.ndim != 1 or x.size == 0:
        raise DimensionMismatch(f"{name} must be a non-empty 1-D array, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NotFinite(f"{name} has non-finite entries")
    return x


def opnorm(M: np.ndarray) -> float:
    return float(np.linalg.norm(M, 2))


def dagger(M: np.ndarray) -> np.ndarray:
    return np.conj(np.transpose(M))


def hermitian_part(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + dagger(M))


def is_hermitian(M: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    scale = max(opnorm(M), 1.0)
    return bool(np.linalg.norm(M - dagger(M), 2) <= tol * scale)


def is_unitary(U: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    U = np.asarray(U)
    eye = np.eye(U.shape[0])
    return bool(np.linalg.norm(dagger(U) @ U - eye, 2) <= tol)


@dataclass(frozen=True)
class EigenPair:
    """One eigenvalue with its right and left eigenvectors.

    Right vectors have unit Euclidean norm; left vectors are scaled so that
    ``left.conj() @ right == 1``.
    """

    value: complex
    right_vector: np.ndarray
    left_vector: np.ndarray


def eig_general(M, tol: float = DEFAULT_TOL) -> list[EigenPair]:
    """Biorthonormal eigendecomposition of a diagonalizable square matrix.

    Values are sorted lexicographically by (real, imaginary) part.  The left
    vectors are the rows of ``R^{-1}`` (conjugated), which makes the full system
    biorthonormal even inside degenerate eigenspaces.

    Raises :class:`NonDiagonalizable` when the unit-normalised right
    eigenvectors are numerically dependent (smallest singular value below
    ``tol``), which is the Jordan-block signature.
    """
    A = as_cmatrix(M)
    values, R = scipy.linalg.eig(A)
    order = np.lexsort((values.imag, values.real))
    values = values[order]
    R = R[:, order]
    R = R / np.linalg.norm(R, axis=0, keepdims=True)

    pivot = np.linalg.svd(R, compute_uv=False)[-1]
    if pivot < tol:
        raise NonDiagonalizable(
            f"eigenvectors are linearly dependent (smallest singular value {pivot:.3e} < {tol:.1e})"
        )
    L = dagger(np.linalg.inv(R))
    return [EigenPair(complex(values[i]), R[:, i].copy(), L[:, i].copy()) for i in range(len(values))]


def eig_matrices(pairs: list[EigenPair]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stack a decomposition into (values, R, L) with eigenvectors as columns."""
    values = np.array([p.value for p in pairs])
    R = np.column_stack([p.right_vector for p in pairs])
    L = np.column_stack([p.left_vector for p in pairs])
    return values, R, L


def sqrt_pd(G, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Principal square root of a Hermitian positive-definite matrix."""
    A = as_cmatrix(G, "G")
    scale = max(opnorm(A), 1.0)
    if np.linalg.norm(A - dagger(A), 2) > tol * scale:
        raise NotHermitian("matrix is not Hermitian")
    w, V = np.linalg.eigh(hermitian_part(A))
    if w[0] <= tol * scale:
        raise NotPositiveDefinite(
            f"matrix is not positive definite (smallest eigenvalue {w[0]:.3e})",
            smallest_eigenvalue=float(w[0]),
        )
    eta = (V * np.sqrt(w)) @ dagger(V)
    return hermitian_part(eta)


def inv_sqrt_pd(G, tol: float = DEFAULT_TOL) -> np.ndarray:
    A = as_cmatrix(G, "G")
    w, V = np.linalg.eigh(hermitian_part(A))
    if w[0] <= tol * max(float(w[-1]), 1.0):
        raise NotPositiveDefinite("matrix is not positive definite", smallest_eigenvalue=float(w[0]))
    return hermitian_part((V / np.sqrt(w)) @ dagger(V))


def kron(A, B) -> np.ndarray:
    return np.kron(as_cmatrix(A, "A", square=False), as_cmatrix(B, "B", square=False))


def kron_all(*ops) -> np.ndarray:
    out = np.ones((1, 1), dtype=np.complex128)
    for op in ops:
        out = np.kron(out, np.asarray(op, dtype=np.complex128))
    return out


def _check_dims(M: np.ndarray, dims) -> tuple[int, int]:
    try:
        d1, d2 = (int(d) for d in dims)
    except (TypeError, ValueError) as exc:
        raise DimensionMismatch(f"dims must be a pair of positive integers, got {dims!r}") from exc
    if d1 < 1 or d2 < 1:
        raise DimensionMismatch(f"dims must be positive, got {dims!r}")
    if M.shape != (d1 * d2, d1 * d2):
        raise DimensionMismatch(f"matrix shape {M.shape} does not match dims {d1}x{d2}")
    return d1, d2


def partial_trace(M, dims, keep: int) -> np.ndarray:
    """Trace out one factor of a bipartite operator; ``keep`` is 0 or 1."""
    A = as_cmatrix(M)
    d1, d2 = _check_dims(A, dims)
    T = A.reshape(d1, d2, d1, d2)
    if keep == 0:
        return np.einsum("ijkj->ik", T)
    if keep == 1:
        return np.einsum("ijil->jl", T)
    raise ValidationError(f"keep must be 0 or 1, got {keep!r}")


def reshuffle(M, dims) -> np.ndarray:
    """Realignment ``R[(i,k),(j,l)] = M[(i,j),(k,l)]``; shape ``(d1^2, d2^2)``."""
    A = as_cmatrix(M)
    d1, d2 = _check_dims(A, dims)
    return A.reshape(d1, d2, d1, d2).transpose(0, 2, 1, 3).reshape(d1 * d1, d2 * d2)
