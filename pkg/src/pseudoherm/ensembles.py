"""Seeded random instances: unitaries, metrics, states and quasi-Hermitian operators."""

from __future__ import annotations

import numpy as np

from .linalg import dagger, hermitian_part


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def ginibre(dim: int, rng=None) -> np.ndarray:
    rng = _rng(rng)
    return (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)


def random_unitary(dim: int, rng=None) -> np.ndarray:
    """Haar-distributed unitary via QR with phase correction."""
    Q, R = np.linalg.qr(ginibre(dim, rng))
    d = np.diag(R)
    return Q * (d / np.abs(d))


def random_hermitian(dim: int, rng=None) -> np.ndarray:
    return hermitian_part(ginibre(dim, rng))


def random_metric_matrix(dim: int, rng=None, condition: float = 10.0) -> np.ndarray:
    """Random Hermitian PD matrix with eigenvalues log-spread over ``[1, condition]``.

    The eigenbasis is Haar-random, so for composite dimensions the result is
    generically not of product form.
    """
    rng = _rng(rng)
    U = random_unitary(dim, rng)
    w = np.exp(rng.uniform(0.0, np.log(condition), size=dim))
    return hermitian_part((U * w) @ dagger(U))


def random_density(dim: int, rng=None, rank: int | None = None, floor: float = 0.0) -> np.ndarray:
    """Random density matrix of the given rank, mixed with ``floor`` of the identity."""
    rng = _rng(rng)
    rank = dim if rank is None else rank
    X = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = X @ dagger(X)
    rho /= np.trace(rho).real
    rho = (1.0 - floor) * rho + floor * np.eye(dim) / dim
    return hermitian_part(rho)


def random_pure(dim: int, rng=None) -> np.ndarray:
    rng = _rng(rng)
    psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return psi / np.linalg.norm(psi)


def random_real_spectrum(dim: int, rng=None, condition: float = 5.0) -> tuple[np.ndarray, np.ndarray]:
    """Diagonalizable non-Hermitian matrix with a real, well separated spectrum.

    Returns ``(H, eigenvalues)``.  The eigenvector matrix has condition number
    at most ``condition``-ish so metric constructions stay well conditioned.
    """
    rng = _rng(rng)
    values = np.sort(rng.uniform(-1.0, 1.0, size=dim)) + np.arange(dim)
    S = random_unitary(dim, rng) @ np.diag(np.exp(rng.uniform(0.0, np.log(condition), size=dim))) @ random_unitary(dim, rng)
    H = S @ np.diag(values) @ np.linalg.inv(S)
    return H, values


def random_quasi_hermitian(eta: np.ndarray, rng=None) -> np.ndarray:
    """Operator ``eta^{-1} h eta`` with ``h`` random Hermitian: quasi-Hermitian for ``G = eta^2``."""
    h = random_hermitian(eta.shape[0], rng)
    return np.linalg.solve(eta, h @ eta)
