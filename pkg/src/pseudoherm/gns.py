"""Finite-dimensional GNS construction.

Algebra elements are concrete matrices.  A :class:`MatrixAlgebra` carries a
Hilbert-Schmidt orthonormal basis whose first element is ``I / sqrt(d)``, so
coordinates of any element are plain HS inner products with the basis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BasisOverflow, DimensionMismatch, NotNormalized, NotPositive, ValidationError
from .linalg import as_cmatrix, dagger, hermitian_part

GRAM_CUTOFF = 1e-10
_INDEPENDENCE = 1e-8


@dataclass(frozen=True, eq=False)
class MatrixAlgebra:
    ambient_dim: int
    basis: tuple[np.ndarray, ...]
    generators: tuple[np.ndarray, ...] = ()
    _stack: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        stack = np.array([b.reshape(-1) for b in self.basis])
        object.__setattr__(self, "_stack", stack)

    @property
    def size(self) -> int:
        return len(self.basis)

    def coordinates(self, X) -> np.ndarray:
        """HS coordinates of ``X`` in the basis (exact when ``X`` lies in the span)."""
        X = np.asarray(X, dtype=np.complex128)
        return self._stack.conj() @ X.reshape(-1)

    def element(self, coords) -> np.ndarray:
        d = self.ambient_dim
        return (np.asarray(coords) @ self._stack).reshape(d, d)

    def span_residual(self, X) -> float:
        X = np.asarray(X, dtype=np.complex128)
        r = X - self.element(self.coordinates(X))
        return float(np.linalg.norm(r) / max(np.linalg.norm(X), 1e-300))

    def contains(self, X, tol: float = 1e-10) -> bool:
        return self.span_residual(X) <= tol

    def left_multiplication(self, i: int) -> np.ndarray:
        """Matrix of ``X -> b_i X`` in basis coordinates."""
        bi = self.basis[i]
        cols = [self.coordinates(bi @ bj) for bj in self.basis]
        return np.column_stack(cols)

    def closure_residual(self) -> float:
        """Worst relative residual of basis products and adjoints re-expanded in the basis."""
        worst = 0.0
        for a in self.basis:
            worst = max(worst, self.span_residual(dagger(a)))
            for b in self.basis:
                worst = max(worst, self.span_residual(a @ b))
        return worst


def _orthonormal_append(stack: list[np.ndarray], candidate: np.ndarray) -> bool:
    v = candidate.reshape(-1).astype(np.complex128)
    norm0 = np.linalg.norm(v)
    if norm0 == 0.0:
        return False
    v = v / norm0
    # Two passes of Gram-Schmidt keep orthogonality at machine precision.
    for _ in range(2):
        for q in stack:
            v = v - np.vdot(q, v) * q
    n = np.linalg.norm(v)
    if n <= _INDEPENDENCE:
        return False
    stack.append(v / n)
    return True


def close_algebra(generators: Sequence, tol: float = 1e-10) -> MatrixAlgebra:
    """Smallest *-algebra (with identity) containing ``generators``.

    Products and adjoints of basis elements are added until the span stops
    growing.  The returned basis is HS-orthonormal and starts with ``I/sqrt(d)``.
    """
    gens = [as_cmatrix(g, "generator") for g in generators]
    if not gens:
        raise ValidationError("at least one generator is required")
    d = gens[0].shape[0]
    if any(g.shape != (d, d) for g in gens):
        raise DimensionMismatch("generators must share one dimension")

    stack: list[np.ndarray] = []
    _orthonormal_append(stack, np.eye(d))
    for g in gens:
        _orthonormal_append(stack, g)
        _orthonormal_append(stack, dagger(g))

    frontier = 0
    while frontier < len(stack):
        if len(stack) > d * d:
            raise BasisOverflow(f"span exceeded {d * d} elements")
        new_start = len(stack)
        mats = [q.reshape(d, d) for q in stack]
        for i in range(len(mats)):
            for j in range(len(mats)):
                if i < frontier and j < frontier:
                    continue
                _orthonormal_append(stack, mats[i] @ mats[j])
            _orthonormal_append(stack, dagger(mats[i]))
        frontier = new_start
    if len(stack) > d * d:
        raise BasisOverflow(f"span exceeded {d * d} elements")

    basis = tuple(q.reshape(d, d) for q in stack)
    algebra = MatrixAlgebra(d, basis, tuple(gens))
    if algebra.closure_residual() > max(tol, 1e-9):
        raise BasisOverflow("algebra closure did not stabilise within tolerance")
    return algebra


def full_matrix_algebra(d: int) -> MatrixAlgebra:
    """``M_d`` with the normalised matrix-unit basis, identity first."""
    units = []
    for i in range(d):
        for j in range(d):
            E = np.zeros((d, d), dtype=np.complex128)
            E[i, j] = 1.0
            units.append(E)
    stack: list[np.ndarray] = []
    _orthonormal_append(stack, np.eye(d))
    for E in units:
        _orthonormal_append(stack, E)
    return MatrixAlgebra(d, tuple(q.reshape(d, d) for q in stack), tuple(units))


@dataclass(frozen=True, eq=False)
class StateFunctional:
    """Linear functional given by its values on the algebra basis."""

    algebra: MatrixAlgebra
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128).reshape(-1)
        if vals.shape[0] != self.algebra.size:
            raise DimensionMismatch(f"need {self.algebra.size} values, got {vals.shape[0]}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_density(cls, algebra: MatrixAlgebra, rho) -> "StateFunctional":
        """``omega(X) = tr(rho X)``."""
        rho = as_cmatrix(rho, "rho")
        if rho.shape != (algebra.ambient_dim,) * 2:
            raise DimensionMismatch("density does not match algebra dimension")
        return cls(algebra, np.array([np.trace(rho @ b) for b in algebra.basis]))

    def __call__(self, X) -> complex:
        return complex(self.algebra.coordinates(X) @ self.values)

    def gram(self) -> np.ndarray:
        """``Gamma[i, j] = omega(b_i^H b_j)``."""
        B = self.algebra.basis
        n = len(B)
        gamma = np.empty((n, n), dtype=np.complex128)
        for i in range(n):
            bi_h = dagger(B[i])
            for j in range(n):
                gamma[i, j] = self(bi_h @ B[j])
        return hermitian_part(gamma)

    def normalization(self) -> complex:
        return self(np.eye(self.algebra.ambient_dim))


@dataclass(frozen=True, eq=False)
class GnsRepresentation:
    """GNS triple: ``rep[i]`` represents ``algebra.basis[i]`` on ``C^hilbert_dim``.

    ``quotient`` maps algebra coordinates to Hilbert-space coordinates; the
    kernel of the state is exactly its null space.
    """

    hilbert_dim: int
    rep: tuple[np.ndarray, ...]
    cyclic_vector: np.ndarray
    quotient: np.ndarray
    algebra: MatrixAlgebra
    state: StateFunctional
    gram_spectrum: np.ndarray = field(repr=False, default=None)

    def represent(self, X) -> np.ndarray:
        """Image of an arbitrary algebra element under the representation."""
        c = self.algebra.coordinates(X)
        return np.tensordot(c, np.array(self.rep), axes=1)

    def vector(self, X) -> np.ndarray:
        """GNS vector ``psi_X`` (image of ``X`` in the quotient)."""
        return self.quotient @ self.algebra.coordinates(X)

    def expectation(self, X) -> complex:
        O = self.cyclic_vector
        return complex(np.vdot(O, self.represent(X) @ O))

    def residuals(self) -> dict[str, float]:
        """Reconstruction, homomorphism, *-compatibility and cyclicity diagnostics."""
        B = self.algebra.basis
        recon = max(abs(self.expectation(b) - self.state(b)) for b in B)
        hom = 0.0
        star = 0.0
        for i, a in enumerate(B):
            star = max(star, float(np.linalg.norm(self.represent(dagger(a)) - dagger(self.rep[i]), 2)))
            for j, b in enumerate(B):
                diff = self.represent(a @ b) - self.rep[i] @ self.rep[j]
                hom = max(hom, float(np.linalg.norm(diff, 2)))
        orbit = np.column_stack([r @ self.cyclic_vector for r in self.rep])
        rank = int(np.linalg.matrix_rank(orbit, tol=1e-8))
        return {
            "reconstruction": float(recon),
            "homomorphism": hom,
            "star": star,
            "cyclic_rank_deficit": float(self.hilbert_dim - rank),
        }

    def density_in_represented_algebra(self, tol: float = 1e-8) -> tuple[bool, float]:
        """Whether ``|Omega><Omega|`` lies in the span of the represented algebra."""
        O = self.cyclic_vector
        target = np.outer(O, O.conj()).reshape(-1)
        A = np.column_stack([r.reshape(-1) for r in self.rep])
        coef, *_ = np.linalg.lstsq(A, target, rcond=None)
        res = float(np.linalg.norm(A @ coef - target) / max(np.linalg.norm(target), 1e-300))
        return res <= tol, res


def _fix_phases(V: np.ndarray) -> np.ndarray:
    V = V.copy()
    for k in range(V.shape[1]):
        idx = int(np.argmax(np.abs(V[:, k])))
        ph = V[idx, k] / abs(V[idx, k])
        V[:, k] /= ph
    return V


def gns_construct(omega: StateFunctional, tol: float = 1e-10) -> GnsRepresentation:
    """Quotient the algebra by the null ideal of ``omega`` and represent it by left multiplication.

    With ``Gamma = V diag(w) V^H`` restricted to ``w > cutoff``, the quotient map
    is ``Q = diag(sqrt(w)) V^H``, so GNS vectors carry the Euclidean inner
    product, and ``rep(b_i) = Q L_i Q^+`` with ``L_i`` the left-multiplication
    matrix of ``b_i``.
    """
    alg = omega.algebra
    norm = omega.normalization()
    if abs(norm - 1.0) > max(tol, 1e-10) * 100:
        raise NotNormalized(f"omega(I) = {norm:.6g}, expected 1")
    gamma = omega.gram()
    w, V = np.linalg.eigh(gamma)
    top = max(float(w[-1]), 1e-300)
    if w[0] < -max(tol, 1e-10) * max(top, 1.0) * 100:
        raise NotPositive(f"state is not positive (Gram eigenvalue {w[0]:.3e})")
    order = np.argsort(w)[::-1]
    w, V = w[order], V[:, order]
    keep = w > GRAM_CUTOFF * top
    w, V = w[keep], _fix_phases(V[:, keep])
    r = int(w.shape[0])

    Q = np.sqrt(w)[:, None] * dagger(V)
    Q_pinv = V / np.sqrt(w)[None, :]
    rep = tuple(Q @ alg.left_multiplication(i) @ Q_pinv for i in range(alg.size))
    cyclic = Q @ alg.coordinates(np.eye(alg.ambient_dim))
    return GnsRepresentation(r, rep, cyclic, Q, alg, omega, gram_spectrum=w)


def product_representation(r1: GnsRepresentation, r2: GnsRepresentation) -> GnsRepresentation:
    """Tensor product of two GNS representations with the product state.

    The product algebra has basis ``b_i (x) c_j`` (flattened with ``j`` fastest)
    and the state ``omega(b_i (x) c_j) = omega_1(b_i) omega_2(c_j)``.
    """
    a1, a2 = r1.algebra, r2.algebra
    basis = tuple(np.kron(b, c) for b in a1.basis for c in a2.basis)
    gens = tuple(np.kron(g, np.eye(a2.ambient_dim)) for g in a1.generators) + tuple(
        np.kron(np.eye(a1.ambient_dim), g) for g in a2.generators
    )
    alg = MatrixAlgebra(a1.ambient_dim * a2.ambient_dim, basis, gens)
    values = np.kron(r1.state.values, r2.state.values)
    state = StateFunctional(alg, values)
    rep = tuple(np.kron(p, q) for p in r1.rep for q in r2.rep)
    spectrum = None
    if r1.gram_spectrum is not None and r2.gram_spectrum is not None:
        spectrum = np.kron(r1.gram_spectrum, r2.gram_spectrum)
    return GnsRepresentation(
        r1.hilbert_dim * r2.hilbert_dim,
        rep,
        np.kron(r1.cyclic_vector, r2.cyclic_vector),
        np.kron(r1.quotient, r2.quotient),
        alg,
        state,
        gram_spectrum=spectrum,
    )
