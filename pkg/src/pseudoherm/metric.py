"""Metric operators, quasi-Hermiticity, Hermitisation and maps between metric spaces.

A metric ``G`` turns the vector space ``C^d`` into the Hilbert space ``H_G``
with inner product ``<psi, phi>_G = psi^H G phi``.  Its principal square root
``eta`` carries ``H_G`` isometrically onto the Euclidean space, and conjugation
by ``eta`` (Hermitisation) turns quasi-Hermitian operators into Hermitian ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ComplexSpectrum,
    DimensionMismatch,
    InvalidState,
    NotUnitary,
    ValidationError,
)
from .linalg import (
    DEFAULT_TOL,
    as_cmatrix,
    as_cvector,
    dagger,
    eig_general,
    eig_matrices,
    hermitian_part,
    is_unitary,
    opnorm,
    sqrt_pd,
)


class Metric:
    """Hermitian positive-definite metric with cached square root and inverses.

    Immutable after construction.
    """

    __slots__ = ("G", "eta", "eta_inv", "G_inv", "dim")

    def __init__(self, G, tol: float = DEFAULT_TOL):
        G = as_cmatrix(G, "G")
        eta = sqrt_pd(G, tol)
        eta_inv = np.linalg.inv(eta)
        object.__setattr__(self, "G", hermitian_part(G))
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "eta_inv", hermitian_part(eta_inv))
        object.__setattr__(self, "G_inv", hermitian_part(eta_inv @ eta_inv))
        object.__setattr__(self, "dim", G.shape[0])
        for name in ("G", "eta", "eta_inv", "G_inv"):
            getattr(self, name).setflags(write=False)

    def __setattr__(self, name, value):
        raise AttributeError("Metric is immutable")

    @classmethod
    def identity(cls, dim: int) -> "Metric":
        return cls(np.eye(dim))

    @classmethod
    def from_eta(cls, eta, tol: float = DEFAULT_TOL) -> "Metric":
        eta = as_cmatrix(eta, "eta")
        return cls(eta @ eta, tol)

    def inner(self, psi, phi) -> complex:
        return complex(np.vdot(psi, self.G @ phi))

    def norm_sq(self, psi) -> float:
        return float(np.real(np.vdot(psi, self.G @ psi)))

    def is_euclidean(self, tol: float = DEFAULT_TOL) -> bool:
        return bool(np.linalg.norm(self.G - np.eye(self.dim), 2) <= tol)

    def __repr__(self) -> str:
        return f"Metric(dim={self.dim}, cond={np.linalg.cond(self.G):.3g})"


def _check_dim(O: np.ndarray, m: Metric, name: str = "operator") -> None:
    if O.shape != (m.dim, m.dim):
        raise DimensionMismatch(f"{name} shape {O.shape} does not match metric dimension {m.dim}")


def metric_from_hamiltonian(H, lam=None, tol: float = DEFAULT_TOL, normalization: str = "unit") -> Metric:
    """Metric ``G = sum_i lam_i l_i l_i^H`` built from the left eigenvectors of ``H``.

    ``l_i`` are scaled so that ``l_i^H r_i = 1``.  With ``normalization="unit"``
    the right vectors ``r_i`` have unit norm, so a Hermitian ``H`` with all-ones
    ``lam`` gives the identity.  With ``"max"`` each ``r_i`` is scaled so its
    largest-magnitude entry equals 1.  The two choices span the same family of
    metrics; they only reparametrize ``lam``.

    The result satisfies ``H^H G = G H`` whenever the spectrum is real.
    Eigenvalues are taken in (real, imag) lexicographic order, and ``lam`` is
    matched to that order.
    """
    H = as_cmatrix(H, "H")
    d = H.shape[0]
    lam = np.ones(d) if lam is None else np.asarray(lam, dtype=float)
    if lam.shape != (d,):
        raise DimensionMismatch(f"lambda must have length {d}, got shape {lam.shape}")
    if not np.all(np.isfinite(lam)) or np.any(lam <= 0):
        raise ValidationError("lambda must be strictly positive")

    if normalization not in ("unit", "max"):
        raise ValidationError("normalization must be 'unit' or 'max'")
    pairs = eig_general(H, tol)
    values, R, L = eig_matrices(pairs)
    if normalization == "max":
        peak = R[np.argmax(np.abs(R), axis=0), np.arange(d)]
        L = L * peak.conj()
    scale = max(opnorm(H), 1.0)
    worst = float(np.max(np.abs(values.imag)))
    if worst > tol * scale:
        raise ComplexSpectrum(f"spectrum is not real (max |Im| = {worst:.3e})")
    G = (L * lam) @ dagger(L)
    return Metric(hermitian_part(G), tol)


def pseudo_hermiticity_residual(O, m: Metric) -> float:
    """``||O^H G - G O|| / (||G|| ||O||)``; zero for the zero operator."""
    O = as_cmatrix(O)
    _check_dim(O, m)
    scale = opnorm(m.G) * opnorm(O)
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(dagger(O) @ m.G - m.G @ O, 2) / scale)


def is_quasi_hermitian(O, m: Metric, tol: float = DEFAULT_TOL) -> tuple[bool, float]:
    """Return ``(ok, relative_residual)`` for the condition ``O^H G = G O``."""
    r = pseudo_hermiticity_residual(O, m)
    return r <= tol, r


def hermitize(O, m: Metric) -> np.ndarray:
    """``eta O eta^{-1}``."""
    O = as_cmatrix(O)
    _check_dim(O, m)
    return m.eta @ O @ m.eta_inv


def dehermitize(O, m: Metric) -> np.ndarray:
    """Inverse of :func:`hermitize`: ``eta^{-1} O eta``."""
    O = as_cmatrix(O)
    _check_dim(O, m)
    return m.eta_inv @ O @ m.eta


def g_adjoint(O, m: Metric) -> np.ndarray:
    """Adjoint in ``H_G``: ``G^{-1} O^H G``."""
    O = as_cmatrix(O)
    _check_dim(O, m)
    return m.G_inv @ dagger(O) @ m.G


@dataclass(frozen=True)
class MapCertificate:
    isometry: bool
    unitary: bool
    residual: float


def check_metric_map(T, source: Metric, target: Metric, tol: float = DEFAULT_TOL) -> MapCertificate:
    """Certify ``T: H_source -> H_target``.

    Isometric iff ``T^H G_target T = G_source`` (relative to ``||G_source||``);
    unitary iff additionally the smallest singular value exceeds ``tol ||T||``.
    """
    T = as_cmatrix(T, "T")
    if source.dim != target.dim:
        raise DimensionMismatch("source and target metrics differ in dimension")
    _check_dim(T, source, "T")
    residual = float(
        np.linalg.norm(dagger(T) @ target.G @ T - source.G, 2) / opnorm(source.G)
    )
    isometry = residual <= tol
    s = np.linalg.svd(T, compute_uv=False)
    invertible = bool(s[-1] > tol * s[0])
    return MapCertificate(isometry=isometry, unitary=isometry and invertible, residual=residual)


@dataclass(frozen=True, eq=False)
class MetricMap:
    """Linear map ``T: H_source -> H_target`` between metric spaces."""

    T: np.ndarray
    source: Metric
    target: Metric

    def certificate(self, tol: float = DEFAULT_TOL) -> MapCertificate:
        return check_metric_map(self.T, self.source, self.target, tol)

    def transport_operator(self, O) -> np.ndarray:
        """Pull an operator on ``H_target`` back to ``H_source``: ``T^{-1} O T``."""
        return np.linalg.solve(self.T, O @ self.T)

    def transport_state(self, state: "MetricState") -> "MetricState":
        if state.metric is not self.target and not np.allclose(state.metric.G, self.target.G):
            raise DimensionMismatch("state does not live on the map's target space")
        return MetricState(self.transport_operator(state.rho_bar), self.source)

    def forward_state(self, state: "MetricState") -> "MetricState":
        """Push a state on ``H_source`` forward to ``H_target``: ``T rho_bar T^{-1}``."""
        if state.metric is not self.source and not np.allclose(state.metric.G, self.source.G):
            raise DimensionMismatch("state does not live on the map's source space")
        return MetricState(self.T @ np.linalg.solve(self.T.T, state.rho_bar.T).T, self.target)

    def inverse(self) -> "MetricMap":
        return MetricMap(np.linalg.inv(self.T), self.target, self.source)


def intertwiner_from_unitary(U, source: Metric, target: Metric, tol: float = 1e-8) -> MetricMap:
    """``T_U = eta^{-1} U^H eta'`` mapping ``H_{G'}`` (source) onto ``H_G`` (target).

    It satisfies ``eta' T_U^{-1} = U eta`` and is certified unitary by
    construction.
    """
    U = as_cmatrix(U, "U")
    _check_dim(U, target, "U")
    if source.dim != target.dim:
        raise DimensionMismatch("source and target metrics differ in dimension")
    if not is_unitary(U, tol):
        raise NotUnitary("U is not unitary")
    T = target.eta_inv @ dagger(U) @ source.eta
    return MetricMap(T, source, target)


@dataclass(frozen=True, eq=False)
class MetricState:
    """Density operator ``rho_bar`` on ``H_G``.

    ``rho_bar`` is related to the Euclidean (Hermitised) density matrix by
    ``rho_bar = eta^{-1} rho eta``; it is G-self-adjoint, has unit trace, and
    its Hermitisation is positive semidefinite.
    """

    rho_bar: np.ndarray
    metric: Metric
    tol: float = field(default=1e-8, compare=False)

    def __post_init__(self):
        rho_bar = as_cmatrix(self.rho_bar, "rho_bar")
        _check_dim(rho_bar, self.metric, "rho_bar")
        object.__setattr__(self, "rho_bar", rho_bar)
        rho = self.metric.eta @ rho_bar @ self.metric.eta_inv
        scale = max(opnorm(rho), 1.0)
        if np.linalg.norm(rho - dagger(rho), 2) > self.tol * scale:
            raise InvalidState("rho_bar is not G-self-adjoint")
        tr = np.trace(rho_bar)
        if abs(tr - 1.0) > self.tol:
            raise InvalidState(f"trace(rho_bar) = {tr:.6g}, expected 1")
        w = np.linalg.eigvalsh(hermitian_part(rho))
        if w[0] < -self.tol:
            raise InvalidState(f"Hermitised state is not PSD (min eigenvalue {w[0]:.3e})")

    @classmethod
    def from_euclidean(cls, rho, metric: Metric, tol: float = 1e-8) -> "MetricState":
        """Wrap a Euclidean density matrix as ``eta^{-1} rho eta``."""
        rho = as_cmatrix(rho, "rho")
        _check_dim(rho, metric, "rho")
        return cls(metric.eta_inv @ rho @ metric.eta, metric, tol)

    @classmethod
    def from_vector(cls, psi, metric: Metric) -> "MetricState":
        """Pure state from a vector of ``H_G``: ``rho_bar = psi psi^H G / <psi, psi>_G``."""
        psi = as_cvector(psi, "psi")
        if psi.shape[0] != metric.dim:
            raise DimensionMismatch("psi does not match metric dimension")
        rho_bar = np.outer(psi, psi.conj()) @ metric.G
        return cls(rho_bar / metric.norm_sq(psi), metric)

    def hermitized(self) -> np.ndarray:
        """The Euclidean density matrix ``eta rho_bar eta^{-1}`` (Hermitian part)."""
        return hermitian_part(self.metric.eta @ self.rho_bar @ self.metric.eta_inv)

    @property
    def dim(self) -> int:
        return self.metric.dim

    def purity(self) -> float:
        rho = self.hermitized()
        return float(np.real(np.trace(rho @ rho)))


def expectation(O, state: MetricState) -> complex:
    """G-Hilbert-Schmidt pairing ``tr(O^* rho_bar)`` with ``O^*`` the G-adjoint.

    For quasi-Hermitian ``O`` this is the physical expectation value, equal to
    ``tr(hermitize(O) rho)``.  Observable validity is not enforced here; use
    :func:`is_quasi_hermitian` when it matters.
    """
    return complex(np.trace(g_adjoint(O, state.metric) @ state.rho_bar))
