"""Bipartitions of a metric Hilbert space and equivalence of metric choices.

Two metrics ``G`` and ``G'`` connected by a unitary intertwiner
``T: H_{G'} -> H_G`` induce the same subsystem decomposition exactly when
``V = eta' T^{-1} eta^{-1}`` is a local unitary ``U1 (x) U2``.  Locality is
decided by the operator Schmidt rank of ``V``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import (
    DimensionMismatch,
    IncompatibleMetric,
    MixedGlobalState,
    NotIntertwiner,
    NotUnitary,
)
from .linalg import (
    as_cmatrix,
    dagger,
    eig_general,
    eig_matrices,
    hermitian_part,
    is_unitary,
    partial_trace,
    reshuffle,
)
from .metric import Metric, MetricState, check_metric_map, is_quasi_hermitian

PRODUCT_TOL = 1e-8
CLUSTER_TOL = 1e-8


def _dims(dims) -> tuple[int, int]:
    d1, d2 = (int(d) for d in dims)
    if d1 < 1 or d2 < 1:
        raise DimensionMismatch(f"dims must be positive, got {dims!r}")
    return d1, d2


@dataclass(frozen=True, eq=False)
class Bipartition:
    """Tensor product structure: ``tps_map`` sends ``H_G`` onto ``C^d1 (x) C^d2``."""

    dims: tuple[int, int]
    tps_map: np.ndarray

    def __post_init__(self):
        d1, d2 = _dims(self.dims)
        T = as_cmatrix(self.tps_map, "tps_map")
        if T.shape != (d1 * d2, d1 * d2):
            raise DimensionMismatch("tps_map does not match dims")
        s = np.linalg.svd(T, compute_uv=False)
        if s[-1] <= 1e-12 * s[0]:
            raise DimensionMismatch("tps_map is not invertible")
        object.__setattr__(self, "dims", (d1, d2))
        object.__setattr__(self, "tps_map", T)

    @classmethod
    def from_metric(cls, metric: Metric, dims) -> "Bipartition":
        """The Hermitisation TPS ``psi -> eta psi``."""
        return cls(tuple(dims), metric.eta)

    def local_operator(self, O, factor: int) -> np.ndarray:
        """Operator on ``H_G`` acting as ``O`` on one factor: ``phi^{-1} (O (x) I) phi``."""
        d1, d2 = self.dims
        O = as_cmatrix(O)
        if factor == 0:
            full = np.kron(O, np.eye(d2))
        elif factor == 1:
            full = np.kron(np.eye(d1), O)
        else:
            raise DimensionMismatch("factor must be 0 or 1")
        return np.linalg.solve(self.tps_map, full @ self.tps_map)


@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    """``M = sum_k c_k A_k (x) B_k`` with HS-orthonormal ``A_k`` and ``B_k``."""

    coefficients: np.ndarray
    left_ops: tuple[np.ndarray, ...]
    right_ops: tuple[np.ndarray, ...]
    dims: tuple[int, int]
    singular_values: np.ndarray = field(repr=False)

    @property
    def rank(self) -> int:
        return len(self.coefficients)

    def reconstruct(self) -> np.ndarray:
        d1, d2 = self.dims
        out = np.zeros((d1 * d2, d1 * d2), dtype=np.complex128)
        for c, A, B in zip(self.coefficients, self.left_ops, self.right_ops):
            out += c * np.kron(A, B)
        return out


def operator_schmidt(M, dims, tol: float = 1e-12) -> SchmidtDecomposition:
    """Operator Schmidt decomposition via SVD of the realigned matrix.

    Terms with coefficient at most ``tol`` times the largest are dropped; the
    full singular spectrum is kept in ``singular_values``.
    """
    d1, d2 = _dims(dims)
    R = reshuffle(M, (d1, d2))
    U, s, Vh = np.linalg.svd(R)
    keep = s > tol * s[0] if s.size and s[0] > 0 else np.zeros_like(s, dtype=bool)
    k = int(np.count_nonzero(keep))
    left = tuple(U[:, i].reshape(d1, d1) for i in range(k))
    right = tuple(Vh[i, :].reshape(d2, d2) for i in range(k))
    return SchmidtDecomposition(s[:k].copy(), left, right, (d1, d2), s)


def _largest_entry_phase(M: np.ndarray) -> complex:
    flat = M.reshape(-1)
    idx = int(np.argmax(np.abs(flat) - 1e-12 * np.arange(flat.size)))
    return flat[idx] / abs(flat[idx])


def is_local_unitary(U, dims, tol: float = PRODUCT_TOL, unitary_tol: float = 1e-8):
    """Return ``(U1, U2)`` with ``U = U1 (x) U2`` if ``U`` is local, else ``None``.

    ``U2`` is normalised so that its largest-magnitude entry is real positive;
    the global phase is carried by ``U1``.
    """
    U = as_cmatrix(U, "U")
    if not is_unitary(U, unitary_tol):
        raise NotUnitary("input is not unitary")
    d1, d2 = _dims(dims)
    dec = operator_schmidt(U, (d1, d2), tol=0.0)
    s = dec.singular_values
    if s.size > 1 and s[1] > tol * s[0]:
        return None
    A, B = dec.left_ops[0], dec.right_ops[0]
    U2 = B * np.sqrt(d2)
    U1 = A * (s[0] / np.sqrt(d2))
    ph = _largest_entry_phase(U2)
    return U1 * ph, U2 / ph


class Verdict(str, enum.Enum):
    EQUIVALENT = "equivalent"
    NOT_EQUIVALENT = "not_equivalent"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True, eq=False)
class EquivalenceReport:
    verdict: Verdict
    witness: tuple[np.ndarray, np.ndarray] | None
    V: np.ndarray | None
    schmidt_values: np.ndarray | None
    residuals: dict = field(default_factory=dict)
    search: dict = field(default_factory=dict)
    T: np.ndarray | None = None

    @property
    def equivalent(self) -> bool:
        return self.verdict is Verdict.EQUIVALENT


def _witness_residual(V: np.ndarray, witness) -> float:
    U1, U2 = witness
    return float(np.linalg.norm(np.kron(U1, U2) - V, 2))


def same_bipartition(G: Metric, G_prime: Metric, T, dims, tol: float = PRODUCT_TOL) -> EquivalenceReport:
    """Decide whether ``H_G`` and ``H_{G'}`` carry the same bipartition.

    ``T`` must be a certified unitary ``H_{G'} -> H_G``.  The decision is made on
    ``V = eta' T^{-1} eta^{-1}``: equivalent iff ``V`` is a local unitary.
    """
    d1, d2 = _dims(dims)
    T = as_cmatrix(T, "T")
    if G.dim != d1 * d2 or G_prime.dim != d1 * d2:
        raise DimensionMismatch("metric dimension does not match dims")
    cert = check_metric_map(T, G_prime, G, tol=max(tol, 1e-10))
    if not cert.unitary:
        raise NotIntertwiner(f"T is not a unitary map H_G' -> H_G (residual {cert.residual:.3e})")
    V = G_prime.eta @ np.linalg.solve(T, G.eta_inv)
    unitarity = float(np.linalg.norm(dagger(V) @ V - np.eye(V.shape[0]), 2))
    s = operator_schmidt(V, (d1, d2), tol=0.0).singular_values
    residuals = {"intertwiner": cert.residual, "v_unitarity": unitarity}
    witness = None
    if unitarity <= max(tol, 1e-10) * 100:
        witness = is_local_unitary(V, (d1, d2), tol=tol, unitary_tol=max(unitarity * 10, 1e-8))
    if witness is not None:
        residuals["witness"] = _witness_residual(V, witness)
        verdict = Verdict.EQUIVALENT
    else:
        verdict = Verdict.NOT_EQUIVALENT
    residuals["schmidt_ratio"] = float(s[1] / s[0]) if s.size > 1 else 0.0
    return EquivalenceReport(verdict, witness, V, s, residuals, T=T)


def _eigen_clusters(values: np.ndarray, tol: float) -> list[list[int]]:
    clusters: list[list[int]] = []
    for i, v in enumerate(values):
        for c in clusters:
            if abs(values[c[0]] - v) <= tol * max(1.0, abs(v)):
                c.append(i)
                break
        else:
            clusters.append([i])
    return clusters


def _inv_sqrt_herm(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w, V = np.linalg.eigh(hermitian_part(A))
    return (V * np.sqrt(w)) @ dagger(V), (V / np.sqrt(w)) @ dagger(V)


def _hermitian_from_params(x: np.ndarray, m: int) -> np.ndarray:
    Hm = np.zeros((m, m), dtype=np.complex128)
    Hm[np.diag_indices(m)] = x[:m]
    iu = np.triu_indices(m, 1)
    n_off = len(iu[0])
    Hm[iu] = x[m:m + n_off] + 1j * x[m + n_off:m + 2 * n_off]
    return Hm + np.triu(Hm, 1).conj().T


def hamiltonian_compatible_class(
    H,
    G: Metric,
    G_prime: Metric,
    dims,
    tol: float = PRODUCT_TOL,
    search_budget: int = 32,
    seed: int = 0,
    qh_tol: float = 1e-8,
) -> EquivalenceReport:
    """Search the commutant of ``H`` for an intertwiner with a local witness.

    In the eigenbasis ``R`` of ``H`` both metrics are block diagonal (one block
    per eigenvalue cluster).  Every commuting ``T`` with ``T^H G T = G'`` is
    ``R C R^{-1}`` with blocks ``C_k = Ghat_k^{-1/2} W_k Ghat'_k^{1/2}`` and
    ``W_k`` unitary, so the search runs over block unitaries ``W_k``.  The
    objective is the second operator-Schmidt ratio of ``V``.  The first
    candidate is ``W = I``; further candidates are seeded random restarts
    refined by Nelder-Mead.  The outcome is ``equivalent`` (with a certified
    witness) or ``undetermined``; the search is sound but not complete.
    """
    H = as_cmatrix(H, "H")
    d1, d2 = _dims(dims)
    for name, m in (("G", G), ("G'", G_prime)):
        ok, r = is_quasi_hermitian(H, m, qh_tol)
        if not ok:
            raise IncompatibleMetric(f"H is not quasi-Hermitian with respect to {name} (residual {r:.3e})")

    values, R, _ = eig_matrices(eig_general(H))
    R_inv = np.linalg.inv(R)
    clusters = _eigen_clusters(values.real, CLUSTER_TOL)
    Ghat = dagger(R) @ G.G @ R
    Ghat_p = dagger(R) @ G_prime.G @ R
    blocks = []
    for idx in clusters:
        sq, _ = _inv_sqrt_herm(Ghat_p[np.ix_(idx, idx)])
        _, isq = _inv_sqrt_herm(Ghat[np.ix_(idx, idx)])
        blocks.append((idx, isq, sq))
    n_params = sum(len(idx) ** 2 for idx, _, _ in blocks)

    def build_T(x: np.ndarray) -> np.ndarray:
        C = np.zeros_like(Ghat)
        offset = 0
        for idx, isq, sq in blocks:
            m = len(idx)
            W = scipy.linalg.expm(1j * _hermitian_from_params(x[offset:offset + m * m], m))
            offset += m * m
            C[np.ix_(idx, idx)] = isq @ W @ sq
        return R @ C @ R_inv

    def objective(x: np.ndarray) -> float:
        T = build_T(x)
        V = G_prime.eta @ np.linalg.solve(T, G.eta_inv)
        s = np.linalg.svd(reshuffle(V, (d1, d2)), compute_uv=False)
        return float(s[1] / s[0]) if s.size > 1 else 0.0

    streams = np.random.SeedSequence(seed).spawn(max(int(search_budget), 1))
    best = (np.inf, None)
    trace = []
    for k, ss in enumerate(streams):
        if k == 0:
            x0 = np.zeros(n_params)
        else:
            x0 = np.random.default_rng(ss).uniform(-np.pi, np.pi, size=n_params)
        f0 = objective(x0)
        if f0 > tol and n_params:
            res = scipy.optimize.minimize(
                objective, x0, method="Nelder-Mead",
                options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 400 * n_params},
            )
            x, f = res.x, float(res.fun)
            if f0 < f:
                x, f = x0, f0
        else:
            x, f = x0, f0
        trace.append(f)
        if f < best[0]:
            best = (f, x)
        if f <= tol:
            break

    search = {"restarts": len(trace), "best_schmidt_ratio": best[0], "trace": trace, "parameters": n_params}
    T_best = build_T(best[1])
    if best[0] <= tol:
        report = same_bipartition(G, G_prime, T_best, (d1, d2), tol=tol)
        if report.equivalent:
            return EquivalenceReport(report.verdict, report.witness, report.V, report.schmidt_values,
                                     report.residuals, search, T=T_best)
    V = G_prime.eta @ np.linalg.solve(T_best, G.eta_inv)
    s = operator_schmidt(V, (d1, d2), tol=0.0).singular_values
    residuals = {"best_schmidt_ratio": best[0], "intertwiner": check_metric_map(T_best, G_prime, G).residual}
    return EquivalenceReport(Verdict.UNDETERMINED, None, V, s, residuals, search, T=T_best)


def reduced_state(state: MetricState, dims, keep: int = 0) -> np.ndarray:
    """``tr_other(eta rho_bar eta^{-1})`` on the kept factor."""
    d1, d2 = _dims(dims)
    if state.dim != d1 * d2:
        raise DimensionMismatch("state dimension does not match dims")
    return hermitian_part(partial_trace(state.hermitized(), (d1, d2), keep))


def von_neumann_entropy(rho: np.ndarray, clamp: float = 1e-14) -> float:
    w = np.linalg.eigvalsh(hermitian_part(rho))
    w = w[w > clamp]
    return float(-np.sum(w * np.log2(w)))


def entanglement_entropy(state: MetricState, dims, purity_tol: float = 1e-8) -> float:
    """Entropy (bits) of the reduced Hermitised state; requires a pure global state."""
    p = state.purity()
    if p < 1.0 - purity_tol:
        raise MixedGlobalState(f"global state is mixed (purity {p:.10f})")
    return von_neumann_entropy(reduced_state(state, dims, 0))
