"""Operator frames, linear-inversion tomography in metric spaces, Stern-Gerlach
measurement simulation and no-signalling checks.

Spin outcomes are half-integers ``m in {+1/2, -1/2}`` with ``+1/2`` on ``|0>``,
so ``sum_m m p(m|n) = <sigma.n> / 2``.  Measuring along ``n(theta, phi)`` is a
``sigma_z`` measurement after the rotation ``U = exp(-i theta/2 sigma.n_perp)``,
``n_perp = (-sin phi, cos phi, 0)``, which obeys ``U sigma_z U^H = sigma.n``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatch,
    IncompletePovm,
    InconsistentData,
    InvalidPovm,
    NotLocalPovm,
    SingularFrame,
    ValidationError,
)
from .linalg import as_cmatrix, dagger, hermitian_part, kron_all, opnorm, partial_trace
from .metric import Metric, MetricState, g_adjoint, is_quasi_hermitian

I2 = np.eye(2, dtype=np.complex128)
SX = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SY = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SZ = np.array([[1, 0], [0, -1]], dtype=np.complex128)
PAULIS = {"I": I2, "X": SX, "Y": SY, "Z": SZ}
AXES = {"X": np.array([1.0, 0.0, 0.0]), "Y": np.array([0.0, 1.0, 0.0]), "Z": np.array([0.0, 0.0, 1.0])}
OUTCOMES = (0.5, -0.5)

MAX_CONDITION = 1e12
SNAP_DIGITS = 12


def pauli_labels(n_qubits: int) -> list[str]:
    return ["".join(p) for p in itertools.product("IXYZ", repeat=n_qubits)]


def pauli_string(label: str) -> np.ndarray:
    try:
        return kron_all(*(PAULIS[c] for c in label.upper()))
    except KeyError as exc:
        raise ValidationError(f"bad Pauli label {label!r}") from exc


def sigma_dot(n) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    return n[0] * SX + n[1] * SY + n[2] * SZ


def g_hs_inner(A, B, metric: Metric) -> complex:
    """G-Hilbert-Schmidt pairing ``tr(A^* B)``."""
    return complex(np.trace(g_adjoint(A, metric) @ B))


# -- frames ---------------------------------------------------------------


def _vec(M: np.ndarray) -> np.ndarray:
    return np.asarray(M).reshape(-1)


def _build_superoperator(elements, weights, metric: Metric) -> np.ndarray:
    d = metric.dim
    W = np.zeros((d * d, d * d), dtype=np.complex128)
    for E, w in zip(elements, weights):
        # <E, rho>_G = tr(E^* rho) = vec(E^{*T}) . vec(rho)
        W += (w * d) * np.outer(_vec(E), _vec(g_adjoint(E, metric).T))
    return W


def _conjugation_superoperator(metric: Metric) -> np.ndarray:
    """Row-major superoperator of ``X -> eta X eta^{-1}``."""
    return np.kron(metric.eta, metric.eta_inv.T)


def _condition(W: np.ndarray) -> float:
    s = np.linalg.svd(W, compute_uv=False)
    if s[-1] <= 1e-13 * s[0]:
        return float("inf")
    return float(s[0] / s[-1])


@dataclass(frozen=True, eq=False)
class OperatorFrame:
    """Weighted family of observables on ``H_G`` used for tomography.

    ``superoperator`` is the sampling map
    ``rho -> sum_i w_i d <E_i, rho>_G E_i`` acting on row-major ``vec(rho)``.
    ``conjugation_residual`` records how well it equals the eta-conjugate of
    the Euclidean sampling map of the Hermitised frame.
    """

    elements: tuple[np.ndarray, ...]
    weights: np.ndarray
    metric: Metric
    labels: tuple[str, ...] = ()
    superoperator: np.ndarray = field(init=False, repr=False)
    condition_number: float = field(init=False)
    conjugation_residual: float = field(init=False)
    qh_tol: float = field(default=1e-8, repr=False)

    def __post_init__(self):
        els = tuple(as_cmatrix(E, "frame element") for E in self.elements)
        if not els:
            raise ValidationError("frame has no elements")
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.shape[0] != len(els):
            raise DimensionMismatch("weights and elements differ in length")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-10:
            raise ValidationError("weights must be positive and sum to 1")
        for k, E in enumerate(els):
            if E.shape != (self.metric.dim,) * 2:
                raise DimensionMismatch(f"frame element {k} has wrong shape")
            ok, r = is_quasi_hermitian(E, self.metric, self.qh_tol)
            if not ok:
                raise ValidationError(f"frame element {k} is not quasi-Hermitian (residual {r:.3e})")
        object.__setattr__(self, "elements", els)
        object.__setattr__(self, "weights", w)
        W = _build_superoperator(els, w, self.metric)
        herm = [self.metric.eta @ E @ self.metric.eta_inv for E in els]
        W_euclid = _build_superoperator(herm, w, Metric.identity(self.metric.dim))
        C = _conjugation_superoperator(self.metric)
        conj = np.linalg.solve(C, W_euclid @ C)
        object.__setattr__(self, "superoperator", W)
        object.__setattr__(self, "condition_number", _condition(W))
        object.__setattr__(self, "conjugation_residual", float(np.max(np.abs(conj - W))))

    @property
    def dim(self) -> int:
        return self.metric.dim

    def element_norm(self, k: int) -> float:
        """G-operator norm of element ``k`` (2-norm of its Hermitisation)."""
        return opnorm(self.metric.eta @ self.elements[k] @ self.metric.eta_inv)

    def exact_expectations(self, state: MetricState) -> np.ndarray:
        return np.array([g_hs_inner(E, state.rho_bar, self.metric).real for E in self.elements])


def pauli_frame(n_qubits: int, metric: Metric | None = None, labels: Sequence[str] | None = None) -> OperatorFrame:
    """Deformed Pauli frame ``{eta^{-1} P eta}`` with uniform weights.

    ``labels`` restricts the frame to a subset of Pauli strings.
    """
    d = 2 ** n_qubits
    metric = Metric.identity(d) if metric is None else metric
    if metric.dim != d:
        raise DimensionMismatch(f"metric dimension {metric.dim} != 2**{n_qubits}")
    labels = pauli_labels(n_qubits) if labels is None else [l.upper() for l in labels]
    if any(len(l) != n_qubits for l in labels):
        raise DimensionMismatch("Pauli labels must have one letter per qubit")
    elements = [metric.eta_inv @ pauli_string(l) @ metric.eta for l in labels]
    w = np.full(len(labels), 1.0 / len(labels))
    return OperatorFrame(tuple(elements), w, metric, tuple(labels))


def sampling_superoperator(frame: OperatorFrame) -> np.ndarray:
    return frame.superoperator.copy()


def apply_superoperator(W: np.ndarray, rho: np.ndarray) -> np.ndarray:
    d = rho.shape[0]
    return (W @ _vec(rho)).reshape(d, d)


@dataclass(frozen=True, eq=False)
class Reconstruction:
    """Linear-inversion output.

    ``raw`` is ``W^{-1}`` applied to the data; ``state`` is a valid
    :class:`MetricState`, PSD-projected when ``psd_projected`` is set.
    """

    raw: np.ndarray
    state: MetricState
    psd_projected: bool
    condition_number: float
    min_eigenvalue: float


def _project_psd(rho_bar: np.ndarray, metric: Metric) -> tuple[np.ndarray, bool, float]:
    rho = hermitian_part(metric.eta @ rho_bar @ metric.eta_inv)
    w, V = np.linalg.eigh(rho)
    if w[0] >= -1e-12:
        return rho_bar, False, float(w[0])
    w = np.clip(w, 0.0, None)
    rho = (V * w) @ dagger(V)
    rho /= np.trace(rho).real
    return metric.eta_inv @ rho @ metric.eta, True, float(np.linalg.eigvalsh(hermitian_part(metric.eta @ rho_bar @ metric.eta_inv))[0])


def reconstruct(
    expectations: Mapping[int, float] | Sequence[float],
    frame: OperatorFrame,
    max_condition: float = MAX_CONDITION,
    slack: float = 1e-9,
) -> Reconstruction:
    """Invert the sampling map on frame expectation values.

    ``expectations[i]`` is the measured value of ``frame.elements[i]``.
    """
    n = len(frame.elements)
    if isinstance(expectations, Mapping):
        missing = [i for i in range(n) if i not in expectations]
        if missing:
            raise ValidationError(f"missing expectations for frame indices {missing}")
        e = np.array([float(expectations[i]) for i in range(n)])
    else:
        e = np.asarray(expectations, dtype=float).reshape(-1)
        if e.shape[0] != n:
            raise DimensionMismatch(f"need {n} expectations, got {e.shape[0]}")
    if not np.all(np.isfinite(e)):
        raise InconsistentData("non-finite expectation value")
    for k in range(n):
        bound = frame.element_norm(k)
        if abs(e[k]) > bound * (1 + slack) + slack:
            raise InconsistentData(f"expectation {e[k]:.6g} of element {k} exceeds its norm {bound:.6g}")
    if not frame.condition_number < max_condition:
        raise SingularFrame(f"sampling superoperator is singular (condition {frame.condition_number:.3g})")
    d = frame.dim
    data = sum((w * d * ek) * E for w, ek, E in zip(frame.weights, e, frame.elements))
    rho_bar = np.linalg.solve(frame.superoperator, _vec(data)).reshape(d, d)
    # Enforce G-self-adjointness exactly; the inversion only guarantees it to round-off.
    rho_bar = frame.metric.eta_inv @ hermitian_part(frame.metric.eta @ rho_bar @ frame.metric.eta_inv) @ frame.metric.eta
    tr = np.trace(rho_bar).real
    if abs(tr) < 1e-12:
        raise InconsistentData("reconstructed operator has zero trace")
    rho_bar = rho_bar / tr
    fixed, projected, wmin = _project_psd(rho_bar, frame.metric)
    return Reconstruction(rho_bar, MetricState(fixed, frame.metric), projected, frame.condition_number, wmin)


def trace_distance(a: MetricState, b: MetricState) -> float:
    """Trace distance between the Hermitised states."""
    diff = a.hermitized() - b.hermitized()
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(hermitian_part(diff)))))


# -- Stern-Gerlach --------------------------------------------------------


def direction_angles(n) -> tuple[float, float]:
    n = np.asarray(n, dtype=float)
    r = np.linalg.norm(n)
    if not np.isfinite(r) or r == 0:
        raise ValidationError("direction must be a non-zero finite 3-vector")
    n = n / r
    return float(np.arccos(np.clip(n[2], -1.0, 1.0))), float(np.arctan2(n[1], n[0]))


def rotation_unitary(theta: float, phi: float) -> np.ndarray:
    """``exp(-i theta/2 sigma.n_perp)`` with ``n_perp = (-sin phi, cos phi, 0)``."""
    n_perp = np.array([-np.sin(phi), np.cos(phi), 0.0])
    return scipy.linalg.expm(-0.5j * theta * sigma_dot(n_perp))


@dataclass(frozen=True)
class SternGerlachConfig:
    theta: float
    phi: float
    gyromagnetic: float = 1.0
    interaction_time: float = 1.0
    shots: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not self.interaction_time > 0:
            raise ValidationError("interaction_time must be positive")
        if self.gyromagnetic == 0 or not np.isfinite(self.gyromagnetic):
            raise ValidationError("gyromagnetic factor must be finite and non-zero")
        if self.shots < 1:
            raise ValidationError("shots must be positive")

    @classmethod
    def along(cls, n, **kwargs) -> "SternGerlachConfig":
        theta, phi = direction_angles(n)
        return cls(theta, phi, **kwargs)

    @property
    def direction(self) -> np.ndarray:
        t, p = self.theta, self.phi
        return np.array([np.sin(t) * np.cos(p), np.sin(t) * np.sin(p), np.cos(t)])

    @property
    def n_perp(self) -> np.ndarray:
        return np.array([-np.sin(self.phi), np.cos(self.phi), 0.0])

    @property
    def field(self) -> np.ndarray:
        """Rotating field ``B = theta n_perp / (gamma t)``."""
        return self.theta * self.n_perp / (self.gyromagnetic * self.interaction_time)

    @property
    def unitary(self) -> np.ndarray:
        return rotation_unitary(self.theta, self.phi)


def stern_gerlach_probabilities(state: MetricState, cfg: SternGerlachConfig) -> dict[float, float]:
    """``p(m|n) = <m| U^H rho U |m>`` on the Hermitised single-spin state."""
    if state.dim != 2:
        raise DimensionMismatch("Stern-Gerlach probabilities need a single spin")
    U = cfg.unitary
    rotated = dagger(U) @ state.hermitized() @ U
    p = np.clip(np.real(np.diag(rotated)), 0.0, None)
    p = p / p.sum()
    return {OUTCOMES[0]: float(p[0]), OUTCOMES[1]: float(p[1])}


@dataclass(frozen=True)
class MeasurementRecord:
    party_dirs: tuple[tuple[float, float, float], ...]
    outcomes: tuple[float, ...]
    count: int
    setting: int = 0

    def to_json(self) -> str:
        return json.dumps(
            {"party_dirs": [list(d) for d in self.party_dirs], "outcomes": list(self.outcomes), "count": self.count},
            sort_keys=True,
        )

    @classmethod
    def from_dict(cls, d: dict, setting: int = 0) -> "MeasurementRecord":
        try:
            dirs = tuple(tuple(float(x) for x in v) for v in d["party_dirs"])
            outs = tuple(float(m) for m in d["outcomes"])
            count = int(d["count"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed measurement record: {d!r}") from exc
        if any(len(v) != 3 for v in dirs) or len(outs) != len(dirs):
            raise ValidationError("record needs one 3-vector direction and one outcome per party")
        if any(m not in OUTCOMES for m in outs) or count < 0:
            raise ValidationError("outcomes must be +-1/2 and counts non-negative")
        return cls(dirs, outs, count, setting)


def joint_probabilities(state: MetricState, directions: Sequence) -> np.ndarray:
    """Joint outcome distribution for per-party directions; shape ``(2,) * n``."""
    n = len(directions)
    if state.dim != 2 ** n:
        raise DimensionMismatch(f"state dimension {state.dim} != 2**{n}")
    U = kron_all(*(rotation_unitary(*direction_angles(v)) for v in directions))
    rotated = dagger(U) @ state.hermitized() @ U
    p = np.clip(np.real(np.diag(rotated)), 0.0, None)
    return (p / p.sum()).reshape((2,) * n)


def _snap(p: np.ndarray) -> np.ndarray:
    # Round-off from the metric must not change the draws: states with equal
    # statistics sample identically.
    p = np.round(p, SNAP_DIGITS)
    return p / p.sum()


def pauli_settings(n_parties: int) -> list[list[np.ndarray]]:
    """All ``3^n`` combinations of x, y, z measurement axes."""
    return [[AXES[a] for a in combo] for combo in itertools.product("XYZ", repeat=n_parties)]


def simulate_dataset(
    state: MetricState,
    settings: Sequence[Sequence],
    shots: int,
    seed: int,
) -> list[MeasurementRecord]:
    """Multinomial sampling of joint outcomes, one independent RNG stream per setting.

    Probabilities are rounded to 12 decimals before sampling.

    Every outcome combination is emitted (zero counts included), so counts per
    setting sum to ``shots``.
    """
    if shots < 1:
        raise ValidationError("shots must be positive")
    records: list[MeasurementRecord] = []
    for k, dirs in enumerate(settings):
        dirs = [np.asarray(v, dtype=float) for v in dirs]
        p = _snap(joint_probabilities(state, dirs).reshape(-1))
        rng = np.random.default_rng([int(seed), k])
        counts = rng.multinomial(int(shots), p)
        n = len(dirs)
        party_dirs = tuple(tuple(float(x) for x in v / np.linalg.norm(v)) for v in dirs)
        for idx, combo in enumerate(itertools.product(range(2), repeat=n)):
            outs = tuple(OUTCOMES[c] for c in combo)
            records.append(MeasurementRecord(party_dirs, outs, int(counts[idx]), k))
    return records


def write_dataset(records: Iterable[MeasurementRecord]) -> str:
    return "".join(r.to_json() + "\n" for r in records)


def read_dataset(text: str) -> list[MeasurementRecord]:
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"dataset line {lineno}: {exc}") from exc
        out.append(MeasurementRecord.from_dict(d))
    return out


def _axis_letter(v) -> str | None:
    v = np.asarray(v, dtype=float)
    for k, a in AXES.items():
        if np.allclose(v, a, atol=1e-9):
            return k
    return None


def pauli_expectations_from_records(records: Sequence[MeasurementRecord], n_qubits: int) -> dict[str, float]:
    """Estimate every Pauli-string expectation from x/y/z Stern-Gerlach counts.

    For a string with identity on some parties, every setting matching the
    non-identity axes contributes.  Each outcome ``m`` contributes ``2m``.
    """
    by_setting: dict[tuple[str, ...], dict[tuple[float, ...], int]] = {}
    for r in records:
        if len(r.party_dirs) != n_qubits:
            raise DimensionMismatch("record party count does not match n_qubits")
        key = tuple(_axis_letter(v) for v in r.party_dirs)
        if None in key:
            continue
        by_setting.setdefault(key, {})
        by_setting[key][r.outcomes] = by_setting[key].get(r.outcomes, 0) + r.count

    est: dict[str, float] = {}
    for label in pauli_labels(n_qubits):
        num = 0.0
        total = 0
        for key, counts in by_setting.items():
            if any(c != "I" and c != k for c, k in zip(label, key)):
                continue
            for outs, cnt in counts.items():
                val = 1.0
                for c, m in zip(label, outs):
                    if c != "I":
                        val *= 2.0 * m
                num += val * cnt
                total += cnt
        if total == 0:
            raise ValidationError(f"no data constrains Pauli string {label}")
        est[label] = num / total
    return est


def reconstruct_from_records(records: Sequence[MeasurementRecord], n_qubits: int, metric: Metric | None = None) -> Reconstruction:
    frame = pauli_frame(n_qubits, metric)
    est = pauli_expectations_from_records(records, n_qubits)
    return reconstruct([est[l] for l in frame.labels], frame)


# -- no-signalling --------------------------------------------------------


@dataclass(frozen=True)
class NoSignallingReport:
    holds: bool
    max_deviation: float
    marginal_deviation: float
    post_measurement_deviation: float
    locality_residual: float
    completeness_residual: float


def local_povm_factors(bob_povm: Sequence, metric: Metric, dims, locality_tol: float = 1e-8) -> tuple[list[np.ndarray], float]:
    """Extract ``Pi^m`` from G-space POVM elements with ``eta M eta^{-1} = I (x) Pi``."""
    d1, d2 = (int(d) for d in dims)
    if metric.dim != d1 * d2:
        raise DimensionMismatch("metric dimension does not match dims")
    if not bob_povm:
        raise InvalidPovm("POVM has no elements")
    factors = []
    worst = 0.0
    for k, M in enumerate(bob_povm):
        M = as_cmatrix(M, "POVM element")
        if M.shape != (d1 * d2,) * 2:
            raise DimensionMismatch(f"POVM element {k} has wrong shape")
        herm = metric.eta @ M @ metric.eta_inv
        Pi = partial_trace(herm, (d1, d2), keep=1) / d1
        r = float(np.linalg.norm(herm - np.kron(np.eye(d1), Pi), 2) / max(opnorm(herm), 1.0))
        worst = max(worst, r)
        if r > locality_tol:
            raise NotLocalPovm(f"POVM element {k} is not of the form I (x) Pi (residual {r:.3e})")
        if np.linalg.norm(Pi - dagger(Pi), 2) > locality_tol or np.linalg.eigvalsh(hermitian_part(Pi))[0] < -locality_tol:
            raise InvalidPovm(f"POVM element {k} is not positive semidefinite")
        factors.append(hermitian_part(Pi))
    return factors, worst


def verify_no_signalling(
    state: MetricState,
    dims,
    bob_povm: Sequence,
    tol: float = 1e-10,
    completeness_tol: float = 1e-8,
    locality_tol: float = 1e-8,
) -> NoSignallingReport:
    """Check that Bob's measurement leaves Alice's reduced state unchanged.

    Two deviations are computed: the linear marginal
    ``||sum_m tr_2(eta M^m rho_bar eta^{-1}) - tr_2(eta rho_bar eta^{-1})||`` and
    the post-measurement (Lueders) marginal
    ``||sum_m tr_2(K_m rho K_m^H) - tr_2(rho)||`` with ``K_m = I (x) sqrt(Pi^m)``.
    """
    d1, d2 = (int(d) for d in dims)
    metric = state.metric
    factors, loc = local_povm_factors(bob_povm, metric, (d1, d2), locality_tol)
    comp = float(np.linalg.norm(sum(factors) - np.eye(d2), 2))
    if comp > completeness_tol:
        raise IncompletePovm(f"POVM elements do not sum to identity (residual {comp:.3e})")

    rho = state.hermitized()
    rho_1 = partial_trace(rho, (d1, d2), keep=0)
    linear = sum(
        partial_trace(metric.eta @ as_cmatrix(M) @ state.rho_bar @ metric.eta_inv, (d1, d2), keep=0)
        for M in bob_povm
    )
    marginal = float(np.linalg.norm(linear - rho_1, 2))
    post = np.zeros_like(rho_1)
    for Pi in factors:
        w, V = np.linalg.eigh(Pi)
        K = np.kron(np.eye(d1), (V * np.sqrt(np.clip(w, 0, None))) @ dagger(V))
        post = post + partial_trace(K @ rho @ dagger(K), (d1, d2), keep=0)
    post_dev = float(np.linalg.norm(post - rho_1, 2))
    worst = max(marginal, post_dev)
    return NoSignallingReport(worst <= tol, worst, marginal, post_dev, loc, comp)
