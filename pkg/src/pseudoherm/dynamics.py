"""Lindblad evolution and quantum-jump unravelings in Euclidean and metric spaces.

The effective Hamiltonian is ``H_e = H - (i/2) sum_j L_j^H L_j``.  One step of
the unraveling of length ``dt`` jumps through ``M_j = L_j sqrt(dt)`` with
probability ``dt <L_j psi, L_j psi>`` (the inner product is the metric one in
metric mode), and otherwise applies the no-jump propagator.  The no-jump
propagator defaults to the exact ``expm(-i H_e dt)``; ``propagator="first_order"``
selects ``M_0 = 1 - i H_e dt`` literally.  The first-order no-jump probability
``<M_0 psi, M_0 psi>`` is reported in both cases.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatch,
    InvalidState,
    NotHermitian,
    NotNormalized,
    NotQuasiHermitian,
    NumericalError,
    StepTooLarge,
    ValidationError,
)
from .linalg import as_cmatrix, as_cvector, dagger, hermitian_part, opnorm
from .metric import Metric, g_adjoint, pseudo_hermiticity_residual

STEP_GUARD = 0.1
QH_TOL = 1e-8
NORM_TOL = 1e-6
PROPAGATORS = ("exact", "first_order")


@dataclass(frozen=True, eq=False)
class LindbladModel:
    """Hamiltonian ``H``, jump operators ``L_j`` and the cached ``H_e``.

    ``H`` must be Hermitian unless the model is built with
    :meth:`from_effective`, which starts from a prescribed ``H_e``.
    """

    H: np.ndarray
    jumps: tuple[np.ndarray, ...] = ()
    hermitian_tol: float = 1e-10
    require_hermitian: bool = True
    effective: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        H = as_cmatrix(self.H, "H")
        d = H.shape[0]
        jumps = tuple(as_cmatrix(L, "jump operator") for L in self.jumps)
        for k, L in enumerate(jumps):
            if L.shape != (d, d):
                raise DimensionMismatch(f"jump operator {k} has shape {L.shape}, expected {(d, d)}")
        if self.require_hermitian:
            scale = max(opnorm(H), 1.0)
            if np.linalg.norm(H - dagger(H), 2) > self.hermitian_tol * scale:
                raise NotHermitian("H is not Hermitian")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "jumps", jumps)
        object.__setattr__(self, "effective", H - 0.5j * self.jump_sum())

    @classmethod
    def from_effective(cls, H_e, jumps: Sequence = ()) -> "LindbladModel":
        """Model whose effective Hamiltonian is exactly ``H_e``.

        The implied ``H = H_e + (i/2) sum L^H L`` is generally not Hermitian.
        """
        H_e = as_cmatrix(H_e, "H_e")
        jumps = tuple(as_cmatrix(L, "jump operator") for L in jumps)
        K = sum((dagger(L) @ L for L in jumps), np.zeros_like(H_e))
        model = cls(H_e + 0.5j * K, jumps, require_hermitian=False)
        object.__setattr__(model, "effective", H_e.copy())
        return model

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    def jump_sum(self) -> np.ndarray:
        return sum((dagger(L) @ L for L in self.jumps), np.zeros_like(self.H))

    def generator(self, rho: np.ndarray) -> np.ndarray:
        """Right-hand side ``-i(H_e rho - rho H_e^H) + sum_j L_j rho L_j^H``."""
        He = self.effective
        out = -1j * (He @ rho - rho @ dagger(He))
        for L in self.jumps:
            out = out + L @ rho @ dagger(L)
        return out


def check_step(model: LindbladModel, dt: float) -> None:
    if not (np.isfinite(dt) and dt > 0):
        raise ValidationError("dt must be positive and finite")
    size = dt * opnorm(model.effective)
    if size > STEP_GUARD:
        raise StepTooLarge(f"dt * ||H_e|| = {size:.3g} exceeds {STEP_GUARD}")


def no_jump_operator(model: LindbladModel, dt: float, propagator: str = "exact") -> np.ndarray:
    if propagator == "exact":
        return scipy.linalg.expm(-1j * dt * model.effective)
    if propagator == "first_order":
        return first_order_m0(model, dt)
    raise ValidationError(f"propagator must be one of {PROPAGATORS}")


def first_order_m0(model: LindbladModel, dt: float) -> np.ndarray:
    return np.eye(model.dim) - 1j * dt * model.effective


def m0_defect(model: LindbladModel, dt: float, metric: Metric | None = None) -> float:
    """``||M_0^* M_0 - 1||`` with ``M_0^*`` the (G-)adjoint of ``1 - i H_e dt``."""
    M0 = first_order_m0(model, dt)
    adj = dagger(M0) if metric is None else g_adjoint(M0, metric)
    return float(np.linalg.norm(adj @ M0 - np.eye(model.dim), 2))


# -- master equation ------------------------------------------------------


def _check_density(rho: np.ndarray, tol: float = 1e-8) -> None:
    if np.linalg.norm(rho - dagger(rho), 2) > tol:
        raise InvalidState("rho is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise InvalidState("rho does not have unit trace")
    if np.linalg.eigvalsh(hermitian_part(rho))[0] < -tol:
        raise InvalidState("rho is not positive semidefinite")


def lindblad_step(rho, model: LindbladModel, dt: float, validate: bool = True) -> np.ndarray:
    """One classical fourth-order Runge-Kutta step of the master equation."""
    rho = as_cmatrix(rho, "rho")
    if rho.shape != (model.dim, model.dim):
        raise DimensionMismatch("rho does not match the model dimension")
    check_step(model, dt)
    if validate:
        _check_density(rho)
    f = model.generator
    k1 = f(rho)
    k2 = f(rho + 0.5 * dt * k1)
    k3 = f(rho + 0.5 * dt * k2)
    k4 = f(rho + dt * k3)
    return hermitian_part(rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4))


def evolve_master(rho, model: LindbladModel, dt: float, steps: int) -> np.ndarray:
    """Trajectory of ``steps`` RK4 steps; returns an array of shape ``(steps + 1, d, d)``."""
    rho = as_cmatrix(rho, "rho")
    _check_density(rho)
    out = np.empty((steps + 1,) + rho.shape, dtype=np.complex128)
    out[0] = rho
    for n in range(steps):
        out[n + 1] = lindblad_step(out[n], model, dt, validate=False)
    return out


# -- single trajectory steps ----------------------------------------------


@dataclass(frozen=True, eq=False)
class TrajectoryStep:
    """Outcome of one unraveling step.

    ``p_jump`` is the total jump probability used for branching; in metric
    mode ``p_jump_trace_form`` is ``dt sum_j tr(L_j^H G L_j rho)`` evaluated
    independently, with ``rho = psi psi^H``.  ``norm`` is the (G-)norm squared of
    the returned vector.
    """

    psi: np.ndarray
    jumped: int | None
    p_jump: float
    p_no_jump: float
    norm: float
    p_jump_trace_form: float | None = None


def _branch(probs: np.ndarray, u: float) -> int | None:
    if probs.size == 0:
        return None
    edges = np.cumsum(probs)
    if u >= edges[-1]:
        return None
    return int(np.searchsorted(edges, u, side="right"))


def trajectory_step(psi, model: LindbladModel, dt: float, rng: np.random.Generator, propagator: str = "exact") -> TrajectoryStep:
    """Euclidean jump/no-jump step; the state is renormalized after either branch."""
    psi = as_cvector(psi, "psi")
    if psi.shape[0] != model.dim:
        raise DimensionMismatch("psi does not match the model dimension")
    check_step(model, dt)
    if abs(np.vdot(psi, psi).real - 1.0) > NORM_TOL:
        raise NotNormalized("psi must have unit norm")
    out = [L @ psi for L in model.jumps]
    probs = np.array([dt * np.vdot(v, v).real for v in out])
    m0 = first_order_m0(model, dt) @ psi
    p0 = float(np.vdot(m0, m0).real)
    j = _branch(probs, rng.random())
    if j is None:
        new = no_jump_operator(model, dt, propagator) @ psi
    else:
        new = out[j]
    new = new / np.linalg.norm(new)
    return TrajectoryStep(new, j, float(probs.sum()), p0, float(np.vdot(new, new).real))


def require_quasi_hermitian_effective(model: LindbladModel, metric: Metric, tol: float = QH_TOL) -> float:
    if metric.dim != model.dim:
        raise DimensionMismatch("metric does not match the model dimension")
    r = pseudo_hermiticity_residual(model.effective, metric)
    if r > tol:
        raise NotQuasiHermitian(f"H_e is not quasi-Hermitian for this metric (residual {r:.3e})")
    return r


def metric_trajectory_step(
    psi,
    model: LindbladModel,
    metric: Metric,
    dt: float,
    rng: np.random.Generator,
    propagator: str = "exact",
    renormalize: bool = False,
) -> TrajectoryStep:
    """Jump/no-jump step in ``H_G``.

    Jump branch ``j`` has probability ``dt <L_j psi, G L_j psi>`` and is
    followed by G-normalization.  The no-jump branch is not renormalized
    unless ``renormalize`` is set, so G-norm conservation can be observed.
    """
    psi = as_cvector(psi, "psi")
    if psi.shape[0] != model.dim:
        raise DimensionMismatch("psi does not match the model dimension")
    check_step(model, dt)
    require_quasi_hermitian_effective(model, metric)
    if abs(metric.norm_sq(psi) - 1.0) > NORM_TOL:
        raise NotNormalized("psi must have unit G-norm")
    G = metric.G
    out = [L @ psi for L in model.jumps]
    probs = np.array([dt * metric.norm_sq(v) for v in out])
    trace_form = dt * sum(np.trace(dagger(L) @ G @ L @ np.outer(psi, psi.conj())).real for L in model.jumps)
    m0 = first_order_m0(model, dt) @ psi
    p0 = metric.norm_sq(m0)
    j = _branch(probs, rng.random())
    if j is None:
        new = no_jump_operator(model, dt, propagator) @ psi
        if renormalize:
            new = new / np.sqrt(metric.norm_sq(new))
    else:
        new = out[j] / np.sqrt(metric.norm_sq(out[j]))
    return TrajectoryStep(new, j, float(probs.sum()), float(p0), metric.norm_sq(new), float(trace_form))


# -- ensembles of trajectories ---------------------------------------------


@dataclass(frozen=True)
class TrajectoryConfig:
    dt: float
    steps: int
    replicas: int
    seed: int
    metric: Metric | None = None
    checkpoint_every: int = 1
    propagator: str = "exact"
    renormalize: bool | None = None

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValidationError("dt must be positive and finite")
        if self.steps < 1 or self.replicas < 1 or self.checkpoint_every < 1:
            raise ValidationError("steps, replicas and checkpoint_every must be positive")
        if self.propagator not in PROPAGATORS:
            raise ValidationError(f"propagator must be one of {PROPAGATORS}")

    @property
    def metric_mode(self) -> bool:
        return self.metric is not None

    @property
    def renormalizes(self) -> bool:
        return (not self.metric_mode) if self.renormalize is None else bool(self.renormalize)


@dataclass(frozen=True, eq=False)
class TrajectoryResult:
    """Replica statistics at each checkpoint.

    ``densities[k]`` is the replica average of ``psi psi^H G / <psi, G psi>``
    (``G = 1`` in Euclidean mode).
    """

    times: np.ndarray
    norm_mean: np.ndarray
    norm_min: np.ndarray
    norm_max: np.ndarray
    jump_counts: np.ndarray
    p_jump_mean: np.ndarray
    p_jump_trace_form_mean: np.ndarray
    densities: np.ndarray
    final_states: np.ndarray = field(repr=False)

    def populations(self) -> np.ndarray:
        return np.real(np.diagonal(self.densities, axis1=1, axis2=2))


BLOCK = 256


def run_trajectories(psi0, model: LindbladModel, cfg: TrajectoryConfig) -> TrajectoryResult:
    """Run ``cfg.replicas`` independent trajectories in lockstep.

    Replica ``r`` draws from ``default_rng([seed, r])``, one uniform per step,
    so each replica reproduces the corresponding sequence of single steps.
    """
    psi0 = as_cvector(psi0, "psi0")
    d = model.dim
    if psi0.shape[0] != d:
        raise DimensionMismatch("psi0 does not match the model dimension")
    check_step(model, cfg.dt)
    G = np.eye(d, dtype=np.complex128) if cfg.metric is None else cfg.metric.G
    if cfg.metric is not None:
        require_quasi_hermitian_effective(model, cfg.metric)
    n0 = float(np.vdot(psi0, G @ psi0).real)
    if abs(n0 - 1.0) > NORM_TOL:
        raise NotNormalized("psi0 must have unit (G-)norm")

    R = cfg.replicas
    gens = [np.random.default_rng([int(cfg.seed), r]) for r in range(R)]
    P = no_jump_operator(model, cfg.dt, cfg.propagator)
    Ls = list(model.jumps)
    LGLs = [dagger(L) @ G @ L for L in Ls]
    psi = np.tile(psi0, (R, 1))
    jumps_total = 0

    def g_norms(X):
        return np.einsum("ri,ij,rj->r", X.conj(), G, X).real

    def density(X):
        n = g_norms(X)
        return np.einsum("ri,rj->ij", X / n[:, None], X.conj()) @ G / R

    times, nmean, nmin, nmax, jc, pm, ptf, dens = [], [], [], [], [], [], [], []

    def record(t, X, p, p_tf):
        n = g_norms(X)
        times.append(t)
        nmean.append(n.mean())
        nmin.append(n.min())
        nmax.append(n.max())
        jc.append(jumps_total)
        pm.append(p)
        ptf.append(p_tf)
        dens.append(density(X))

    record(0.0, psi, 0.0, 0.0)
    u_block = None
    for n in range(cfg.steps):
        if n % BLOCK == 0:
            size = min(BLOCK, cfg.steps - n)
            u_block = np.stack([g.random(size) for g in gens])
        u = u_block[:, n % BLOCK]
        outs = [psi @ L.T for L in Ls]
        if outs:
            probs = np.stack([cfg.dt * g_norms(v) for v in outs], axis=1)
            tf = np.stack([cfg.dt * np.einsum("ri,ij,rj->r", psi.conj(), M, psi).real for M in LGLs], axis=1).sum(axis=1)
        else:
            probs = np.zeros((R, 0))
            tf = np.zeros(R)
        edges = np.cumsum(probs, axis=1)
        total = edges[:, -1] if Ls else np.zeros(R)
        jumped = u < total
        new = psi @ P.T
        if cfg.renormalizes:
            new = new / np.sqrt(g_norms(new))[:, None]
        if jumped.any():
            idx = np.nonzero(jumped)[0]
            which = (edges[idx] <= u[idx, None]).sum(axis=1)
            stacked = np.stack(outs, axis=0)
            jumped_states = stacked[which, idx]
            new[idx] = jumped_states / np.sqrt(g_norms(jumped_states))[:, None]
            jumps_total += idx.size
        psi = new
        if (n + 1) % cfg.checkpoint_every == 0 or n + 1 == cfg.steps:
            record((n + 1) * cfg.dt, psi, float(total.mean()), float(tf.mean()))

    return TrajectoryResult(
        times=np.array(times),
        norm_mean=np.array(nmean),
        norm_min=np.array(nmin),
        norm_max=np.array(nmax),
        jump_counts=np.array(jc, dtype=int),
        p_jump_mean=np.array(pm),
        p_jump_trace_form_mean=np.array(ptf),
        densities=np.array(dens),
        final_states=psi,
    )


# -- state conventions -----------------------------------------------------

CONVENTIONS = ("similarity_to_weighting", "weighting_to_similarity")


def similarity_form(rho, metric: Metric) -> np.ndarray:
    """``eta^{-1} rho eta`` for a Euclidean density matrix ``rho``."""
    return metric.eta_inv @ as_cmatrix(rho, "rho") @ metric.eta


def weighting_form(rho_w, metric: Metric, normalize: bool = True) -> np.ndarray:
    """``rho_w G``, divided by ``tr(rho_w G)`` when ``normalize`` is set."""
    out = as_cmatrix(rho_w, "rho_w") @ metric.G
    if normalize:
        tr = np.trace(out)
        if abs(tr) < 1e-14:
            raise InvalidState("tr(rho_w G) vanishes")
        out = out / tr
    return out


def convert_state_convention(M, metric: Metric, direction: str, tol: float = 1e-10) -> np.ndarray:
    """Convert between the two ways of writing a state on ``H_G``.

    In the similarity convention a state is a Euclidean density matrix ``rho``
    and the G-space operator is ``eta^{-1} rho eta``.  In the weighting
    convention it is a G-positive operator ``rho_w`` (such as ``psi psi^H`` for
    a G-normalized vector) and the G-space operator is ``rho_w G``.

    ``"similarity_to_weighting"`` maps ``rho`` to ``eta^{-1} rho eta^{-1}``;
    ``"weighting_to_similarity"`` maps ``rho_w`` to ``eta rho_w eta / tr(rho_w G)``.
    Both forms are checked to give the same G-space operator.
    """
    M = as_cmatrix(M, "state")
    if M.shape != (metric.dim, metric.dim):
        raise DimensionMismatch("state does not match the metric dimension")
    if direction == "similarity_to_weighting":
        out = metric.eta_inv @ M @ metric.eta_inv
        a, b = similarity_form(M, metric) / np.trace(M), weighting_form(out, metric)
    elif direction == "weighting_to_similarity":
        tr = np.trace(M @ metric.G)
        if abs(tr) < 1e-14:
            raise InvalidState("tr(rho_w G) vanishes")
        out = metric.eta @ M @ metric.eta / tr
        a, b = weighting_form(M, metric), similarity_form(out, metric)
    else:
        raise ValidationError(f"direction must be one of {CONVENTIONS}")
    scale = max(opnorm(a), 1.0)
    if np.linalg.norm(a - b, 2) > tol * scale * max(np.linalg.cond(metric.G), 1.0):
        raise NumericalError("convention round trip failed")
    return out
