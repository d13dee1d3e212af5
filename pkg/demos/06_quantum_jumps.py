"""
Quantum jumps and the master equation
=====================================

Averaging stochastic pure-state trajectories reproduces Lindblad evolution.
With a metric, the no-jump evolution of a quasi-Hermitian effective Hamiltonian
keeps the G-norm fixed.
"""

import numpy as np

from pseudoherm import Metric
from pseudoherm.dynamics import LindbladModel, TrajectoryConfig, evolve_master, m0_defect, run_trajectories

# Amplitude damping of a two-level atom, |1> excited
gamma, dt, steps = 1.0, 0.01, 300
model = LindbladModel(np.zeros((2, 2)), (np.sqrt(gamma) * np.array([[0, 1], [0, 0]], dtype=complex),))
res = run_trajectories(np.array([0.0, 1.0]), model, TrajectoryConfig(dt, steps, 10_000, seed=0, checkpoint_every=50))
master = evolve_master(np.diag([0.0, 1.0]), model, dt, steps)

print("   t   trajectories   master eq.   exp(-gamma t)")
for k, t in enumerate(res.times):
    print(f"{t:4.1f}   {res.populations()[k][1]:12.4f}   {master[int(round(t / dt))][1, 1].real:10.4f}   {np.exp(-gamma * t):13.4f}")

# No-jump evolution in a metric space
H = np.array([[1, -2], [0, -1]], dtype=complex)
m = Metric(np.array([[1, -1], [-1, 2]], dtype=complex))
psi = np.array([1.0, 0.0]) / np.sqrt(m.norm_sq(np.array([1.0, 0.0])))
drift = run_trajectories(psi, LindbladModel.from_effective(H),
                         TrajectoryConfig(1e-3, 1000, 1, seed=0, metric=m, checkpoint_every=250))
print("\nG-norm along the no-jump trajectory:", np.round(drift.norm_mean, 12))

# The first-order no-jump operator loses G-unitarity at second order in dt
for step in (1e-2, 1e-3, 1e-4):
    print(f"dt = {step:.0e}   ||M0* M0 - I|| = {m0_defect(LindbladModel.from_effective(H), step, m):.2e}")
