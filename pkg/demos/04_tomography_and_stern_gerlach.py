"""
Tomography in a metric space
============================

Deformed Pauli frames stay tight, so a state on H_G is recovered by linear
inversion from Stern-Gerlach counts along x, y and z.
"""

import numpy as np

from pseudoherm import Metric, MetricState, SternGerlachConfig, pauli_frame, stern_gerlach_probabilities
from pseudoherm.ensembles import random_metric_matrix
from pseudoherm.tomography import pauli_settings, reconstruct_from_records, simulate_dataset, trace_distance

rng = np.random.default_rng(11)
m = Metric(random_metric_matrix(4, rng))
frame = pauli_frame(2, m)
print(f"max |W - I| for the deformed two-qubit frame: {np.max(np.abs(frame.superoperator - np.eye(16))):.1e}")

# One Stern-Gerlach run on a single qubit
m1 = Metric(random_metric_matrix(2, rng))
up_x = np.array([1, 1], dtype=complex) / np.sqrt(2)
s1 = MetricState.from_euclidean(np.outer(up_x, up_x.conj()), m1)
for theta, phi, label in ((np.pi / 2, 0.0, "+x"), (np.pi / 2, np.pi / 2, "+y"), (0.0, 0.0, "+z")):
    p = stern_gerlach_probabilities(s1, SternGerlachConfig(theta, phi))
    print(f"spin along {label}: p(+1/2) = {p[0.5]:.4f}, p(-1/2) = {p[-0.5]:.4f}")

# Bell state on H_G, 9 joint settings, increasing shot counts
bell = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
truth = MetricState.from_euclidean(np.outer(bell, bell.conj()), m)
print("\nshots per setting   trace distance")
for shots in (100, 1_000, 10_000, 100_000):
    records = simulate_dataset(truth, pauli_settings(2), shots, seed=1)
    rec = reconstruct_from_records(records, 2, m)
    print(f"{shots:>17d}   {trace_distance(rec.state, truth):.4f}")
