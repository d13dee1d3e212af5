"""
No signalling with a non-separable metric
=========================================

Bob measures a local POVM written in the metric picture. Alice's reduced state
is unchanged, even though the metric itself does not factorise.
"""

import numpy as np

from pseudoherm import Metric, MetricState, operator_schmidt, verify_no_signalling
from pseudoherm.ensembles import random_density, random_metric_matrix, random_unitary

rng = np.random.default_rng(5)
m = Metric(random_metric_matrix(4, rng))
print("operator Schmidt rank of G:", operator_schmidt(m.G, (2, 2), tol=1e-10).rank)

state = MetricState.from_euclidean(random_density(4, rng), m)
V = random_unitary(2, rng)
projectors = [V @ np.diag(e) @ V.conj().T for e in ([1.0, 0.0], [0.0, 1.0])]
povm = [m.eta_inv @ np.kron(np.eye(2), P) @ m.eta for P in projectors]

rep = verify_no_signalling(state, (2, 2), povm)
print(f"no signalling holds: {rep.holds}")
print(f"  marginal deviation        {rep.marginal_deviation:.2e}")
print(f"  post-measurement deviation {rep.post_measurement_deviation:.2e}")
