"""
Expectations do not depend on the metric representation
========================================================

The same physics can be written with the Euclidean inner product, with a metric
G, or with another metric G'. Certified intertwiners carry states and
observables between them without changing any expectation value.
"""

import numpy as np

from pseudoherm import Metric, MetricState, check_metric_map, expectation, hermitize, intertwiner_from_unitary
from pseudoherm.ensembles import random_density, random_metric_matrix, random_quasi_hermitian, random_unitary

rng = np.random.default_rng(7)
d = 3
G = Metric(random_metric_matrix(d, rng))
Gp = Metric(random_metric_matrix(d, rng))

# A state on H_G and an observable that is quasi-Hermitian for G
state = MetricState.from_euclidean(random_density(d, rng), G)
O = random_quasi_hermitian(G.eta, rng)
print("O is Hermitian:", np.allclose(O, O.conj().T))
print("eigenvalues of O:", np.round(np.sort(np.linalg.eigvals(O).real), 6))

e_G = expectation(O, state)
e_euclid = np.trace(hermitize(O, G) @ state.hermitized())

# A map T: H_G' -> H_G built from an arbitrary unitary
T = intertwiner_from_unitary(random_unitary(d, rng), Gp, G)
cert = check_metric_map(T.T, Gp, G)
print(f"\nT^H G T = G' residual: {cert.residual:.1e}")
e_Gp = expectation(T.transport_operator(O), T.transport_state(state))

print(f"\n<O> with metric G  : {e_G.real:+.12f}")
print(f"<O> Euclidean      : {e_euclid.real:+.12f}")
print(f"<O> with metric G' : {e_Gp.real:+.12f}")
