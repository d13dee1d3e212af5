"""
Which subsystems does a metric space carry?
===========================================

Two metric spaces describe the same split into subsystems when the unitary
relating their Hermitised pictures is a product of local unitaries. Entanglement
is only meaningful relative to such a split.
"""

import numpy as np

from pseudoherm import Metric, MetricState, intertwiner_from_unitary, operator_schmidt, same_bipartition
from pseudoherm.ensembles import random_metric_matrix, random_unitary
from pseudoherm.partition import entanglement_entropy

rng = np.random.default_rng(3)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
local = np.kron(random_unitary(2, rng), random_unitary(2, rng))

print("operator Schmidt coefficients")
for name, U in (("local", local), ("CNOT", CNOT), ("SWAP", SWAP)):
    print(f"  {name:5s}", np.round(operator_schmidt(U, (2, 2)).coefficients, 6))

G = Metric(random_metric_matrix(4, rng))
Gp = Metric(random_metric_matrix(4, rng))
print()
for name, U in (("local", local), ("CNOT", CNOT), ("SWAP", SWAP)):
    rep = same_bipartition(G, Gp, intertwiner_from_unitary(U, Gp, G).T, (2, 2))
    print(f"T built from {name:5s} -> {rep.verdict.value}")

# Entanglement of a Bell state moved between the two spaces
bell = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
state = MetricState.from_euclidean(np.outer(bell, bell.conj()), Gp)
print(f"\nentropy on H_G'                 : {entanglement_entropy(state, (2, 2)):.3f} bit")
for name, U in (("local", local), ("CNOT", CNOT)):
    moved = intertwiner_from_unitary(U, Gp, G).forward_state(state)
    print(f"entropy on H_G after {name:5s} map : {entanglement_entropy(moved, (2, 2)):.3f} bit")
