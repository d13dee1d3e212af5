"""
GNS representations of matrix algebras
======================================

A state on a matrix algebra determines a Hilbert space, a representation and a
cyclic vector. Pure states give small representations and faithful states give
the largest one.
"""

import numpy as np

from pseudoherm import StateFunctional, close_algebra, full_matrix_algebra, gns_construct

alg = full_matrix_algebra(2)
cases = {
    "pure |0><0|": np.diag([1.0, 0.0]),
    "mixed diag(0.3, 0.7)": np.diag([0.3, 0.7]),
    "maximally mixed": np.eye(2) / 2,
}
for name, rho in cases.items():
    rep = gns_construct(StateFunctional.from_density(alg, rho))
    worst = max(rep.residuals()[k] for k in ("reconstruction", "homomorphism", "star"))
    print(f"{name:22s} Hilbert dimension {rep.hilbert_dim}, max residual {worst:.1e}")

# A commutative subalgebra generated by sigma_z
diag = close_algebra([np.diag([1.0, -1.0])])
rep = gns_construct(StateFunctional.from_density(diag, np.diag([0.3, 0.7])))
print(f"\nalgebra generated by sigma_z: size {diag.size}, GNS dimension {rep.hilbert_dim}")
