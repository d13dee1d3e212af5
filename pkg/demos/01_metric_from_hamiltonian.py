"""
A non-Hermitian Hamiltonian with a real spectrum
================================================

Build a metric for a 2x2 non-Hermitian Hamiltonian, check quasi-Hermiticity
and map the Hamiltonian to an equivalent Hermitian one.
"""

import numpy as np

from pseudoherm import hermitize, is_quasi_hermitian, metric_from_hamiltonian

H = np.array([[1, -2], [0, -1]], dtype=complex)
print("H =\n", H)
print("H is Hermitian:", np.allclose(H, H.conj().T))
print("spectrum:", np.sort(np.linalg.eigvals(H).real))

# The metric is a positive combination of projectors built from left eigenvectors.
# Different positive weights give different (equally valid) metrics.
for lam in ([0.5, 1.0], [1.0, 1.0], [3.0, 0.2]):
    m = metric_from_hamiltonian(H, lam)
    ok, res = is_quasi_hermitian(H, m)
    print(f"\nlambda = {lam}")
    print("G =\n", np.round(m.G.real, 6))
    print(f"eig(G) = {np.linalg.eigvalsh(m.G)}, quasi-Hermitian {ok} (residual {res:.1e})")

# With eta = sqrt(G), the similarity eta H eta^-1 is Hermitian with the same spectrum.
m = metric_from_hamiltonian(H, [0.5, 1.0])
h = hermitize(H, m)
print("\neta H eta^-1 =\n", np.round(h, 6))
print("Hermitian:", np.allclose(h, h.conj().T), " spectrum:", np.linalg.eigvalsh(h))

# The G-norm is conserved by exp(-iHt) while the Euclidean norm is not.
from scipy.linalg import expm

psi = np.array([0.0, 1.0], dtype=complex)
psi = psi / np.sqrt(m.norm_sq(psi))
for t in (0.0, 0.5, 1.0, 2.0):
    phi = expm(-1j * H * t) @ psi
    print(f"t = {t:3.1f}  G-norm {m.norm_sq(phi):.12f}  Euclidean norm {np.linalg.norm(phi) ** 2:.6f}")
