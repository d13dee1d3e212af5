"""Numerical toolkit for quantum mechanics with non-Euclidean inner products.

Modules:

- :mod:`linalg` dense kernels (eigendecomposition, square roots, partial traces)
- :mod:`metric` metric operators, quasi-Hermiticity and maps between metric spaces
- :mod:`gns` finite-dimensional GNS construction
- :mod:`partition` bipartitions, operator Schmidt decomposition, entanglement
- :mod:`tomography` frames, reconstruction, Stern-Gerlach simulation, no-signalling
- :mod:`dynamics` Lindblad evolution and quantum-jump unravelings
- :mod:`cli` batch command line
"""

__version__ = "0.1.0"

from .errors import NumericalError, PseudoHermError, ValidationError
from .metric import (
    Metric,
    MetricMap,
    MetricState,
    check_metric_map,
    dehermitize,
    expectation,
    g_adjoint,
    hermitize,
    intertwiner_from_unitary,
    is_quasi_hermitian,
    metric_from_hamiltonian,
)
from .gns import StateFunctional, close_algebra, full_matrix_algebra, gns_construct, product_representation
from .partition import (
    Bipartition,
    Verdict,
    entanglement_entropy,
    hamiltonian_compatible_class,
    is_local_unitary,
    operator_schmidt,
    same_bipartition,
)
from .tomography import (
    OperatorFrame,
    SternGerlachConfig,
    pauli_frame,
    reconstruct,
    sampling_superoperator,
    simulate_dataset,
    stern_gerlach_probabilities,
    verify_no_signalling,
)
from .dynamics import (
    LindbladModel,
    TrajectoryConfig,
    convert_state_convention,
    lindblad_step,
    metric_trajectory_step,
    run_trajectories,
    trajectory_step,
)

__all__ = [
    "__version__",
    "NumericalError",
    "PseudoHermError",
    "ValidationError",
    "Metric",
    "MetricMap",
    "MetricState",
    "check_metric_map",
    "dehermitize",
    "expectation",
    "g_adjoint",
    "hermitize",
    "intertwiner_from_unitary",
    "is_quasi_hermitian",
    "metric_from_hamiltonian",
    "StateFunctional",
    "close_algebra",
    "full_matrix_algebra",
    "gns_construct",
    "product_representation",
    "Bipartition",
    "Verdict",
    "entanglement_entropy",
    "hamiltonian_compatible_class",
    "is_local_unitary",
    "operator_schmidt",
    "same_bipartition",
    "OperatorFrame",
    "SternGerlachConfig",
    "pauli_frame",
    "reconstruct",
    "sampling_superoperator",
    "simulate_dataset",
    "stern_gerlach_probabilities",
    "verify_no_signalling",
    "LindbladModel",
    "TrajectoryConfig",
    "convert_state_convention",
    "lindblad_step",
    "metric_trajectory_step",
    "run_trajectories",
    "trajectory_step",
]
