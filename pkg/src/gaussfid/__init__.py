"""Average fidelity of Fock-encoded qubits under single-mode Gaussian channels."""

from .core import (
    ComplexGains,
    CovarianceMatrix,
    GainMatrix,
    GaussianChannel,
    NoiseEllipse,
    PhysicalityReport,
    Quadratures,
    check_physical,
    complex_gains,
    covariance_from_ellipse,
    ellipse_from_covariance,
    propagate_covariance,
    random_physical_channel,
    subtract_noise_mean,
)
from .fidelity import (
    FidelityInputs,
    average_qubit_fidelity,
    fidelity_asymmetric_diagonal,
    fidelity_symmetric,
    noiseless_amplifier_fidelity,
    optimal_phase_rotation,
    qubit_fidelity,
)

__version__ = "0.1.0"

__all__ = [
    "ComplexGains",
    "CovarianceMatrix",
    "GainMatrix",
    "GaussianChannel",
    "NoiseEllipse",
    "PhysicalityReport",
    "Quadratures",
    "check_physical",
    "complex_gains",
    "covariance_from_ellipse",
    "ellipse_from_covariance",
    "propagate_covariance",
    "random_physical_channel",
    "subtract_noise_mean",
    "FidelityInputs",
    "average_qubit_fidelity",
    "fidelity_asymmetric_diagonal",
    "fidelity_symmetric",
    "noiseless_amplifier_fidelity",
    "optimal_phase_rotation",
    "qubit_fidelity",
]
