from dataclasses import dataclass

import numpy as np

from otto_engine.common.engine_instance.engine_services.shared.helper_method import helper_method

# All 4x4 matrices use the operator ordering (a, b, a+, b+); indices below are 0-based.
PHOTON = (2, 0)
PHONON = (3, 1)


@dataclass(frozen=True, eq=False)
class DriftMatrix:
    entries: np.ndarray
    detuning: float


@dataclass(frozen=True, eq=False)
class NoiseMatrix:
    entries: np.ndarray


@dataclass(frozen=True, eq=False)
class HamiltonianMatrix:
    entries: np.ndarray
    detuning: float


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    """Second moments C_ij = <v_i v_j> of v = (a, b, a+, b+)."""

    entries: np.ndarray

    @classmethod
    def of(cls, entries: np.ndarray) -> "CorrelationMatrix":
        return cls(helper_method.frozen(entries))

    @property
    def n_photon(self) -> float:
        return float(self.entries[PHOTON].real)

    @property
    def n_phonon(self) -> float:
        return float(self.entries[PHONON].real)

    def commutator_residual(self) -> float:
        c = self.entries
        return max(abs(c[0, 2] - c[2, 0] - 1.0), abs(c[1, 3] - c[3, 1] - 1.0))

    def conjugation_residual(self) -> float:
        return helper_method.max_abs(self.entries - helper_method.correlation_image(self.entries))


@dataclass(frozen=True)
class StabilityReport:
    hamiltonian_stable: bool
    dynamically_stable: bool
    max_real_eigenvalue: float
    boundary_detuning: float

    @property
    def stable(self) -> bool:
        return self.hamiltonian_stable and self.dynamically_stable


@dataclass(frozen=True, eq=False)
class PolaritonBasis:
    transform: np.ndarray
    omega_a: float
    omega_b: float
    detuning: float
    eigenvalues: np.ndarray

    @property
    def inverse(self) -> np.ndarray:
        return helper_method.symplectic_inverse(self.transform)


@dataclass(frozen=True, eq=False)
class PolaritonState:
    n_upper: float
    n_lower: float
    correlations: np.ndarray


@dataclass(frozen=True, eq=False)
class PolaritonSpectrum:
    detunings: np.ndarray
    omega_a: np.ndarray
    omega_b: np.ndarray
    hamiltonian_stable: np.ndarray
