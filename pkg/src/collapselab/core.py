"""Physical constants, dimensioned scalars, quantum states, and density matrices.

Unit discipline for the whole package: energies in MeV, times in seconds,
amplitudes dimensionless. Conversions happen once, here, at the constants
boundary. A dimensionless test mode (hbar = E_p = k = 1) is first-class
because simulating real-unit decoherence rates against MeV-scale oscillation
frequencies is numerically hostile; all formulas are scale-free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, InitVar
from typing import Sequence, Union

import numpy as np

from .errors import ValidationError

# CODATA reduced Planck constant converted to MeV*s and the PDG Planck
# energy sqrt(hbar c^5 / G) in MeV.
HBAR_MEV_S = 6.582119569e-22
PLANCK_ENERGY_MEV = 1.220890e22

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_EIGENVALUE_FLOOR = -1e-9


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True, order=True)
class Energy:
    """An energy in MeV. Differences may be negative; rest energies are
    validated as non-negative at their use sites."""

    mev: float

    def __post_init__(self):
        object.__setattr__(self, "mev", _require_finite("energy", self.mev))

    def __abs__(self) -> "Energy":
        return Energy(abs(self.mev))

    def __add__(self, other: "Energy") -> "Energy":
        return Energy(self.mev + other.mev)

    def __sub__(self, other: "Energy") -> "Energy":
        return Energy(self.mev - other.mev)


@dataclass(frozen=True, order=True)
class Duration:
    """A time span in seconds."""

    seconds: float

    def __post_init__(self):
        object.__setattr__(self, "seconds", _require_finite("duration", self.seconds))


def as_mev(value: Union[Energy, float, int]) -> float:
    """Coerce an Energy or bare number to a finite float in MeV."""
    if isinstance(value, Energy):
        return value.mev
    return _require_finite("energy", value)


def as_seconds(value: Union[Duration, float, int]) -> float:
    """Coerce a Duration or bare number to a finite float in seconds."""
    if isinstance(value, Duration):
        return value.seconds
    return _require_finite("duration", value)


@dataclass(frozen=True)
class PhysicalConstants:
    """The three numbers every collapse formula needs.

    hbar           reduced Planck constant, MeV*s
    planck_energy  Planck energy, MeV
    k              dimensionless collapse constant (order unity)
    """

    hbar: float = HBAR_MEV_S
    planck_energy: float = PLANCK_ENERGY_MEV
    k: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "planck_energy", "k"):
            value = _require_finite(name, getattr(self, name))
            if value <= 0.0:
                raise ValidationError(f"{name} must be positive, got {value!r}")
            object.__setattr__(self, name, value)

    @property
    def hbar_times_planck_energy(self) -> float:
        """hbar * E_p in MeV^2*s; the numerator of every collapse-time formula."""
        return self.hbar * self.planck_energy

    @property
    def is_dimensionless(self) -> bool:
        return self.hbar == 1.0 and self.planck_energy == 1.0


def make_constants(hbar: float = HBAR_MEV_S,
                   planck_energy: float = PLANCK_ENERGY_MEV,
                   k: float = 1.0) -> PhysicalConstants:
    """Build a validated constants record (all arguments must be > 0)."""
    return PhysicalConstants(hbar=hbar, planck_energy=planck_energy, k=k)


def dimensionless_constants(k: float = 1.0) -> PhysicalConstants:
    """Constants for the scale-free test mode: hbar = E_p = 1."""
    return PhysicalConstants(hbar=1.0, planck_energy=1.0, k=k)


DEFAULT_CONSTANTS = PhysicalConstants()


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class NLevelState:
    """A pure state over >= 2 energy eigenlevels.

    amplitudes    complex, unit norm within 1e-12
    energies_mev  the diagonal Hamiltonian (MeV; bare numbers in
                  dimensionless mode)
    """

    amplitudes: np.ndarray
    energies_mev: np.ndarray

    def __post_init__(self):
        amps = _frozen_array(self.amplitudes, np.complex128)
        energies = _frozen_array(self.energies_mev, np.float64)
        if amps.ndim != 1 or energies.ndim != 1:
            raise ValidationError("amplitudes and energies must be 1-d sequences")
        if amps.size != energies.size:
            raise ValidationError(
                f"amplitude/energy length mismatch: {amps.size} vs {energies.size}")
        if amps.size < 2:
            raise ValidationError("a state needs at least 2 levels")
        if not np.all(np.isfinite(amps.view(np.float64))) or not np.all(np.isfinite(energies)):
            raise ValidationError("amplitudes and energies must be finite")
        norm_sq = float(np.sum(amps.real * amps.real + amps.imag * amps.imag))
        if abs(norm_sq - 1.0) > NORM_TOL:
            raise ValidationError(
                f"state norm^2 = {norm_sq!r} differs from 1 by more than {NORM_TOL}")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "energies_mev", energies)

    @property
    def n_levels(self) -> int:
        return self.amplitudes.size

    @property
    def populations(self) -> np.ndarray:
        a = self.amplitudes
        return a.real * a.real + a.imag * a.imag


def make_state(amplitudes: Sequence[complex],
               energies: Sequence[Union[Energy, float]]) -> NLevelState:
    """Build a normalized state, preserving relative phases.

    Amplitudes already normalized within 1e-12 are kept bit-for-bit;
    otherwise the vector is divided by its norm. All-zero amplitude
    vectors, non-finite entries, and length mismatches are rejected.
    """
    amps = np.array(list(amplitudes), dtype=np.complex128)
    energies_mev = np.array([as_mev(e) for e in energies], dtype=np.float64)
    if amps.ndim != 1:
        raise ValidationError("amplitudes must be a flat sequence")
    if not np.all(np.isfinite(amps.view(np.float64))):
        raise ValidationError("amplitudes must be finite")
    norm_sq = float(np.sum(amps.real * amps.real + amps.imag * amps.imag))
    if norm_sq == 0.0:
        raise ValidationError("amplitudes must not all be zero")
    if abs(norm_sq - 1.0) > NORM_TOL:
        amps = amps / math.sqrt(norm_sq)
    return NLevelState(amplitudes=amps, energies_mev=energies_mev)


@dataclass(frozen=True)
class DensityMatrix:
    """A Hermitian, trace-1, positive-semidefinite complex matrix.

    The PSD check may be skipped only for matrices explicitly flagged as a
    short-time linear approximation evaluated outside its validity range.
    """

    entries: np.ndarray
    validate_psd: InitVar[bool] = True

    def __post_init__(self, validate_psd: bool):
        m = _frozen_array(self.entries, np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError(f"density matrix must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m.view(np.float64))):
            raise ValidationError("density matrix entries must be finite")
        herm_defect = float(np.max(np.abs(m - m.conj().T)))
        if herm_defect > HERMITIAN_TOL:
            raise ValidationError(
                f"density matrix not Hermitian: max |rho - rho^dagger| = {herm_defect!r}")
        trace = complex(np.trace(m))
        if abs(trace - 1.0) > TRACE_TOL:
            raise ValidationError(f"density matrix trace = {trace!r}, expected 1")
        if validate_psd:
            lowest = float(np.linalg.eigvalsh(m)[0])
            if lowest < PSD_EIGENVALUE_FLOOR:
                raise ValidationError(
                    f"density matrix has eigenvalue {lowest!r} below "
                    f"{PSD_EIGENVALUE_FLOOR}")
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def density_of(state: NLevelState) -> DensityMatrix:
    """Outer product |psi><psi| of a pure state (Hermitian, trace 1, rank 1)."""
    a = state.amplitudes
    return DensityMatrix(np.outer(a, a.conj()))


def mean_energy(state: NLevelState) -> Energy:
    """Expectation of the diagonal Hamiltonian, sum_i |a_i|^2 E_i."""
    return Energy(float(np.dot(state.populations, state.energies_mev)))


def energy_variance(state: NLevelState) -> float:
    """Energy variance in MeV^2; zero exactly iff the state has support on a
    single energy value (equal-energy levels count as one value)."""
    p = state.populations
    e = state.energies_mev
    support = e[p > 0.0]
    if support.size == 0 or np.all(support == support[0]):
        return 0.0
    mu = float(np.dot(p, e))
    return float(np.dot(p, (e - mu) ** 2))
