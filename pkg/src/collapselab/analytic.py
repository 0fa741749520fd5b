"""Closed-form evolution of a two-level superposition under energy-driven collapse.

The mean density matrix keeps constant diagonals while the off-diagonal
element decays with the dimensionless progress variable

    tau = (dE)^2 t / (k hbar E_p).

Two off-diagonal forms are exposed: the first-order factor (1 - tau), valid
for tau <= 0.5, and the full exponential exp(-tau), which matches the linear
form to O(tau^2) and stays positive semidefinite for all t. The collapse
time is where tau = 1:

    t_c = k hbar E_p / (dE)^2

so t_c is exactly the e-folding time of the off-diagonal decay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .core import (DensityMatrix, Duration, Energy, NLevelState,
                   PhysicalConstants, as_mev, as_seconds, make_state)
from .errors import ValidationError, ValidityWindowError

# Above this tau the linear form can lose positive semidefiniteness for some
# populations; callers must switch to the exponential form.
LINEAR_FORM_TAU_MAX = 0.5

PROBABILITY_SUM_TOL = 1e-12


@dataclass(frozen=True)
class TwoLevelSpec:
    """Initial populations, level splitting, and constants for a two-level run.

    alpha0 and beta0 are the level-1 and level-2 populations (alpha0 + beta0
    = 1); delta_e_mev is E_2 - E_1 >= 0.
    """

    alpha0: float
    beta0: float
    delta_e_mev: float
    constants: PhysicalConstants

    def __post_init__(self):
        for name in ("alpha0", "beta0"):
            p = float(getattr(self, name))
            if not math.isfinite(p) or p < 0.0 or p > 1.0:
                raise ValidationError(f"{name} must lie in [0, 1], got {p!r}")
            object.__setattr__(self, name, p)
        if abs(self.alpha0 + self.beta0 - 1.0) > PROBABILITY_SUM_TOL:
            raise ValidationError(
                f"populations must sum to 1, got {self.alpha0 + self.beta0!r}")
        de = as_mev(self.delta_e_mev)
        if de < 0.0:
            raise ValidationError(f"delta_e must be >= 0, got {de!r}")
        object.__setattr__(self, "delta_e_mev", de)

    @classmethod
    def from_alpha(cls, alpha0: float, delta_e: Union[Energy, float],
                   constants: PhysicalConstants) -> "TwoLevelSpec":
        alpha0 = float(alpha0)
        return cls(alpha0=alpha0, beta0=1.0 - alpha0,
                   delta_e_mev=as_mev(delta_e), constants=constants)

    def to_state(self) -> NLevelState:
        """The state sqrt(alpha0)|1> + sqrt(beta0)|2> with energies (0, dE)."""
        return make_state([math.sqrt(self.alpha0), math.sqrt(self.beta0)],
                          [0.0, self.delta_e_mev])

    def tau_at(self, t: Union[Duration, float]) -> float:
        """Dimensionless decoherence progress (dE)^2 t / (k hbar E_p)."""
        t_s = as_seconds(t)
        if t_s < 0.0:
            raise ValidationError(f"time must be >= 0, got {t_s!r}")
        c = self.constants
        return self.delta_e_mev ** 2 * t_s / (c.k * c.hbar_times_planck_energy)


@dataclass(frozen=True)
class CollapsePrediction:
    """A collapse time, or None when the superposition never collapses
    (exactly the zero energy-difference case)."""

    collapse_time: Optional[Duration]
    delta_e_total: Energy
    k_used: float

    def __post_init__(self):
        if (self.collapse_time is None) != (self.delta_e_total.mev == 0.0):
            raise ValidationError(
                "collapse_time must be None exactly when delta_e_total is zero")
        if self.collapse_time is not None and self.collapse_time.seconds <= 0.0:
            raise ValidationError("a finite collapse time must be positive")

    @property
    def collapses(self) -> bool:
        return self.collapse_time is not None


def collapse_time(delta_e: Union[Energy, float],
                  constants: PhysicalConstants) -> CollapsePrediction:
    """Collapse time t_c = k hbar E_p / (dE)^2 in seconds.

    A zero energy difference yields the no-collapse prediction; negative or
    non-finite dE is a validation error.
    """
    de = as_mev(delta_e)
    if de < 0.0:
        raise ValidationError(f"delta_e must be >= 0, got {de!r}")
    if de == 0.0:
        return CollapsePrediction(None, Energy(0.0), constants.k)
    tc = constants.k * constants.hbar_times_planck_energy / (de * de)
    return CollapsePrediction(Duration(tc), Energy(de), constants.k)


def decoherence_factor(delta_e: Union[Energy, float], t: Union[Duration, float],
                       constants: PhysicalConstants) -> float:
    """Off-diagonal survival factor exp(-tau), tau = (dE)^2 t / (k hbar E_p).

    Identically 1 when dE = 0; agrees with the first-order factor (1 - tau)
    to O(tau^2). Monotonically non-increasing in both t and dE.
    """
    de = as_mev(delta_e)
    if de < 0.0:
        raise ValidationError(f"delta_e must be >= 0, got {de!r}")
    t_s = as_seconds(t)
    if t_s < 0.0:
        raise ValidationError(f"time must be >= 0, got {t_s!r}")
    return math.exp(-(de * de) * t_s / (constants.k * constants.hbar_times_planck_energy))


def _two_level_density(alpha0: float, beta0: float, offdiag: float,
                       validate_psd: bool = True) -> DensityMatrix:
    root = math.sqrt(alpha0 * beta0)
    entries = np.array([[alpha0, offdiag * root],
                        [offdiag * root, beta0]], dtype=np.complex128)
    return DensityMatrix(entries, validate_psd=validate_psd)


def density_matrix_short_time(spec: TwoLevelSpec,
                              t: Union[Duration, float]) -> DensityMatrix:
    """Mean density matrix with the first-order off-diagonal factor (1 - tau).

    Diagonals are the initial populations for all t. Only valid for
    tau <= 0.5; beyond that a ValidityWindowError is raised and the
    exponential form (density_matrix_mean) must be used.
    """
    tau = spec.tau_at(t)
    if tau > LINEAR_FORM_TAU_MAX:
        raise ValidityWindowError(
            f"linear off-diagonal factor requested at tau = {tau!r}, beyond "
            f"its validity window tau <= {LINEAR_FORM_TAU_MAX}")
    return _two_level_density(spec.alpha0, spec.beta0, 1.0 - tau)


def density_matrix_mean(spec: TwoLevelSpec,
                        t: Union[Duration, float]) -> DensityMatrix:
    """Mean density matrix with the exponential off-diagonal factor exp(-tau).

    Positive semidefinite for all t >= 0; equals the short-time form at
    t = 0 exactly.
    """
    factor = decoherence_factor(Energy(spec.delta_e_mev), t, spec.constants)
    return _two_level_density(spec.alpha0, spec.beta0, factor)
