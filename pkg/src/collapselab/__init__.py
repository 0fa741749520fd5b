"""Numerical laboratory for energy-driven wavefunction collapse.

Three complementary views of the same dynamics:

* `analytic` -- the closed-form two-level mean density matrix and the
  collapse-time formula t_c = k hbar E_p / (dE)^2;
* `sde` -- a reproducible Monte Carlo ensemble of stochastic trajectories
  whose averages must land on the closed forms;
* `structure` -- composition trees that turn substructure hypotheses into
  collapse-time predictions, including the built-in K_L case study.

The `collapselab` CLI front end drives all three and defines the file
formats (see `formats`).
"""

__version__ = "0.1.0"

from .core import (DEFAULT_CONSTANTS, Duration, Energy, DensityMatrix,
                   NLevelState, PhysicalConstants, density_of,
                   dimensionless_constants, energy_variance, make_constants,
                   make_state, mean_energy)
from .analytic import (CollapsePrediction, TwoLevelSpec, collapse_time,
                       decoherence_factor, density_matrix_mean,
                       density_matrix_short_time)
from .errors import NumericFailure, ValidationError, ValidityWindowError
from .sde import (BornRuleReport, EnsembleStats, SdeConfig, TrajectoryRecord,
                  born_rule_check, coupling_gamma, run_ensemble, run_trajectory)
from .structure import (DEFAULT_QUARK_MASSES, HypothesisReport, ParticleNode,
                        SuperpositionSpec, compare_hypotheses, kaon_case_study,
                        kaon_superposition, leaves, predict_collapse_time,
                        total_energy_difference, with_measured)

__all__ = [
    "__version__",
    "BornRuleReport", "CollapsePrediction", "DEFAULT_CONSTANTS",
    "DEFAULT_QUARK_MASSES", "DensityMatrix", "Duration", "Energy",
    "EnsembleStats", "HypothesisReport", "NLevelState", "NumericFailure",
    "ParticleNode", "PhysicalConstants", "SdeConfig", "SuperpositionSpec",
    "TrajectoryRecord", "TwoLevelSpec", "ValidationError",
    "ValidityWindowError", "born_rule_check", "collapse_time",
    "compare_hypotheses", "coupling_gamma", "decoherence_factor",
    "density_matrix_mean", "density_matrix_short_time", "density_of",
    "dimensionless_constants", "energy_variance", "kaon_case_study",
    "kaon_superposition", "leaves", "make_constants", "make_state",
    "mean_energy", "predict_collapse_time", "run_ensemble", "run_trajectory",
    "total_energy_difference", "with_measured",
]
