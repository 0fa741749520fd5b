"""Particle composition trees and substructure collapse-time predictions.

A superposition of two composite branches collapses at the rate set by the
total energy difference: the sum over position-paired constituents of the
absolute cross-branch rest-mass differences. Structureless equal-mass
branches have zero total difference and never collapse; the deeper the
structure, the larger the total difference tends to be and the shorter the
collapse time. The neutral-kaon long-lived state

    |K_L> = (1/sqrt(2)) [ |s dbar> - |d sbar> ]

is the built-in case study: with the default constituent-scale masses
(s: 500 MeV, d: 300 MeV) the total difference is 2|m_s - m_d| = 400 MeV.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Optional, Sequence, Union

from .analytic import collapse_time
from .core import Duration, Energy, PhysicalConstants, as_mev, as_seconds
from .errors import ValidationError

NORM_TOL = 1e-12

# constituent-scale quark masses; overridable via a mass-table file
DEFAULT_QUARK_MASSES: dict[str, float] = {"s": 500.0, "d": 300.0}


@dataclass(frozen=True)
class ParticleNode:
    """A node in a composition tree; no constituents means elementary.

    Elementary nodes must carry a rest mass (MeV). A composite's own mass is
    informational only (binding energy exists), so it may be omitted.
    """

    name: str
    mass_mev: Optional[float] = None
    constituents: tuple["ParticleNode", ...] = ()

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name:
            raise ValidationError("particle name must be a non-empty string")
        object.__setattr__(self, "constituents", tuple(self.constituents))
        if self.mass_mev is not None:
            mass = as_mev(self.mass_mev)
            if mass < 0.0:
                raise ValidationError(
                    f"rest mass must be >= 0, got {mass!r} for {self.name!r}")
            object.__setattr__(self, "mass_mev", mass)
        elif not self.constituents:
            raise ValidationError(
                f"elementary particle {self.name!r} needs a rest mass")

    @property
    def is_elementary(self) -> bool:
        return not self.constituents


def leaves(node: ParticleNode) -> tuple[ParticleNode, ...]:
    """Elementary descendants in depth-first document order; an elementary
    node yields itself."""
    if node.is_elementary:
        return (node,)
    out: list[ParticleNode] = []
    for child in node.constituents:
        out.extend(leaves(child))
    return tuple(out)


def total_energy_difference(branch_a: ParticleNode,
                            branch_b: ParticleNode) -> Energy:
    """Sum of |mass_a_i - mass_b_i| over position-paired leaves, in MeV.

    Leaves are paired by depth-first order across the two branches; unequal
    leaf counts are an error rather than being padded.
    """
    la, lb = leaves(branch_a), leaves(branch_b)
    if len(la) != len(lb):
        raise ValidationError(
            f"branches have different leaf counts: {branch_a.name!r} has "
            f"{len(la)}, {branch_b.name!r} has {len(lb)}")
    return Energy(math.fsum(abs(x.mass_mev - y.mass_mev) for x, y in zip(la, lb)))


@dataclass(frozen=True)
class SuperpositionSpec:
    """Two or more composition branches with complex amplitudes.

    Amplitudes are normalized on construction (kept bit-for-bit when already
    normalized within 1e-12). Branch leaf counts are checked at aggregation
    time, not here.
    """

    name: str
    branches: tuple[ParticleNode, ...]
    amplitudes: tuple[complex, ...]

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name:
            raise ValidationError("superposition name must be a non-empty string")
        branches = tuple(self.branches)
        if len(branches) < 2:
            raise ValidationError("a superposition needs at least 2 branches")
        amps = tuple(complex(a) for a in self.amplitudes)
        if len(amps) != len(branches):
            raise ValidationError(
                f"amplitude/branch count mismatch: {len(amps)} vs {len(branches)}")
        if any(not (math.isfinite(a.real) and math.isfinite(a.imag)) for a in amps):
            raise ValidationError("amplitudes must be finite")
        norm_sq = math.fsum(a.real * a.real + a.imag * a.imag for a in amps)
        if norm_sq == 0.0:
            raise ValidationError("amplitudes must not all be zero")
        if abs(norm_sq - 1.0) > NORM_TOL:
            root = math.sqrt(norm_sq)
            amps = tuple(a / root for a in amps)
        object.__setattr__(self, "branches", branches)
        object.__setattr__(self, "amplitudes", amps)


@dataclass(frozen=True)
class HypothesisReport:
    """Predicted collapse timescale for one substructure hypothesis.

    predicted_tc is None exactly when the total energy difference vanishes
    (the no-collapse case). log10_ratio = log10(predicted/measured) is set
    only when a measured timescale is attached and the prediction is finite.
    """

    hypothesis_name: str
    delta_e_total: Energy
    predicted_tc: Optional[Duration]
    k_used: float
    measured_timescale: Optional[Duration] = None
    log10_ratio: Optional[float] = None

    def __post_init__(self):
        expected = self.measured_timescale is not None and self.predicted_tc is not None
        if (self.log10_ratio is not None) != expected:
            raise ValidationError(
                "log10_ratio must be present exactly when a measured timescale "
                "is attached and the prediction is finite")

    @property
    def collapses(self) -> bool:
        return self.predicted_tc is not None


def predict_collapse_time(spec: SuperpositionSpec,
                          constants: PhysicalConstants) -> HypothesisReport:
    """Collapse-time prediction for a two-branch superposition.

    Depends only on the branch structure, never on the amplitudes.
    """
    if len(spec.branches) != 2:
        raise ValidationError(
            f"prediction is defined for exactly 2 branches, got {len(spec.branches)}")
    prediction = collapse_time(total_energy_difference(*spec.branches), constants)
    return HypothesisReport(hypothesis_name=spec.name,
                            delta_e_total=prediction.delta_e_total,
                            predicted_tc=prediction.collapse_time,
                            k_used=prediction.k_used)


def with_measured(report: HypothesisReport,
                  measured: Union[Duration, float]) -> HypothesisReport:
    """Attach a measured timescale; finite predictions get a log10 ratio."""
    m = as_seconds(measured)
    if m <= 0.0:
        raise ValidationError(f"measured timescale must be > 0, got {m!r}")
    ratio = None
    if report.predicted_tc is not None:
        ratio = math.log10(report.predicted_tc.seconds / m)
    return replace(report, measured_timescale=Duration(m), log10_ratio=ratio)


def compare_hypotheses(reports: Sequence[HypothesisReport],
                       measured: Union[Duration, float]) -> list[HypothesisReport]:
    """Rank hypotheses by closeness (in decades) to a measured timescale.

    No-collapse predictions are incomparable: they keep their original order
    at the end of the ranking with log10_ratio unset.
    """
    if as_seconds(measured) <= 0.0:
        raise ValidationError("measured timescale must be > 0")
    updated = [with_measured(r, measured) for r in reports]
    return sorted(updated, key=lambda r: (r.log10_ratio is None,
                                          abs(r.log10_ratio or 0.0)))


def mass_for(mass_table: Mapping[str, Union[Energy, float]], name: str) -> float:
    """Look up a rest mass; a trailing 'bar' falls back to the base name
    (antiparticles carry the particle's mass)."""
    if name in mass_table:
        return as_mev(mass_table[name])
    if name.endswith("bar") and name[:-3] in mass_table:
        return as_mev(mass_table[name[:-3]])
    raise ValidationError(f"mass table has no entry for {name!r}")


def kaon_superposition(
        mass_table: Optional[Mapping[str, Union[Energy, float]]] = None,
) -> SuperpositionSpec:
    """The K_L two-branch superposition (1/sqrt(2))[|s dbar> - |d sbar>]."""
    table = DEFAULT_QUARK_MASSES if mass_table is None else mass_table
    k0 = ParticleNode("K0", constituents=(
        ParticleNode("s", mass_for(table, "s")),
        ParticleNode("dbar", mass_for(table, "dbar")),
    ))
    k0bar = ParticleNode("K0bar", constituents=(
        ParticleNode("d", mass_for(table, "d")),
        ParticleNode("sbar", mass_for(table, "sbar")),
    ))
    amp = 1.0 / math.sqrt(2.0)
    return SuperpositionSpec("K_L", (k0, k0bar), (amp, -amp))


def kaon_case_study(
        constants: PhysicalConstants,
        mass_table: Optional[Mapping[str, Union[Energy, float]]] = None,
) -> HypothesisReport:
    """Collapse-time prediction for the K_L superposition.

    With the default mass table the total energy difference is 400 MeV and
    t_c(k=1) is about 5.02e-5 s.
    """
    return predict_collapse_time(kaon_superposition(mass_table), constants)
