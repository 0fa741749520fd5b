"""File formats: structure JSON, mass tables, delimited output, run manifests.

All numeric output uses shortest round-trip decimal formatting (repr), so a
file re-parses to bit-identical doubles. Every output file is accompanied by
a `<name>.manifest.json` sidecar recording the full parameter set needed to
reproduce it; the timestamp lives only in the manifest, never in the data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from . import __version__
from .core import PhysicalConstants
from .errors import ValidationError
from .structure import ParticleNode, SuperpositionSpec

SIMULATION_CSV_HEADER = ("t,rho11,re_rho12,im_rho12,rho22,mean_energy,"
                         "energy_variance,decided_1,decided_2,analytic_rho12")
SWEEP_CSV_HEADER = "delta_e_mev,tc_seconds"


def _fmt(x: float) -> str:
    """Shortest decimal string that parses back to the same double."""
    return repr(float(x))


# ---------------------------------------------------------------------------
# structure files


def _require(condition: bool, where: str, message: str) -> None:
    if not condition:
        raise ValidationError(f"{where}: {message}")


def _node_from_dict(obj, where: str, mass_table=None) -> ParticleNode:
    _require(isinstance(obj, dict), where, "expected an object")
    unknown = set(obj) - {"name", "mass_mev", "constituents"}
    _require(not unknown, where, f"unknown fields {sorted(unknown)}")
    name = obj.get("name")
    _require(isinstance(name, str) and bool(name), f"{where}.name",
             "expected a non-empty string")
    mass = obj.get("mass_mev")
    _require(mass is None or isinstance(mass, (int, float)),
             f"{where}.mass_mev", "expected a number")
    raw_children = obj.get("constituents", [])
    _require(isinstance(raw_children, list), f"{where}.constituents",
             "expected a list")
    children = tuple(
        _node_from_dict(child, f"{where}.constituents[{i}]", mass_table)
        for i, child in enumerate(raw_children))
    if mass is None and not children and mass_table is not None:
        try:
            from .structure import mass_for
            mass = mass_for(mass_table, name)
        except ValidationError:
            pass
    _require(mass is not None or bool(children), f"{where}.mass_mev",
             f"elementary particle {name!r} needs a mass_mev (or a mass-table entry)")
    return ParticleNode(name=name, mass_mev=mass, constituents=children)


def _node_to_dict(node: ParticleNode) -> dict:
    out: dict = {"name": node.name}
    if node.mass_mev is not None:
        out["mass_mev"] = node.mass_mev
    if node.constituents:
        out["constituents"] = [_node_to_dict(c) for c in node.constituents]
    return out


def structure_from_dict(obj, where: str = "structure",
                        mass_table=None) -> SuperpositionSpec:
    """Parse `{"name", "amplitudes": [[re, im], ...], "branches": [...]}`.

    Elementary nodes without mass_mev are resolved from `mass_table` when
    one is supplied. Violations raise ValidationError naming the field.
    """
    _require(isinstance(obj, dict), where, "expected an object")
    unknown = set(obj) - {"name", "amplitudes", "branches"}
    _require(not unknown, where, f"unknown fields {sorted(unknown)}")
    name = obj.get("name")
    _require(isinstance(name, str) and bool(name), f"{where}.name",
             "expected a non-empty string")
    raw_amps = obj.get("amplitudes")
    _require(isinstance(raw_amps, list) and len(raw_amps) >= 2,
             f"{where}.amplitudes", "expected a list of at least 2 [re, im] pairs")
    amps = []
    for i, pair in enumerate(raw_amps):
        _require(isinstance(pair, list) and len(pair) == 2
                 and all(isinstance(v, (int, float)) for v in pair),
                 f"{where}.amplitudes[{i}]", "expected a [re, im] number pair")
        amps.append(complex(pair[0], pair[1]))
    raw_branches = obj.get("branches")
    _require(isinstance(raw_branches, list) and len(raw_branches) >= 2,
             f"{where}.branches", "expected a list of at least 2 branches")
    branches = tuple(
        _node_from_dict(b, f"{where}.branches[{i}]", mass_table)
        for i, b in enumerate(raw_branches))
    return SuperpositionSpec(name=name, branches=branches, amplitudes=tuple(amps))


def structure_to_dict(spec: SuperpositionSpec) -> dict:
    return {
        "name": spec.name,
        "amplitudes": [[a.real, a.imag] for a in spec.amplitudes],
        "branches": [_node_to_dict(b) for b in spec.branches],
    }


def load_structure(path: Union[str, Path], mass_table=None) -> SuperpositionSpec:
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    return structure_from_dict(obj, where=str(path), mass_table=mass_table)


def save_structure(path: Union[str, Path], spec: SuperpositionSpec) -> None:
    Path(path).write_text(json.dumps(structure_to_dict(spec), indent=2) + "\n")


def load_mass_table(path: Union[str, Path]) -> dict[str, float]:
    """Flat JSON object name -> MeV; 'Xbar' entries fall back to 'X' at
    lookup time, not here."""
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    _require(isinstance(obj, dict), str(path), "expected an object of name -> MeV")
    table: dict[str, float] = {}
    for name, value in obj.items():
        _require(isinstance(value, (int, float)) and not isinstance(value, bool),
                 f"{path}.{name}", "expected a number (MeV)")
        _require(float(value) >= 0.0, f"{path}.{name}", "mass must be >= 0")
        table[name] = float(value)
    return table


# ---------------------------------------------------------------------------
# delimited output


def write_simulation_csv(path: Union[str, Path], stats,
                         analytic_rho12: np.ndarray) -> None:
    """One row per recorded time; `analytic_rho12` is the closed-form
    off-diagonal oracle evaluated on the same time grid."""
    pops = stats.populations
    off = stats.offdiag
    lines = [SIMULATION_CSV_HEADER]
    for j, t in enumerate(stats.times_s):
        lines.append(",".join([
            _fmt(t),
            _fmt(pops[j, 0]),
            _fmt(off[j].real),
            _fmt(off[j].imag),
            _fmt(pops[j, 1]),
            _fmt(stats.mean_energy_mev[j]),
            _fmt(stats.mean_energy_variance[j]),
            str(int(stats.decided_counts[j, 0])),
            str(int(stats.decided_counts[j, 1])),
            _fmt(analytic_rho12[j]),
        ]))
    Path(path).write_text("\n".join(lines) + "\n")


def write_sweep_csv(path: Union[str, Path], delta_e_mev: Iterable[float],
                    tc_seconds: Iterable[float]) -> None:
    lines = [SWEEP_CSV_HEADER]
    for de, tc in zip(delta_e_mev, tc_seconds):
        lines.append(f"{_fmt(de)},{_fmt(tc)}")
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# run manifests


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce an output file bit-for-bit (plus a
    timestamp, which is the one field excluded from the determinism
    contract)."""

    command: str
    parameters: dict
    constants: dict
    seed: Union[int, None]
    version: str = __version__
    created_utc: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat())

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "version": self.version,
            "created_utc": self.created_utc,
            "seed": self.seed,
            "parameters": self.parameters,
            "constants": self.constants,
        }


def manifest_path(out_path: Union[str, Path]) -> Path:
    return Path(str(out_path) + ".manifest.json")


def write_manifest(out_path: Union[str, Path], command: str, parameters: dict,
                   constants: PhysicalConstants,
                   seed: Union[int, None] = None) -> Path:
    manifest = RunManifest(
        command=command,
        parameters=parameters,
        constants={
            "hbar_mev_s": constants.hbar,
            "planck_energy_mev": constants.planck_energy,
            "k": constants.k,
        },
        seed=seed,
    )
    target = manifest_path(out_path)
    target.write_text(json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n")
    return target
