"""Command-line front end: simulate | predict | sweep | kaon.

Exit codes: 0 success, 1 usage error, 2 validation/schema error, 3 numeric
failure. Delimited output is deterministic for a given flag set and seed at
any worker count; the manifest sidecar (the only place a timestamp appears)
records everything needed to reproduce a file.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .analytic import TwoLevelSpec, collapse_time, decoherence_factor
from .core import (PhysicalConstants, dimensionless_constants,
                   make_constants)
from .errors import NumericFailure, ValidationError
from .formats import (load_mass_table, load_structure, save_structure,
                      write_manifest, write_simulation_csv, write_sweep_csv)
from .sde import SdeConfig, run_ensemble
from .structure import (DEFAULT_QUARK_MASSES, kaon_superposition, leaves,
                        predict_collapse_time, with_measured)

# the published K_L decay timescale the kaon report is annotated with
KL_REFERENCE_TIMESCALE_S = 1e-4


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


def _constants_from(args, dimensionless: bool = False) -> PhysicalConstants:
    if dimensionless:
        return dimensionless_constants(k=args.k)
    return make_constants(k=args.k)


def _report_to_dict(report) -> dict:
    out = {
        "hypothesis_name": report.hypothesis_name,
        "delta_e_total_mev": report.delta_e_total.mev,
        "predicted_tc_seconds": (report.predicted_tc.seconds
                                 if report.predicted_tc is not None
                                 else "no_collapse"),
        "k": report.k_used,
    }
    if report.measured_timescale is not None:
        out["measured_timescale_seconds"] = report.measured_timescale.seconds
    if report.log10_ratio is not None:
        out["log10_ratio"] = report.log10_ratio
    return out


def _emit_report(report, out_path: Optional[str], command: str,
                 parameters: dict, constants: PhysicalConstants) -> None:
    text = json.dumps(_report_to_dict(report), indent=2)
    print(text)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
        write_manifest(out_path, command, parameters, constants)


def cmd_simulate(args) -> int:
    constants = _constants_from(args, dimensionless=args.dimensionless)
    spec = TwoLevelSpec.from_alpha(args.alpha, args.delta_e, constants)
    config = SdeConfig(
        state0=spec.to_state(),
        constants=constants,
        dt=args.dt,
        t_max=args.t_max,
        n_trajectories=args.trajectories,
        seed=args.seed,
        record_stride=args.record_stride,
    )
    stats = run_ensemble(config, workers=args.workers)

    root = math.sqrt(spec.alpha0 * spec.beta0)
    analytic = np.array([
        decoherence_factor(spec.delta_e_mev, t, constants) * root
        for t in stats.times_s])
    write_simulation_csv(args.out, stats, analytic)
    parameters = {
        "delta_e": args.delta_e,
        "alpha": args.alpha,
        "trajectories": args.trajectories,
        "dt": args.dt,
        "t_max": args.t_max,
        "record_stride": args.record_stride,
        "dimensionless": args.dimensionless,
        "workers": args.workers,
        "engine": stats.metadata,
    }
    write_manifest(args.out, "simulate", parameters, constants, seed=args.seed)
    if args.figure:
        from .plots import save_simulation_figure
        save_simulation_figure(args.figure, stats, analytic)
    decided = int(stats.outcome_counts.sum())
    print(f"wrote {args.out}: {stats.times_s.size} times, "
          f"{stats.n_trajectories} trajectories, {decided} decided")
    return 0


def cmd_predict(args) -> int:
    mass_table = load_mass_table(args.masses) if args.masses else DEFAULT_QUARK_MASSES
    spec = load_structure(args.structure, mass_table=mass_table)
    constants = _constants_from(args)
    report = predict_collapse_time(spec, constants)
    if args.measured is not None:
        report = with_measured(report, args.measured)
    parameters = {
        "structure": str(args.structure),
        "masses": str(args.masses) if args.masses else None,
        "measured": args.measured,
    }
    _emit_report(report, args.out, "predict", parameters, constants)
    return 0


def cmd_sweep(args) -> int:
    if args.delta_e_min <= 0.0:
        raise ValidationError("--delta-e-min must be > 0 (zero difference never collapses)")
    if args.delta_e_max < args.delta_e_min:
        raise ValidationError("--delta-e-max must be >= --delta-e-min")
    if args.points < 1:
        raise ValidationError("--points must be >= 1")
    constants = _constants_from(args)
    grid = np.geomspace(args.delta_e_min, args.delta_e_max, args.points)
    tc = np.array([collapse_time(de, constants).collapse_time.seconds
                   for de in grid])
    write_sweep_csv(args.out, grid, tc)
    parameters = {
        "delta_e_min": args.delta_e_min,
        "delta_e_max": args.delta_e_max,
        "points": args.points,
    }
    write_manifest(args.out, "sweep", parameters, constants)
    if args.figure:
        from .plots import save_sweep_figure
        save_sweep_figure(args.figure, grid, tc)
    print(f"wrote {args.out}: {args.points} points")
    return 0


def cmd_kaon(args) -> int:
    mass_table = load_mass_table(args.masses) if args.masses else DEFAULT_QUARK_MASSES
    constants = _constants_from(args)
    spec = kaon_superposition(mass_table)
    report = predict_collapse_time(spec, constants)

    terms = []
    for amp, branch in zip(spec.amplitudes, spec.branches):
        quarks = " ".join(leaf.name for leaf in leaves(branch))
        sign = "-" if amp.real < 0 else "+"
        terms.append(f"{sign} (1/sqrt(2)) |{quarks}>")
    state_line = " ".join(terms).lstrip("+ ")
    print(f"state: |{spec.name}> = {state_line}")
    masses = {leaf.name: leaf.mass_mev
              for branch in spec.branches for leaf in leaves(branch)}
    print("constituent masses [MeV]: "
          + ", ".join(f"{n}={m:g}" for n, m in masses.items()))
    print(f"total energy difference: {report.delta_e_total.mev:g} MeV")
    if report.predicted_tc is not None:
        print(f"predicted collapse time (k={report.k_used:g}): "
              f"{report.predicted_tc.seconds:.4g} s")
    else:
        print(f"predicted collapse time (k={report.k_used:g}): no collapse")
    print(f"reference timescale: ~{KL_REFERENCE_TIMESCALE_S:.0e} s (K_L decay)")

    parameters = {"masses": str(args.masses) if args.masses else None}
    _emit_report(report, args.out, "kaon", parameters, constants)
    if args.emit_structure:
        save_structure(args.emit_structure, spec)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="collapselab",
                     description="Energy-driven collapse laboratory")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a two-level trajectory ensemble")
    sim.add_argument("--delta-e", type=float, required=True, dest="delta_e",
                     help="level splitting E2-E1 (MeV, or natural units with --dimensionless)")
    sim.add_argument("--alpha", type=float, required=True,
                     help="initial level-1 population in [0, 1]")
    sim.add_argument("--trajectories", type=int, required=True)
    sim.add_argument("--dt", type=float, required=True, help="step size (s)")
    sim.add_argument("--t-max", type=float, required=True, dest="t_max")
    sim.add_argument("--seed", type=int, required=True, help="unsigned 64-bit seed")
    sim.add_argument("--k", type=float, default=1.0, help="collapse constant")
    sim.add_argument("--out", required=True, help="output CSV path")
    sim.add_argument("--dimensionless", action="store_true",
                     help="run with hbar = E_p = 1")
    sim.add_argument("--record-stride", type=int, default=1, dest="record_stride")
    sim.add_argument("--workers", type=int, default=1,
                     help="worker processes (does not change the output bytes)")
    sim.add_argument("--figure", help="also render the decay curves to this image")
    sim.set_defaults(func=cmd_simulate)

    pre = sub.add_parser("predict", help="collapse time for a structure file")
    pre.add_argument("--structure", required=True, help="superposition JSON file")
    pre.add_argument("--k", type=float, default=1.0)
    pre.add_argument("--masses", help="mass-table JSON (name -> MeV)")
    pre.add_argument("--measured", type=float,
                     help="measured timescale (s) for the log10 ratio")
    pre.add_argument("--out", help="also write the JSON report here")
    pre.set_defaults(func=cmd_predict)

    swp = sub.add_parser("sweep", help="collapse time vs energy difference")
    swp.add_argument("--delta-e-min", type=float, required=True, dest="delta_e_min")
    swp.add_argument("--delta-e-max", type=float, required=True, dest="delta_e_max")
    swp.add_argument("--points", type=int, required=True)
    swp.add_argument("--k", type=float, default=1.0)
    swp.add_argument("--out", required=True)
    swp.add_argument("--figure", help="also render the sweep to this image")
    swp.set_defaults(func=cmd_sweep)

    kan = sub.add_parser("kaon", help="the built-in K_L case study")
    kan.add_argument("--k", type=float, default=1.0)
    kan.add_argument("--masses", help="mass-table JSON (name -> MeV)")
    kan.add_argument("--out", help="also write the JSON report here")
    kan.add_argument("--emit-structure",
                     help="write the constructed superposition as a structure file")
    kan.set_defaults(func=cmd_kaon)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericFailure as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
