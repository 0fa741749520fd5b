"""Trajectory-ensemble Monte Carlo for the energy-driven stochastic state equation.

Each trajectory integrates the Ito equation

    d|psi> = [ -(i/hbar) H dt - (gamma/2)(H - <H>)^2 dt
               + sqrt(gamma)(H - <H>) dW ] |psi>

with diagonal H, one Euler-Maruyama step per dt, and explicit renormalization
after every step. This is the standard norm-preserving quantum-state-diffusion
unraveling for a Hermitian coupling operator: level populations are
martingales, and the ensemble-mean density matrix obeys the double-commutator
master equation

    d rho / dt = -(i/hbar)[H, rho] - (gamma/2) [H, [H, rho]]

whose off-diagonal elements decay at rate (gamma/2)(E_i - E_j)^2. Choosing

    gamma = 2 / (k hbar E_p)

makes that rate exactly (dE)^2 / (k hbar E_p), the closed-form decay rate in
`analytic` (see coupling_gamma; the calibration is re-derived symbolically in
the test suite).

Reproducibility contract: every trajectory draws its Wiener increments from
its own counter-based Philox stream keyed by (seed, trajectory_index), and
ensemble statistics are reduced over fixed-size trajectory chunks in index
order. Results are therefore bit-identical for a given (seed, config)
regardless of how many worker processes execute the chunks, and any single
trajectory can be reproduced in isolation.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import repeat
from typing import Optional, Union

import numpy as np

from .core import Duration, NLevelState, PhysicalConstants, as_seconds
from .errors import NumericFailure, ValidationError

# gamma (E_max - E_min)^2 dt above this makes Euler-Maruyama drift steps
# large enough to corrupt the weak error; rejected at config validation.
STABILITY_BOUND = 0.1

DEFAULT_COLLAPSE_THRESHOLD = 1.0 - 1e-4

# minimum decided fraction before Born-rule z-scores are meaningful
BORN_DECIDED_FRACTION = 0.99

# below ~10 expected successes/failures the normal approximation behind the
# z-score is poor; reports are flagged rather than suppressed
LOW_POWER_COUNT = 10.0

_MAX_BLOCK_VALUES = 4_194_304  # Wiener-increment buffer cap, ~32 MB


def coupling_gamma(constants: PhysicalConstants) -> float:
    """Noise coupling gamma = 2 / (k hbar E_p), in 1/(MeV^2 s).

    Under the Ito step above, the ensemble-mean off-diagonal between levels
    i and j decays at rate (gamma/2)(E_i - E_j)^2; matching the closed-form
    rate (dE)^2/(k hbar E_p) fixes gamma. The dimensionless test mode
    (hbar = E_p = k = 1) gives gamma = 2.
    """
    return 2.0 / (constants.k * constants.hbar_times_planck_energy)


def _abs2(z: np.ndarray) -> np.ndarray:
    return z.real * z.real + z.imag * z.imag


def _advance(psi: np.ndarray, p: np.ndarray, energies: np.ndarray,
             phase_vec: Optional[np.ndarray], half_gamma_dt: float,
             sqrt_gamma: float, dw: np.ndarray, step_index: int,
             first_trajectory: int) -> np.ndarray:
    """One Euler-Maruyama step plus renormalization for a (m, n) batch.

    `p` must be the populations of `psi` (precomputed by the caller), `dw`
    a (m, 1) column of Wiener increments. Elementwise throughout, so row i
    evolves identically whether simulated alone or inside a batch.
    """
    mu = (p * energies).sum(axis=-1, keepdims=True)
    dev = energies - mu
    with np.errstate(over="ignore", invalid="ignore"):
        factor = (1.0 - half_gamma_dt * (dev * dev)) + (sqrt_gamma * dev) * dw
        if phase_vec is not None:
            factor = factor + phase_vec
        out = psi * factor
        norm_sq = _abs2(out).sum(axis=-1, keepdims=True)
    bad = ~np.isfinite(norm_sq) | (norm_sq <= 0.0)
    if bad.any():
        rows = np.nonzero(bad[:, 0])[0]
        raise NumericFailure(
            f"state blew up at step {step_index + 1} "
            f"(trajectories {[first_trajectory + int(r) for r in rows]})",
            step_index=step_index + 1,
            trajectory_indices=tuple(first_trajectory + int(r) for r in rows))
    return out / np.sqrt(norm_sq)


def _trajectory_generator(seed: int, trajectory_index: int) -> np.random.Generator:
    """The counter-based stream owned by one trajectory."""
    key = np.array([seed, trajectory_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class SdeConfig:
    """Everything that determines an ensemble bit-for-bit.

    dt and t_max may be Duration or bare seconds; the number of steps is
    round(t_max/dt). `record_stride` keeps every Nth step (step 0 and the
    final step are always kept). `include_phase=None` resolves to False:
    the deterministic -(i/hbar)H dt term only rotates phases, does not
    influence collapse observables, and the closed-form oracle is
    phase-free; pass True to integrate the full equation. `chunk_size`
    fixes the trajectory batching (and hence the reduction order) of
    ensemble statistics independently of worker count.
    """

    state0: NLevelState
    constants: PhysicalConstants
    dt: Union[Duration, float]
    t_max: Union[Duration, float]
    n_trajectories: int
    seed: int
    record_stride: int = 1
    collapse_threshold: float = DEFAULT_COLLAPSE_THRESHOLD
    include_phase: Optional[bool] = None
    chunk_size: int = 1024

    def __post_init__(self):
        dt_s = as_seconds(self.dt)
        t_max_s = as_seconds(self.t_max)
        if dt_s <= 0.0:
            raise ValidationError(f"dt must be > 0, got {dt_s!r}")
        if t_max_s < dt_s:
            raise ValidationError(f"t_max ({t_max_s!r}) must be >= dt ({dt_s!r})")
        object.__setattr__(self, "dt", dt_s)
        object.__setattr__(self, "t_max", t_max_s)
        if int(self.n_trajectories) < 1:
            raise ValidationError("n_trajectories must be >= 1")
        object.__setattr__(self, "n_trajectories", int(self.n_trajectories))
        seed = int(self.seed)
        if seed < 0 or seed >= 2 ** 64:
            raise ValidationError("seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "seed", seed)
        if int(self.record_stride) < 1:
            raise ValidationError("record_stride must be >= 1")
        object.__setattr__(self, "record_stride", int(self.record_stride))
        if not (0.5 < self.collapse_threshold <= 1.0):
            raise ValidationError("collapse_threshold must lie in (0.5, 1]")
        if int(self.chunk_size) < 1:
            raise ValidationError("chunk_size must be >= 1")
        object.__setattr__(self, "chunk_size", int(self.chunk_size))
        energies = self.state0.energies_mev
        spread = float(energies.max() - energies.min())
        stiffness = coupling_gamma(self.constants) * spread * spread * dt_s
        if stiffness > STABILITY_BOUND:
            raise ValidationError(
                f"gamma*(E_max-E_min)^2*dt = {stiffness!r} exceeds the "
                f"stability bound {STABILITY_BOUND}; reduce dt")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))

    @property
    def resolved_include_phase(self) -> bool:
        return bool(self.include_phase) if self.include_phase is not None else False

    def recorded_steps(self) -> np.ndarray:
        steps = list(range(0, self.n_steps + 1, self.record_stride))
        if steps[-1] != self.n_steps:
            steps.append(self.n_steps)
        return np.array(steps, dtype=np.int64)


@dataclass(frozen=True)
class TrajectoryRecord:
    """One stochastic realization: sampled states plus the collapse outcome.

    `outcome` is the level index whose population first reached the collapse
    threshold, or None if the run ended undecided; `outcome_time` is the
    matching time.
    """

    times_s: np.ndarray
    states: tuple[NLevelState, ...]
    outcome: Optional[int]
    outcome_time: Optional[Duration]


@dataclass(eq=False)
class EnsembleStats:
    """Trajectory-averaged observables on the recorded time grid.

    mean_density[j] is the average of |psi><psi| at times_s[j];
    mean_energy_variance[j] the average per-trajectory energy variance
    (MeV^2); decided_counts[j, l] the number of trajectories that had
    crossed the collapse threshold into level l by times_s[j]. The second
    moments are kept so tests can form standard errors.
    `measured_collapse_time` is the first recorded time at which
    |mean rho_01| fell to 1/e of its initial value (None if it never did,
    or if the initial off-diagonal vanishes).
    """

    times_s: np.ndarray
    mean_density: np.ndarray
    mean_energy_mev: np.ndarray
    mean_energy_second_moment: np.ndarray
    mean_energy_variance: np.ndarray
    pop_second_moment: np.ndarray
    offdiag_re_second_moment: np.ndarray
    decided_counts: np.ndarray
    n_trajectories: int
    measured_collapse_time: Optional[Duration]
    metadata: dict = field(default_factory=dict)

    @property
    def n_levels(self) -> int:
        return self.mean_density.shape[1]

    @property
    def populations(self) -> np.ndarray:
        """Mean populations, shape (times, levels)."""
        return np.einsum("tii->ti", self.mean_density).real

    @property
    def offdiag(self) -> np.ndarray:
        """Mean rho_01 over time (the two-level coherence)."""
        return self.mean_density[:, 0, 1]

    @property
    def outcome_counts(self) -> np.ndarray:
        return self.decided_counts[-1]

    @property
    def n_undecided(self) -> int:
        return self.n_trajectories - int(self.outcome_counts.sum())

    def population_stderr(self, level: int) -> np.ndarray:
        """Standard error of the mean population of one level, per time."""
        mean = self.populations[:, level]
        var = np.maximum(self.pop_second_moment[:, level] - mean * mean, 0.0)
        return np.sqrt(var / self.n_trajectories)

    def mean_energy_stderr(self) -> np.ndarray:
        var = np.maximum(self.mean_energy_second_moment - self.mean_energy_mev ** 2, 0.0)
        return np.sqrt(var / self.n_trajectories)

    def offdiag_re_stderr(self) -> np.ndarray:
        mean = self.offdiag.real
        var = np.maximum(self.offdiag_re_second_moment - mean * mean, 0.0)
        return np.sqrt(var / self.n_trajectories)


@dataclass
class _ChunkStats:
    sum_outer: np.ndarray
    sum_mu: np.ndarray
    sum_mu_sq: np.ndarray
    sum_var: np.ndarray
    sum_pop_sq: np.ndarray
    sum_re01_sq: np.ndarray
    decided_counts: np.ndarray

    def add_(self, other: "_ChunkStats") -> None:
        self.sum_outer += other.sum_outer
        self.sum_mu += other.sum_mu
        self.sum_mu_sq += other.sum_mu_sq
        self.sum_var += other.sum_var
        self.sum_pop_sq += other.sum_pop_sq
        self.sum_re01_sq += other.sum_re01_sq
        self.decided_counts += other.decided_counts


def _phase_vector(config: SdeConfig) -> Optional[np.ndarray]:
    if not config.resolved_include_phase:
        return None
    return (-1j * (config.dt / config.constants.hbar)) * config.state0.energies_mev


def _increment_blocks(generators, n_steps: int, sqrt_dt: float, m: int):
    """Yield (first_step, (m, block) increments); streams stay sequential."""
    block = max(1, min(n_steps, _MAX_BLOCK_VALUES // max(m, 1)))
    done = 0
    while done < n_steps:
        width = min(block, n_steps - done)
        buf = np.empty((m, width))
        for i, gen in enumerate(generators):
            buf[i] = gen.standard_normal(width)
        buf *= sqrt_dt
        yield done, buf
        done += width


def _simulate_chunk(config: SdeConfig, start: int, size: int) -> _ChunkStats:
    """Simulate trajectories [start, start+size) and accumulate their stats."""
    n = config.state0.n_levels
    energies = config.state0.energies_mev
    rec_steps = config.recorded_steps()
    n_rec = rec_steps.size
    n_steps = config.n_steps
    dt = config.dt
    gamma = coupling_gamma(config.constants)
    half_gamma_dt = 0.5 * gamma * dt
    sqrt_gamma = math.sqrt(gamma)
    sqrt_dt = math.sqrt(dt)
    phase_vec = _phase_vector(config)
    threshold = config.collapse_threshold

    psi = np.tile(config.state0.amplitudes, (size, 1)).astype(np.complex128)
    crossing_step = np.full(size, -1, dtype=np.int64)
    crossing_level = np.full(size, -1, dtype=np.int64)

    acc = _ChunkStats(
        sum_outer=np.zeros((n_rec, n, n), dtype=np.complex128),
        sum_mu=np.zeros(n_rec),
        sum_mu_sq=np.zeros(n_rec),
        sum_var=np.zeros(n_rec),
        sum_pop_sq=np.zeros((n_rec, n)),
        sum_re01_sq=np.zeros(n_rec),
        decided_counts=np.zeros((n_rec, n), dtype=np.int64),
    )

    generators = [_trajectory_generator(config.seed, start + i) for i in range(size)]
    blocks = _increment_blocks(generators, n_steps, sqrt_dt, size)
    buf_first, buf = next(blocks) if n_steps > 0 else (0, None)

    next_rec = 0
    for step_index in range(n_steps + 1):
        p = _abs2(psi)
        peak = p.max(axis=-1)
        newly = (crossing_step < 0) & (peak >= threshold)
        if newly.any():
            crossing_step[newly] = step_index
            crossing_level[newly] = p[newly].argmax(axis=-1)
        if next_rec < n_rec and step_index == rec_steps[next_rec]:
            acc.sum_outer[next_rec] += (psi[:, :, None] * psi.conj()[:, None, :]).sum(axis=0)
            mu = (p * energies).sum(axis=-1)
            acc.sum_mu[next_rec] += mu.sum()
            acc.sum_mu_sq[next_rec] += (mu * mu).sum()
            dev = energies - mu[:, None]
            acc.sum_var[next_rec] += (p * (dev * dev)).sum(axis=-1).sum()
            acc.sum_pop_sq[next_rec] += (p * p).sum(axis=0)
            re01 = psi[:, 0].real * psi[:, 1].real + psi[:, 0].imag * psi[:, 1].imag
            acc.sum_re01_sq[next_rec] += (re01 * re01).sum()
            next_rec += 1
        if step_index < n_steps:
            if step_index >= buf_first + buf.shape[1]:
                buf_first, buf = next(blocks)
            dw = buf[:, step_index - buf_first, None]
            psi = _advance(psi, p, energies, phase_vec, half_gamma_dt,
                           sqrt_gamma, dw, step_index, start)

    decided = crossing_step >= 0
    if decided.any():
        pos = np.searchsorted(rec_steps, crossing_step[decided], side="left")
        first_seen = np.zeros((n_rec, n), dtype=np.int64)
        np.add.at(first_seen, (pos, crossing_level[decided]), 1)
        acc.decided_counts += first_seen.cumsum(axis=0)
    return acc


def run_trajectory(config: SdeConfig, trajectory_index: int) -> TrajectoryRecord:
    """Integrate a single trajectory, deterministically in (seed, index).

    The Wiener stream is owned by the index, so the returned record is
    bit-identical whether the trajectory runs alone or inside an ensemble.
    """
    if int(trajectory_index) < 0:
        raise ValidationError("trajectory_index must be >= 0")
    trajectory_index = int(trajectory_index)

    energies = config.state0.energies_mev
    rec_steps = config.recorded_steps()
    n_steps = config.n_steps
    gamma = coupling_gamma(config.constants)
    half_gamma_dt = 0.5 * gamma * config.dt
    sqrt_gamma = math.sqrt(gamma)
    phase_vec = _phase_vector(config)
    threshold = config.collapse_threshold

    psi = config.state0.amplitudes[None, :].astype(np.complex128)
    generators = [_trajectory_generator(config.seed, trajectory_index)]
    blocks = _increment_blocks(generators, n_steps, math.sqrt(config.dt), 1)
    buf_first, buf = next(blocks) if n_steps > 0 else (0, None)

    states: list[NLevelState] = []
    outcome: Optional[int] = None
    outcome_step: Optional[int] = None
    next_rec = 0
    for step_index in range(n_steps + 1):
        p = _abs2(psi)
        if outcome is None and float(p.max()) >= threshold:
            outcome = int(p.argmax())
            outcome_step = step_index
        if next_rec < rec_steps.size and step_index == rec_steps[next_rec]:
            states.append(NLevelState(psi[0], energies))
            next_rec += 1
        if step_index < n_steps:
            if step_index >= buf_first + buf.shape[1]:
                buf_first, buf = next(blocks)
            dw = buf[:, step_index - buf_first, None]
            psi = _advance(psi, p, energies, phase_vec, half_gamma_dt,
                           sqrt_gamma, dw, step_index, trajectory_index)

    outcome_time = Duration(outcome_step * config.dt) if outcome_step is not None else None
    return TrajectoryRecord(times_s=rec_steps * config.dt, states=tuple(states),
                            outcome=outcome, outcome_time=outcome_time)


def _chunk_layout(n_trajectories: int, chunk_size: int) -> list[tuple[int, int]]:
    return [(start, min(chunk_size, n_trajectories - start))
            for start in range(0, n_trajectories, chunk_size)]


def run_ensemble(config: SdeConfig, *, workers: int = 1) -> EnsembleStats:
    """Average |psi><psi| and collapse statistics over all trajectories.

    `workers` > 1 distributes whole chunks over processes; the chunk layout
    and the reduction order are fixed by the config, so the result is
    bit-identical for any worker count. Trajectory blow-ups abort the whole
    ensemble, reporting the offending trajectory indices.
    """
    chunks = _chunk_layout(config.n_trajectories, config.chunk_size)
    if workers <= 1 or len(chunks) == 1:
        results = [_simulate_chunk(config, start, size) for start, size in chunks]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(chunks))) as pool:
            results = list(pool.map(_simulate_chunk, repeat(config),
                                    [c[0] for c in chunks], [c[1] for c in chunks]))

    total = results[0]
    for extra in results[1:]:
        total.add_(extra)

    n_traj = config.n_trajectories
    mean_density = total.sum_outer / n_traj
    trace_defect = float(np.max(np.abs(np.einsum("tii->t", mean_density) - 1.0)))
    if trace_defect > 1e-6:
        raise NumericFailure(
            f"ensemble-mean density matrix trace off by {trace_defect!r}")

    times = config.recorded_steps() * config.dt
    offdiag = np.abs(mean_density[:, 0, 1])
    measured: Optional[Duration] = None
    if offdiag[0] > 0.0:
        hits = np.nonzero(offdiag <= offdiag[0] / math.e)[0]
        if hits.size:
            measured = Duration(float(times[hits[0]]))

    metadata = {
        "seed": config.seed,
        "dt_s": config.dt,
        "t_max_s": config.t_max,
        "n_steps": config.n_steps,
        "record_stride": config.record_stride,
        "n_trajectories": n_traj,
        "collapse_threshold": config.collapse_threshold,
        "include_phase": config.resolved_include_phase,
        "gamma": coupling_gamma(config.constants),
        "chunk_size": config.chunk_size,
        "hbar_mev_s": config.constants.hbar,
        "planck_energy_mev": config.constants.planck_energy,
        "k": config.constants.k,
    }
    return EnsembleStats(
        times_s=times,
        mean_density=mean_density,
        mean_energy_mev=total.sum_mu / n_traj,
        mean_energy_second_moment=total.sum_mu_sq / n_traj,
        mean_energy_variance=total.sum_var / n_traj,
        pop_second_moment=total.sum_pop_sq / n_traj,
        offdiag_re_second_moment=total.sum_re01_sq / n_traj,
        decided_counts=total.decided_counts,
        n_trajectories=n_traj,
        measured_collapse_time=measured,
        metadata=metadata,
    )


def step(state: NLevelState, constants: PhysicalConstants,
         dt: Union[Duration, float], dw: float, *,
         include_phase: bool = True) -> NLevelState:
    """One Euler-Maruyama step of the full stochastic equation, renormalized.

    `dw` is a Wiener increment sample (variance dt). Eigenstates only pick
    up the deterministic phase exp(-i E dt / hbar); with include_phase=False
    (interaction picture) they are returned unchanged.
    """
    dt_s = as_seconds(dt)
    if dt_s <= 0.0:
        raise ValidationError(f"dt must be > 0, got {dt_s!r}")
    dw = float(dw)
    if not math.isfinite(dw):
        raise ValidationError(f"dW must be finite, got {dw!r}")
    gamma = coupling_gamma(constants)
    phase_vec = None
    if include_phase:
        phase_vec = (-1j * (dt_s / constants.hbar)) * state.energies_mev
    psi = state.amplitudes[None, :].astype(np.complex128)
    out = _advance(psi, _abs2(psi), state.energies_mev, phase_vec,
                   0.5 * gamma * dt_s, math.sqrt(gamma),
                   np.array([[dw]]), 0, 0)
    return NLevelState(out[0], state.energies_mev)


@dataclass(frozen=True)
class BornRuleLevel:
    level: int
    expected: float
    frequency: float
    z: Optional[float]


@dataclass(frozen=True)
class BornRuleReport:
    """Collapse-outcome frequencies against initial populations.

    z-scores are only computed when at least 99% of trajectories decided;
    low_power flags levels whose expected outcome counts are too small for
    the normal approximation (N p (1-p) < 10).
    """

    levels: tuple[BornRuleLevel, ...]
    n_trajectories: int
    n_undecided: int
    decided_fraction: float
    z_scores_valid: bool
    low_power: bool


def born_rule_check(stats: EnsembleStats, state0: NLevelState) -> BornRuleReport:
    """Compare per-level outcome frequencies with the initial populations.

    Frequencies are counts over the full ensemble size; the constancy of the
    mean populations forces them to match the initial populations once
    (almost) every trajectory has decided.
    """
    n_traj = stats.n_trajectories
    counts = stats.outcome_counts
    decided = int(counts.sum())
    fraction = decided / n_traj
    valid = fraction >= BORN_DECIDED_FRACTION
    expected = state0.populations
    low_power = False
    levels = []
    for idx in range(state0.n_levels):
        p = float(expected[idx])
        freq = float(counts[idx]) / n_traj
        z: Optional[float] = None
        if valid:
            if p <= 0.0 or p >= 1.0:
                z = 0.0 if freq == p else math.inf
            else:
                z = (freq - p) / math.sqrt(p * (1.0 - p) / n_traj)
                if n_traj * p * (1.0 - p) < LOW_POWER_COUNT:
                    low_power = True
        levels.append(BornRuleLevel(level=idx, expected=p, frequency=freq, z=z))
    return BornRuleReport(levels=tuple(levels), n_trajectories=n_traj,
                          n_undecided=n_traj - decided, decided_fraction=fraction,
                          z_scores_valid=valid, low_power=low_power)
