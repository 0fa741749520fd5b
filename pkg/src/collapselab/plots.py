"""Matplotlib rendering for the report paths of the CLI.

Figures are written straight to files (Agg backend, no display); the data
they show always exists in the accompanying CSV, so plots are a convenience
layer, never the output of record.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Union

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _new_axes(n_panels: int, width: float = 9.0):
    fig, axes = plt.subplots(1, n_panels,
                             figsize=(width, width / n_panels * GOLDEN + 0.6))
    for ax in np.atleast_1d(axes):
        ax.spines["top"].set_visible(False)
        ax.spines["right"].set_visible(False)
    return fig, axes


def save_simulation_figure(path: Union[str, Path], stats,
                           analytic_rho12: np.ndarray) -> None:
    """Off-diagonal decay against the closed-form oracle, plus populations."""
    t = stats.times_s
    fig, (ax_off, ax_pop) = _new_axes(2)

    ax_off.plot(t, stats.offdiag.real, lw=1.2, label="ensemble Re rho12")
    ax_off.plot(t, analytic_rho12, "k--", lw=1.0, label="closed form")
    ax_off.set_xlabel("t [s]")
    ax_off.set_ylabel("Re rho12")
    ax_off.legend(frameon=False)

    pops = stats.populations
    ax_pop.plot(t, pops[:, 0], lw=1.2, label="rho11")
    ax_pop.plot(t, pops[:, 1], lw=1.2, label="rho22")
    ax_pop.set_ylim(-0.05, 1.05)
    ax_pop.set_xlabel("t [s]")
    ax_pop.set_ylabel("population")
    ax_pop.legend(frameon=False)

    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_sweep_figure(path: Union[str, Path], delta_e_mev: np.ndarray,
                      tc_seconds: np.ndarray) -> None:
    """Collapse time against energy difference on log-log axes."""
    fig, ax = _new_axes(1, width=5.5)
    ax.loglog(delta_e_mev, tc_seconds, "o-", ms=3.5, lw=1.2)
    ax.set_xlabel("delta E [MeV]")
    ax.set_ylabel("t_c [s]")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
