"""Figure rendering for cycle ledgers, observable trajectories, and sweeps.

All renderers draw to files through the non-interactive Agg backend and
return the written path, so they are safe in headless runs alongside the
delimited outputs they illustrate.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import ParameterError
from .simulate import CycleLedger
from .sweep import SweepResult

__all__ = ["plot_ledger", "plot_trajectory", "plot_sweep"]


def plot_ledger(ledger: CycleLedger, path: str) -> str:
    """Per-cycle heats/work, entropy production, and chain entropy."""

    n = [r.n for r in ledger.rows]
    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(6.0, 7.0))
    axes[0].plot(n, [r.Q_C for r in ledger.rows], "o-", ms=3, label="Q_C")
    axes[0].plot(n, [r.Q_H for r in ledger.rows], "s-", ms=3, label="Q_H")
    axes[0].plot(n, [r.W for r in ledger.rows], "^-", ms=3, label="W")
    axes[0].set_ylabel("energy per cycle")
    axes[0].legend(loc="best", fontsize=8)
    axes[1].plot(n, [r.Sigma for r in ledger.rows], "o-", ms=3, color="tab:red")
    axes[1].axhline(0.0, color="0.6", lw=0.8)
    axes[1].set_ylabel("entropy production")
    axes[2].plot(n, [r.S for r in ledger.rows], "o-", ms=3, color="tab:green")
    axes[2].set_ylabel("chain entropy")
    axes[2].set_xlabel("cycle n")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_trajectory(rows, path: str) -> str:
    """Populations and correlators of the two-qubit closed-form dynamics.

    ``rows`` is the (x_n, x~_n) sequence produced by
    :func:`twostroke.analytic.trajectory`; both stroke levels are shown.
    """

    n = np.arange(len(rows))
    fig, axes = plt.subplots(2, 1, sharex=True, figsize=(6.0, 5.5))
    for idx, label in ((0, "Z1"), (1, "Z2")):
        axes[0].plot(n, [row[0][idx] for row in rows], "o-", ms=3, label=label)
        axes[0].plot(
            n, [row[1][idx] for row in rows], "x--", ms=3, label=label + " (post-heat)"
        )
    axes[0].set_ylabel("populations")
    axes[0].legend(loc="best", fontsize=8)
    for idx, label in ((2, "S"), (3, "A")):
        axes[1].plot(n, [row[0][idx] for row in rows], "o-", ms=3, label=label)
    axes[1].axhline(0.0, color="0.6", lw=0.8)
    axes[1].set_ylabel("correlators")
    axes[1].set_xlabel("cycle n")
    axes[1].legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_sweep(result: SweepResult, path: str, field: str = "power") -> str:
    """Line plot (one axis) or heat map (two axes) of one report field."""

    if field not in result.columns:
        raise ParameterError(f"unknown sweep field {field!r}")
    col = result.columns.index(field)
    n_axes = result.columns.index("status")
    values = np.array(
        [np.nan if row[col] is None else float(row[col]) for row in result.rows]
    )
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    if n_axes == 1:
        coords = [row[0] for row in result.rows]
        ax.plot(coords, values, "o-", ms=3)
        ax.set_xlabel(result.columns[0])
        ax.set_ylabel(field)
    else:
        a0 = sorted({row[0] for row in result.rows})
        a1 = sorted({row[1] for row in result.rows})
        grid = values.reshape(len(a0), len(a1))
        mesh = ax.pcolormesh(a0, a1, grid.T, shading="nearest")
        ax.set_xlabel(result.columns[0])
        ax.set_ylabel(result.columns[1])
        fig.colorbar(mesh, ax=ax, label=field)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
