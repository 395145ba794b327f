"""Figure rendering for the command line reports.

All figures are written straight to files (Agg backend); nothing is ever
shown interactively.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def plot_potential(pot, path, reference=None, title=None):
    """Per-edge panels of Re/Im sigma; optional reference overlay."""
    edges = pot.tree.edges
    ncol = min(3, len(edges))
    nrow = int(np.ceil(len(edges) / ncol))
    fig, axes = plt.subplots(nrow, ncol, figsize=(4 * ncol, 2.8 * nrow),
                             squeeze=False)
    for ax, j in zip(axes.flat, edges):
        ep = pot.edges[j]
        ax.plot(ep.grid, ep.values.real, "C0-", lw=1.2, label="Re")
        if np.max(np.abs(ep.values.imag)) > 1e-12:
            ax.plot(ep.grid, ep.values.imag, "C1-", lw=1.2, label="Im")
        if reference is not None:
            rp = reference.edges[j]
            ax.plot(rp.grid, rp.values.real, "k--", lw=0.9, label="reference")
        ax.set_title(f"edge {j}", fontsize=9)
        ax.set_xlabel("x")
        ax.legend(fontsize=7)
    for ax in axes.flat[len(edges):]:
        ax.set_visible(False)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_samples(data, path):
    """Magnitude of the remainder samples against the node index."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    n = np.arange(data.nu.size) - (data.nu.size - 1) // 2
    ax.semilogy(n, np.abs(data.kappa0) + 1e-300, lw=1.0, label="kappa0")
    for k in sorted(data.kappa):
        ax.semilogy(n, np.abs(data.kappa[k]) + 1e-300, lw=0.8, alpha=0.7,
                    label=f"kappa{k}")
    ax.set_xlabel("node index n")
    ax.set_ylabel("|sample|")
    ax.set_title(f"remainder samples (tau = {data.tau:g})", fontsize=10)
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_sweep(report, path):
    """Per-edge response ratio against the perturbation amplitude."""
    rows = report["rows"]
    amps = [r["amplitude"] for r in rows]
    edges = sorted(rows[0]["ratios"])
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    for j in edges:
        ax.loglog(amps, [r["ratios"][j] for r in rows], "o-", lw=1.0,
                  label=f"edge {j}")
    ax.set_xlabel("perturbation amplitude")
    ax.set_ylabel("response / amplitude")
    ax.set_title("stability sweep", fontsize=10)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
