"""Figure rendering for the CLI report paths.

Figures are written next to the delimited output as PNG files; the CSV
stays the primary, machine-readable artifact.
"""

from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

if TYPE_CHECKING:
    from .cli import QuantileReport
    from .simulation import CellResult

_LINESTYLES = {0: "-", 1: "--"}


def save_grid_figure(cells: Sequence["CellResult"], path: Path) -> None:
    """Accuracy against nonlinearity, one panel per (kappa, q), lines per n.

    Heteroskedastic cells (rho=1) are drawn dashed next to their rho=0
    counterparts.
    """
    kappas = sorted({c.config.kappa for c in cells})
    qs = sorted({c.config.q for c in cells})
    ns = sorted({c.config.n for c in cells})
    rhos = sorted({c.config.rho for c in cells})
    fig, axes = plt.subplots(
        len(kappas), len(qs), squeeze=False, sharex=True, sharey=True,
        figsize=(3.2 * len(qs) + 1.0, 2.6 * len(kappas) + 0.8),
    )
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for i, kappa in enumerate(kappas):
        for j, q in enumerate(qs):
            ax = axes[i][j]
            for ni, n in enumerate(ns):
                for rho in rhos:
                    pts = sorted(
                        (c.config.tau, c.accuracy)
                        for c in cells
                        if c.config.kappa == kappa and c.config.q == q
                        and c.config.n == n and c.config.rho == rho
                    )
                    if not pts:
                        continue
                    taus, accs = zip(*pts)
                    label = f"n={n}, rho={rho}" if (i, j) == (0, 0) else None
                    ax.plot(
                        taus, accs, marker="o", markersize=3,
                        color=colors[ni % len(colors)],
                        linestyle=_LINESTYLES.get(rho, ":"), label=label,
                    )
            ax.axhline(0.5, color="gray", linewidth=0.7, alpha=0.5)
            ax.set_ylim(0.0, 1.05)
            ax.set_title(f"{kappa}, q={q:g}", fontsize=9)
            if i == len(kappas) - 1:
                ax.set_xlabel("tau")
            if j == 0:
                ax.set_ylabel("accuracy")
    handles, labels = axes[0][0].get_legend_handles_labels()
    if handles:
        fig.legend(handles, labels, loc="lower center", ncol=min(len(handles), 4), fontsize=8)
        fig.subplots_adjust(bottom=0.22)
    fig.suptitle("Correct-direction classification rate", fontsize=10)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def save_quantile_figure(reports: Sequence["QuantileReport"], path: Path) -> None:
    """Stacked shares of per-bin decisions for each quantile count."""
    done = [r for r in reports if r.decisions]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.45 * len(done) + 2.0), 3.2))
    if done:
        nqs = [r.n_q for r in done]
        causal = [r.share_causal for r in done]
        anti = [r.share_anticausal for r in done]
        inconclusive = [r.share_inconclusive for r in done]
        ax.bar(nqs, causal, label="x->y", color="tab:blue")
        ax.bar(nqs, anti, bottom=causal, label="y->x", color="tab:orange")
        ax.bar(
            nqs, inconclusive,
            bottom=[c + a for c, a in zip(causal, anti)],
            label="inconclusive", color="tab:gray",
        )
        ax.legend(fontsize=8)
    ax.set_xlabel("number of quantile bins")
    ax.set_ylabel("share of bins")
    ax.set_ylim(0.0, 1.0)
    ax.set_title("Per-bin direction decisions", fontsize=10)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
