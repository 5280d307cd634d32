"""Figure rendering for the analysis and report paths.

Each function writes one PNG next to the delimited output it illustrates.
Figures are presentation only; the CSV files remain the data of record.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .slaved import BootstrapBands, DecouplingTrajectory, PriceSeries, SuccessTable


def trajectory_figure(
    series: PriceSeries, traj: DecouplingTrajectory, path: str | Path
) -> None:
    """Price on top, decoupled buy/sell fractions below."""
    fig, (ax_price, ax_frac) = plt.subplots(
        2, 1, figsize=(8, 6), sharex=True, height_ratios=[1, 1]
    )
    ax_price.plot(range(len(series.prices)), series.prices, color="black", lw=1.2)
    ax_price.set_ylabel("price")
    ax_price.grid(alpha=0.3)

    ax_frac.plot(traj.periods, traj.d_plus, color="tab:blue", lw=1.4, label="d+ (buy)")
    ax_frac.plot(
        traj.periods,
        traj.d_minus,
        color="tab:red",
        lw=1.4,
        ls="--",
        label="d- (sell)",
    )
    ax_frac.set_xlabel("period")
    ax_frac.set_ylabel("decoupled fraction")
    ax_frac.set_ylim(0, 1)
    ax_frac.grid(alpha=0.3)
    ax_frac.legend(loc="upper left", frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def bands_figure(bands: BootstrapBands, path: str | Path, realization: int = 0) -> None:
    """One realization of d+ and d- with its replica 10%/90% band."""
    o = realization
    fig, (ax_p, ax_m) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    for ax, real, lo, hi, label, color in (
        (ax_p, bands.d_plus, bands.d_plus_low10, bands.d_plus_high90, "d+", "tab:blue"),
        (ax_m, bands.d_minus, bands.d_minus_low10, bands.d_minus_high90, "d-", "tab:red"),
    ):
        ax.plot(bands.periods, real[o], color=color, lw=1.5, label=f"{label} realization")
        ax.plot(bands.periods, lo[o], color=color, lw=1.0, ls="--", label="10% / 90% band")
        ax.plot(bands.periods, hi[o], color=color, lw=1.0, ls="--")
        ax.fill_between(bands.periods, lo[o], hi[o], color=color, alpha=0.12)
        ax.set_ylabel(f"{label} fraction")
        ax.set_ylim(0, 1)
        ax.grid(alpha=0.3)
        ax.legend(loc="upper left", frameon=False)
    ax_m.set_xlabel("period")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def success_figure(table: SuccessTable, path: str | Path) -> None:
    """Success rate and event count against the prediction threshold."""
    thresholds = [r.threshold for r in table.rows]
    rates = [r.success_rate if r.success_rate is not None else float("nan") for r in table.rows]
    events = [r.n_events for r in table.rows]

    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(thresholds, rates, "o-", color="tab:blue", label="success rate")
    ax.axhline(0.5, color="gray", lw=0.8, ls=":")
    ax.set_xlabel("threshold")
    ax.set_ylabel("success rate")
    ax.set_ylim(-0.02, 1.05)
    ax.grid(alpha=0.3)
    ax2 = ax.twinx()
    ax2.bar(thresholds, events, width=0.012, color="tab:gray", alpha=0.35, label="events")
    ax2.set_ylabel("number of events")
    lines, labels = ax.get_legend_handles_labels()
    bars, bar_labels = ax2.get_legend_handles_labels()
    ax.legend(lines + bars, labels + bar_labels, loc="lower right", frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
