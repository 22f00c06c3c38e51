"""Report figures, rendered headlessly next to the CSVs they mirror."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def debt_timeseries_figure(debt_curves, policies, path):
    """Mean total positive delivery debt per period, one line per policy.

    debt_curves: policy -> list of per-seed arrays (equal lengths).
    """
    fig, ax = plt.subplots(figsize=(7, 4.2))
    for policy in policies:
        curves = np.stack(debt_curves[policy])
        ax.plot(curves.mean(axis=0), label=policy, linewidth=1.2)
    ax.set_xlabel("period")
    ax.set_ylabel("total positive delivery debt (packets)")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def nonrt_throughput_figure(summary_rows, policies, path):
    """Across-seed mean non-real-time throughput per policy, SD whiskers."""
    means, sds = [], []
    for policy in policies:
        vals = np.array([r[3] for r in summary_rows if r[0] == policy])
        means.append(vals.mean())
        sds.append(vals.std(ddof=1) if len(vals) > 1 else 0.0)
    fig, ax = plt.subplots(figsize=(7, 4.2))
    x = np.arange(len(policies))
    ax.bar(x, means, yerr=sds, capsize=4, color="#4878a8")
    ax.set_xticks(x)
    ax.set_xticklabels(policies, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel("non-real-time packets per period")
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
