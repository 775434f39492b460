"""Figure rendering for experiment reports.

Each renderer consumes the same row dicts the CSV writers emit and writes
PNG files next to the delimited output.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

KIND_COLORS = {"minority": "tab:red", "majority": "tab:blue", "dollar": "tab:green"}


def _kinds_in(rows):
    seen = []
    for row in rows:
        if row["kind"] not in seen:
            seen.append(row["kind"])
    return seen


def plot_gain_sweep(rows, out_path) -> str:
    """Agent vs strategy mean gain over m, one panel per game kind."""
    kinds = _kinds_in(rows)
    fig, axes = plt.subplots(1, len(kinds), figsize=(4.2 * len(kinds), 3.4),
                             squeeze=False, sharex=True)
    for ax, kind in zip(axes[0], kinds):
        sub = sorted((r for r in rows if r["kind"] == kind), key=lambda r: r["m"])
        ms = [r["m"] for r in sub]
        ax.errorbar(ms, [r["agent_gain"] for r in sub],
                    yerr=[r["agent_se"] for r in sub],
                    marker="s", color="black", label="agents", capsize=2)
        ax.errorbar(ms, [r["strategy_gain"] for r in sub],
                    yerr=[r["strategy_se"] for r in sub],
                    marker="o", color=KIND_COLORS.get(kind, "tab:gray"),
                    label="strategies", capsize=2)
        ax.axhline(0.0, color="gray", lw=0.6)
        ax.set_title(f"{kind} (tau={sub[0]['tau']})")
        ax.set_xlabel("memory m")
        ax.legend(fontsize=8)
    axes[0][0].set_ylabel("mean gain per step")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return str(out_path)


def plot_gain_table(rows, out_path) -> str:
    """Numeric vs analytic bars for the single-disorder gain table."""
    kinds = _kinds_in(rows)
    width = 0.2
    fig, ax = plt.subplots(figsize=(6.5, 3.4))
    x = np.arange(len(kinds))
    for off, source, alpha in ((-0.5, "numeric", 1.0), (0.5, "analytic", 0.45)):
        by_kind = {r["kind"]: r for r in rows if r["source"] == source}
        ax.bar(x + off * width - width, [by_kind[k]["agent_gain"] for k in kinds],
               width, color="black", alpha=alpha,
               label=f"agents ({source})")
        ax.bar(x + off * width + width, [by_kind[k]["strategy_gain"] for k in kinds],
               width, color="tab:blue", alpha=alpha,
               label=f"strategies ({source})")
    ax.axhline(0.0, color="gray", lw=0.6)
    ax.set_xticks(x, kinds)
    ax.set_ylabel("mean gain per step")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return str(out_path)


def plot_cagents(rows, out_path) -> str:
    """Counteradaptive-minus-standard gain difference over m per kind."""
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    for kind in _kinds_in(rows):
        sub = sorted((r for r in rows if r["kind"] == kind), key=lambda r: r["m"])
        ax.errorbar([r["m"] for r in sub], [r["c_minus_s"] for r in sub],
                    yerr=[r["c_minus_s_se"] for r in sub],
                    marker="o", capsize=2, label=kind,
                    color=KIND_COLORS.get(kind, None))
    ax.axhline(0.0, color="gray", lw=0.6)
    ax.set_xlabel("memory m")
    ax.set_ylabel("counteradaptive - standard gain per step")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return str(out_path)


def plot_persistence(rows, out_stem) -> list[str]:
    """Heatmap per kind plus the scale == m diagonal comparison."""
    paths = []
    kinds = _kinds_in(rows)
    m_values = sorted({r["m"] for r in rows})
    scales = sorted({r["scale"] for r in rows})
    for kind in kinds:
        grid = np.full((len(m_values), len(scales)), np.nan)
        for r in rows:
            if r["kind"] == kind:
                grid[m_values.index(r["m"]), scales.index(r["scale"])] = r["persistence"]
        fig, ax = plt.subplots(figsize=(4.6, 4.0))
        im = ax.imshow(grid, origin="lower", cmap="gray", vmin=0.0, vmax=1.0,
                       extent=(scales[0] - 0.5, scales[-1] + 0.5,
                               m_values[0] - 0.5, m_values[-1] + 0.5))
        ax.set_xlabel("scale")
        ax.set_ylabel("memory m")
        ax.set_title(f"{kind} persistence")
        fig.colorbar(im, ax=ax, shrink=0.85)
        fig.tight_layout()
        path = f"{out_stem}_{kind}.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        paths.append(path)

    fig, ax = plt.subplots(figsize=(5.6, 3.6))
    for kind in kinds:
        diag = sorted((r for r in rows if r["kind"] == kind and r["m"] == r["scale"]),
                      key=lambda r: r["m"])
        if diag:
            ax.errorbar([r["m"] for r in diag], [r["persistence"] for r in diag],
                        yerr=[r["stderr"] for r in diag], marker="o", capsize=2,
                        label=kind, color=KIND_COLORS.get(kind, None))
    ax.axhline(0.5, color="gray", lw=0.8, ls="--")
    ax.set_xlabel("memory m = scale")
    ax.set_ylabel("persistence")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = f"{out_stem}_diagonal.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    paths.append(path)
    return paths
