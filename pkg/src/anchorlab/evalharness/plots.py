"""Figure rendering for evaluation reports (PNG files next to the CSVs)."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_CONDITION_COLORS = {"random": "#b0b0b0", "ordered": "#1f77b4", "oracle": "#2ca02c"}


def _cells(report, **match):
    for cell in report["cells"]:
        if cell.get("pooled") and all(cell[key] == val for key, val in match.items()):
            yield cell


def render_figures(report, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    primary = report["config"]["primary"]
    _retrieval_vs_k(report, primary, os.path.join(out_dir, "fig_retrieval_vs_k.png"))
    _granularity_scan(report, primary, os.path.join(out_dir, "fig_granularity_scan.png"))
    _condition_bars(report, primary, os.path.join(out_dir, "fig_anchor_conditions.png"))


def _retrieval_vs_k(report, primary, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    for mode in report["config"]["modes"]:
        for cell in _cells(report, condition="ordered", mode=mode, m=primary["m"]):
            pairs = sorted(((int(k), v) for k, v in cell["pooled"]["top_k"].items()))
            ax.plot([p[0] for p in pairs], [p[1] for p in pairs], marker="o", label=mode)
    chance = sorted((int(k), v) for k, v in report["pool"]["chance_top_k"].items())
    ax.plot([c[0] for c in chance], [c[1] for c in chance], ls="--", color="gray",
            label="chance")
    ax.set_xlabel("k")
    ax.set_ylabel("Top-k retrieval accuracy")
    ax.set_ylim(0, 1.02)
    ax.set_title(f"Sentence retrieval vs k (ordered anchors, m={primary['m']})")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _granularity_scan(report, primary, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    k = str(primary["k"])
    for mode in report["config"]["modes"]:
        ms, accs = [], []
        for m in report["config"]["ms"]:
            for cell in _cells(report, condition="ordered", mode=mode, m=m):
                ms.append(m)
                accs.append(cell["pooled"]["top_k"][k])
        if ms:
            ax.plot(ms, accs, marker="s", label=mode)
    ax.set_xlabel("anchors per sentence (m)")
    ax.set_ylabel(f"Top-{k} retrieval accuracy")
    ax.set_ylim(0, 1.02)
    ax.set_title("Target granularity scan (ordered anchors)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _condition_bars(report, primary, path):
    fig, ax = plt.subplots(figsize=(5, 4))
    k = str(primary["k"])
    labels, values, colors = [], [], []
    for condition in report["config"]["conditions"]:
        for cell in _cells(report, condition=condition, mode=primary["mode"], m=primary["m"]):
            labels.append(condition)
            values.append(cell["pooled"]["top_k"][k])
            colors.append(_CONDITION_COLORS.get(condition, "#1f77b4"))
    ax.bar(labels, values, color=colors)
    ax.axhline(report["pool"]["chance_top_k"][k], ls="--", color="gray", lw=1,
               label="chance")
    ax.set_ylabel(f"Top-{k} retrieval accuracy")
    ax.set_ylim(0, 1.02)
    ax.set_title(f"Anchor conditions ({primary['mode']}, m={primary['m']})")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
