"""Figure rendering for experiment batches (headless matplotlib)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_gap_figure(rows, path: str) -> None:
    """Bar chart of mean relaxation gap per formulation, log scale."""
    forms = sorted({r["formulation"] for r in rows})
    means = []
    for form in forms:
        gaps = [r["gap"] for r in rows if r["formulation"] == form and np.isfinite(r["gap"])]
        means.append(np.mean(gaps) if gaps else np.nan)
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    floor = 1e-12
    ax.bar(forms, [max(m, floor) for m in means], color="#4878a8")
    ax.set_yscale("log")
    ax.set_ylabel("mean relative gap")
    ax.set_xlabel("formulation")
    for x, m in zip(forms, means):
        ax.annotate(f"{m:.2e}", (x, max(m, floor)), ha="center", va="bottom", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_bound_figure(rows, path: str) -> None:
    """Per-instance lower bounds by formulation, one line each."""
    forms = sorted({r["formulation"] for r in rows})
    seeds = sorted({r["seed"] for r in rows})
    fig, ax = plt.subplots(figsize=(5.5, 3.2))
    for form in forms:
        by_seed = {r["seed"]: r["lb"] for r in rows if r["formulation"] == form}
        ax.plot(seeds, [by_seed.get(s, np.nan) for s in seeds], marker="o",
                markersize=3, label=form)
    ax.set_xlabel("instance seed")
    ax.set_ylabel("relaxation bound")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
