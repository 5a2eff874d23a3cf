"""Figure rendering for the report paths.

Every CSV/JSON report the CLI writes gets a PNG sibling: training curves
next to the training log, per-fold AUC bars next to eval reports, and an
AUC-vs-k line chart next to the sampling sweep table. Rendering is
headless (Agg) and metadata is pinned so identical runs produce identical
bytes.
"""

from __future__ import annotations

from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_PNG_META = {"Software": "anchorglad"}


def _save(fig, path) -> None:
    fig.savefig(path, dpi=120, metadata=_PNG_META)
    plt.close(fig)


def save_training_curves(log, path) -> None:
    """Two panels: the five space distances and the two losses per epoch."""
    epochs = [r.epoch for r in log]
    fig, (ax_d, ax_l) = plt.subplots(1, 2, figsize=(10, 4))
    for name in ("dist1", "dist2", "dist3", "dist4", "dist5"):
        ax_d.plot(epochs, [getattr(r, name) for r in log], label=name)
    ax_d.set_xlabel("epoch")
    ax_d.set_ylabel("mean space distance")
    ax_d.legend(fontsize=8)
    ax_l.plot(epochs, [r.loss_p for r in log], label="loss_p")
    ax_l.plot(epochs, [r.loss_n for r in log], label="loss_n")
    ax_l.set_xlabel("epoch")
    ax_l.set_ylabel("loss")
    ax_l.legend(fontsize=8)
    fig.suptitle("training dynamics")
    fig.tight_layout()
    _save(fig, path)


def save_fold_auc_bars(reports: Sequence, path) -> None:
    """Grouped per-fold AUC bars, one group per orientation, mean lines."""
    fig, ax = plt.subplots(figsize=(8, 4))
    width = 0.8 / max(len(reports), 1)
    for j, rep in enumerate(reports):
        xs = [i + j * width for i in range(rep.k)]
        ax.bar(xs, rep.fold_aucs, width=width,
               label=f"A={rep.orientation} (mean {rep.mean_auc:.3f})")
        ax.axhline(rep.mean_auc, color=f"C{j}", linestyle=":", linewidth=1)
    ax.set_xticks(range(reports[0].k))
    ax.set_xticklabels([f"fold {i}" for i in range(reports[0].k)])
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("AUC")
    ax.set_title(f"{reports[0].dataset}: per-fold AUC")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def save_sweep_curve(rows: Sequence[dict], path) -> None:
    """AUC vs sampling ratio factor k, one line per orientation, std bars."""
    fig, ax = plt.subplots(figsize=(7, 4))
    orientations = sorted({row["orientation"] for row in rows})
    for orientation in orientations:
        sub = sorted((r for r in rows if r["orientation"] == orientation),
                     key=lambda r: r["anchor_k"])
        ks = [r["anchor_k"] for r in sub]
        means = [r["mean_auc"] for r in sub]
        stds = [r["std_auc"] for r in sub]
        ax.errorbar(ks, means, yerr=stds, marker="o", capsize=3,
                    label=f"A={orientation}")
    ax.set_xlabel("sampling ratio factor k")
    ax.set_ylabel("mean AUC")
    ax.set_title("anchor sampling sweep")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)
