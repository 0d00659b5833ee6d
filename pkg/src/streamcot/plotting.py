"""Matplotlib figure rendering for sweep curves and completeness curves."""

from __future__ import annotations

from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .qc import QcCurve
from .simulate import SweepRow
from .types import Sample


def plot_sweep(rows: Sequence[SweepRow], path: str) -> None:
    """Accuracy vs latency, one series per method, annotated with the parameter."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    methods = sorted({r.method for r in rows})
    for method in methods:
        pts = sorted(
            (r for r in rows if r.method == method), key=lambda r: r.mean_latency_tokens
        )
        xs = [r.mean_latency_tokens for r in pts]
        ys = [r.accuracy for r in pts]
        ax.plot(xs, ys, marker="o", label=method)
        for r in pts:
            ax.annotate(
                f"{r.param:g}",
                (r.mean_latency_tokens, r.accuracy),
                textcoords="offset points",
                xytext=(4, 4),
                fontsize=8,
            )
    ax.set_xlabel("mean latency (tokens)")
    ax.set_ylabel("accuracy")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_qc_curve(curve: QcCurve, path: str, sample: Optional[Sample] = None) -> None:
    """Completeness values over word indices with the threshold and onset marked."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    xs = list(range(len(curve.zeta)))
    ax.plot(xs, curve.zeta, marker="o")
    ax.axhline(curve.theta, color="gray", linestyle="--", linewidth=1)
    ax.axvline(curve.inflection, color="red", linestyle=":", linewidth=1)
    if sample is not None:
        labels = [""] + [w.text for w in sample.question_words]
        ax.set_xticks(xs)
        ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=7)
    ax.set_xlabel("question words consumed")
    ax.set_ylabel("completeness")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
