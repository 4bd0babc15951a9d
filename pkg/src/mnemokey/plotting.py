"""Figures for evaluation reports, rendered to image files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "figure.figsize": (6.0, 3.6),
    "figure.dpi": 120,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "axes.axisbelow": True,
    "grid.alpha": 0.3,
    "axes.labelsize": 10,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "legend.fontsize": 8,
    "legend.frameon": False,
    "savefig.bbox": "tight",
    # Hangul is never drawn; record labels are the English words
    "font.family": "DejaVu Sans",
}
COLORS = {"present": "#4c72b0", "modified": "#dd8452", "omitted": "#c44e52", "phonetic": "#55a868",
          "context": "#8172b3"}


def keyword_status_chart(report, path):
    """Stacked bars of present / modified / omitted keyword shares per item, plus the pooled row."""
    labels = [it["l2_word"] for it in report.items] + ["ALL"]
    present, modified, omitted = [], [], []
    for it in report.items:
        n = len(it["statuses"])
        omitted.append(it["statuses"].count("omitted") / n)
        modified.append(it["statuses"].count("modified") / n)
        present.append(1 - omitted[-1] - modified[-1])
    omitted.append(report.omission_rate)
    modified.append(report.modification_rate)
    present.append(1 - report.omission_rate - report.modification_rate)
    with plt.style.context(STYLE):
        fig, ax = plt.subplots()
        x = range(len(labels))
        ax.bar(x, present, color=COLORS["present"], label="present")
        ax.bar(x, modified, bottom=present, color=COLORS["modified"], label="modified")
        ax.bar(x, omitted, bottom=[p + m for p, m in zip(present, modified)],
               color=COLORS["omitted"], label="omitted")
        ax.set_xticks(list(x))
        ax.set_xticklabels(labels, rotation=45, ha="right")
        ax.set_ylim(0, 1)
        ax.set_ylabel("share of proposed keywords")
        ax.legend(ncol=3, loc="lower center", bbox_to_anchor=(0.5, 1.0))
        fig.savefig(path)
        plt.close(fig)
    return Path(path)


def score_chart(report, path):
    """Per-item phonetic similarity and context completeness."""
    labels = [it["l2_word"] for it in report.items]
    phon = [it["phonetic"] for it in report.items]
    ctx = [it["context"] if it["context"] is not None else 0.0 for it in report.items]
    with plt.style.context(STYLE):
        fig, ax = plt.subplots()
        x = list(range(len(labels)))
        w = 0.4
        ax.bar([i - w / 2 for i in x], phon, width=w, color=COLORS["phonetic"], label="phonetic")
        ax.bar([i + w / 2 for i in x], ctx, width=w, color=COLORS["context"], label="context")
        ax.axhline(report.phonetic, color=COLORS["phonetic"], lw=0.8, ls="--")
        if report.context is not None:
            ax.axhline(report.context, color=COLORS["context"], lw=0.8, ls="--")
        ax.set_xticks(x)
        ax.set_xticklabels(labels, rotation=45, ha="right")
        ax.set_ylim(min(0.0, min(phon + ctx)), 1.0)
        ax.set_ylabel("cosine")
        ax.legend(ncol=2, loc="lower center", bbox_to_anchor=(0.5, 1.0))
        fig.savefig(path)
        plt.close(fig)
    return Path(path)


def perplexity_chart(report, path):
    values = [it["perplexity"] for it in report.items if it["perplexity"] is not None]
    with plt.style.context(STYLE):
        fig, ax = plt.subplots()
        if values:
            ax.hist(values, bins=min(20, max(1, len(values))), color=COLORS["present"])
            ax.axvline(report.perplexity, color="k", lw=0.8, ls="--")
        ax.set_xlabel("cue perplexity")
        ax.set_ylabel("items")
        fig.savefig(path)
        plt.close(fig)
    return Path(path)


def render_report(report, out_dir) -> list[Path]:
    """Write every report figure as PNG into ``out_dir``; returns the file paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return [
        keyword_status_chart(report, out / "keyword_status.png"),
        score_chart(report, out / "scores.png"),
        perplexity_chart(report, out / "perplexity.png"),
    ]
