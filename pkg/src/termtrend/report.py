"""Render trend figures from a fitted model.

Two figure families, written as PNG next to the delimited outputs: per-topic
occupation rates over slices, and within-topic term trajectories (per-slice
top-n masked scores) for the strongest terms of selected topics.
"""

from __future__ import annotations

from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .dtm import DtmModel, top_term_indices
from .scoring import OccupationMatrix, ScoreTable, ave_topic, rank_rows


def default_report_topics(occ: OccupationMatrix, limit: int = 3) -> list[int]:
    """Topics with the highest average occupation, most central first."""
    order = sorted(range(occ.n_topics), key=lambda j: (-ave_topic(occ, j), j))
    return order[:limit]


def render_occupation_figure(occ: OccupationMatrix, path: str,
                             topics: Sequence[int] | None = None) -> None:
    chosen = list(topics) if topics is not None else list(range(occ.n_topics))
    fig, ax = plt.subplots(figsize=(8, 4.5))
    x = range(occ.n_slices)
    for j in chosen:
        ax.plot(x, occ.values[:, j], marker="o", markersize=3, label=f"topic {j}")
    ax.set_xticks(list(x))
    ax.set_xticklabels(occ.slice_labels, rotation=45, ha="right")
    ax.set_xlabel("time slice")
    ax.set_ylabel("occupation rate")
    ax.set_title("Topic occupation rate by slice")
    ax.legend(fontsize=8, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_term_trajectories_figure(model: DtmModel, table: ScoreTable,
                                    topic: int, path: str, n_series: int = 8) -> None:
    """Trajectories of the topic's strongest terms by term score."""
    rows = [r for r in table.rows if r.topic == topic]
    chosen = rank_rows(rows, "term_score")[:n_series]
    tops = [set(top_term_indices(model, t, topic, table.n_top))
            for t in range(model.n_slices)]
    fig, ax = plt.subplots(figsize=(8, 4.5))
    x = range(model.n_slices)
    for row in chosen:
        term_id = model.term_id(row.term)
        ys = [float(model.beta[topic, t, term_id]) if term_id in tops[t] else 0.0
              for t in range(model.n_slices)]
        ax.plot(x, ys, marker="o", markersize=3, label=row.term)
    ax.set_xticks(list(x))
    ax.set_xticklabels(model.slice_labels, rotation=45, ha="right")
    ax.set_xlabel("time slice")
    ax.set_ylabel("within-topic score")
    ax.set_title(f"Term trajectories, topic {topic}")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
