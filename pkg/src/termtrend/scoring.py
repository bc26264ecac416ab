"""Trend measures over a fitted model.

All measures key off the per-slice top-``n`` term sets of each topic: a
term's per-slice score is its probability within the topic when it is among
that slice's top ``n`` terms and 0 otherwise. From these come the
time-averaged term score (weighted by how much of the corpus the topic
occupies), the first-to-last increase, the population-normalized increase
score, and the newcomer set. Functions are pure over the immutable model.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import EmptySliceWarning
from .dtm import DtmModel, top_term_indices, topic_terms
from .errors import IndexOutOfRange, SingleSlice, UnknownTerm
from .termextract import TimeSlicedBow


class DegeneratePopulationWarning(UserWarning):
    """Every increase amount in the population is identical."""


@dataclass(frozen=True)
class OccupationMatrix:
    """Per-slice topic shares; every row sums to 1."""

    values: np.ndarray  # (T, K)
    slice_labels: tuple[str, ...]

    @property
    def n_slices(self) -> int:
        return self.values.shape[0]

    @property
    def n_topics(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class ScoreRow:
    topic: int
    term: str
    term_score: float
    increase_amount: float
    increase_score: float
    newcomer: bool


@dataclass(frozen=True)
class ScoreTable:
    rows: tuple[ScoreRow, ...]
    n_top: int

    def subset(self, newcomers_only: bool) -> tuple[ScoreRow, ...]:
        if newcomers_only:
            return tuple(r for r in self.rows if r.newcomer)
        return self.rows


def occupation_rate(model: DtmModel, bow: TimeSlicedBow | None = None) -> OccupationMatrix:
    """Mean document-topic proportions per slice.

    Rows sum to 1 because each document's proportions do. Slices without
    documents get a uniform row and a warning.
    """
    if bow is not None and bow.n_documents != model.theta.shape[0]:
        raise ValueError("bag-of-words does not match the model's document count")
    n_slices, n_topics = model.n_slices, model.n_topics
    values = np.zeros((n_slices, n_topics))
    for t in range(n_slices):
        block = model.theta[model.doc_slices == t]
        if block.shape[0] == 0:
            warnings.warn(f"slice {model.slice_labels[t]} has no documents; "
                          "using a uniform occupation row", EmptySliceWarning)
            values[t] = 1.0 / n_topics
        else:
            values[t] = block.mean(axis=0)
    return OccupationMatrix(values, tuple(model.slice_labels))


def dtm_topic_score(model: DtmModel, t: int, j: int, n_top: int = 100) -> dict[str, float]:
    """Probabilities of topic ``j``'s top-``n_top`` terms at slice ``t``.

    Terms outside the top set are absent; consumers treat them as 0.
    """
    return dict(topic_terms(model, t, j, n_top))


def ave_topic(occ: OccupationMatrix, j: int) -> float:
    """Mean occupation rate of topic ``j`` over all slices."""
    if not 0 <= j < occ.n_topics:
        raise IndexOutOfRange(f"topic index {j} outside 0..{occ.n_topics - 1}")
    return float(occ.values[:, j].mean())


def _masked_trajectory(model: DtmModel, j: int, term_id: int, n_top: int,
                       tops: Sequence[set[int]] | None = None) -> list[float]:
    scores = []
    for t in range(model.n_slices):
        members = tops[t] if tops is not None else set(top_term_indices(model, t, j, n_top))
        scores.append(float(model.beta[j, t, term_id]) if term_id in members else 0.0)
    return scores


def term_score(model: DtmModel, occ: OccupationMatrix, j: int, w: str,
               n_top: int = 100) -> float:
    """Time-averaged top-``n``-masked probability of ``w`` in topic ``j``,
    weighted by the topic's average occupation."""
    term_id = model.term_id(w)
    if term_id is None:
        raise UnknownTerm(w)
    ave = ave_topic(occ, j)
    total = 0.0
    for s in _masked_trajectory(model, j, term_id, n_top):
        total += s * ave
    return total / model.n_slices


def increase_amount(model: DtmModel, j: int, w: str, n_top: int = 100) -> float:
    """Last-slice minus first-slice masked score of ``w`` in topic ``j``."""
    if model.n_slices < 2:
        raise SingleSlice()
    term_id = model.term_id(w)
    if term_id is None:
        raise UnknownTerm(w)
    trajectory = _masked_trajectory(model, j, term_id, n_top)
    return trajectory[-1] - trajectory[0]


def newcomer_terms(model: DtmModel, j: int, n_top: int = 100) -> set[str]:
    """Terms inside topic ``j``'s final top-``n`` but outside it at some
    earlier slice."""
    if model.n_slices < 2:
        raise SingleSlice()
    tops = [set(top_term_indices(model, t, j, n_top)) for t in range(model.n_slices)]
    final = tops[-1]
    earlier = tops[:-1]
    return {model.terms[w] for w in final if any(w not in s for s in earlier)}


def min_max_normalize(values: Sequence[float]) -> list[float]:
    """Rescale to [0, 1]; a flat population normalizes to all zeros (warned)."""
    lo = min(values)
    hi = max(values)
    if hi == lo:
        warnings.warn("all increase amounts are equal; normalized increases set to 0",
                      DegeneratePopulationWarning)
        return [0.0 for _ in values]
    span = hi - lo
    return [(v - lo) / span for v in values]


def build_score_table(model: DtmModel, occ: OccupationMatrix, n_top: int = 100) -> ScoreTable:
    """Score every (topic, term) pair whose term enters the topic's top-``n``
    at one slice or more.

    A term appearing in several topics contributes one row per topic. The
    increase normalization is min-max over this whole population. With a
    single slice the increase columns are zero-filled (warned) since no
    growth is observable.
    """
    n_slices = model.n_slices
    single = n_slices < 2
    if single:
        warnings.warn("single-slice model: increase columns zero-filled", UserWarning)

    entries: list[tuple[int, str, float, float, bool]] = []
    for j in range(model.n_topics):
        tops = [set(top_term_indices(model, t, j, n_top)) for t in range(n_slices)]
        population = sorted({w for s in tops for w in s}, key=lambda w: model.terms[w])
        ave = ave_topic(occ, j)
        newcomers = set() if single else {
            w for w in tops[-1] if any(w not in s for s in tops[:-1])
        }
        for w in population:
            trajectory = _masked_trajectory(model, j, w, n_top, tops)
            total = 0.0
            for s in trajectory:
                total += s * ave
            t_score = total / n_slices
            inc = 0.0 if single else trajectory[-1] - trajectory[0]
            entries.append((j, model.terms[w], t_score, inc, w in newcomers))

    if not entries:
        return ScoreTable((), n_top)
    if single:
        normalized = [0.0] * len(entries)
    else:
        normalized = min_max_normalize([e[3] for e in entries])
    rows = []
    for (j, term, t_score, inc, newcomer), norm in zip(entries, normalized):
        ave = ave_topic(occ, j)
        rows.append(ScoreRow(j, term, t_score, inc, norm * ave, newcomer))
    rows.sort(key=lambda r: (r.topic, r.term))
    return ScoreTable(tuple(rows), n_top)


def rank_rows(rows: Sequence[ScoreRow], sort_key: str) -> list[ScoreRow]:
    """Deterministic ranking: descending score, then term, then topic."""
    if sort_key not in ("term_score", "increase_score"):
        raise ValueError(f"unknown sort key {sort_key!r}")
    return sorted(rows, key=lambda r: (-getattr(r, sort_key), r.term, r.topic))


# delimited output ------------------------------------------------------------

def write_score_table_csv(path: str, table: ScoreTable,
                          header_lines: Sequence[str] = ()) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        for line in header_lines:
            handle.write(f"# {line}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["topic", "term", "term_score", "increase_amount",
                         "increase_score", "newcomer"])
        for r in table.rows:
            writer.writerow([r.topic, r.term, repr(r.term_score),
                             repr(r.increase_amount), repr(r.increase_score),
                             int(r.newcomer)])


def write_occupation_csv(path: str, occ: OccupationMatrix,
                         header_lines: Sequence[str] = ()) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        for line in header_lines:
            handle.write(f"# {line}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["slice", "topic", "occupation_rate"])
        for t, label in enumerate(occ.slice_labels):
            for j in range(occ.n_topics):
                writer.writerow([label, j, repr(float(occ.values[t, j]))])


def write_trajectories_csv(path: str, model: DtmModel, table: ScoreTable,
                           header_lines: Sequence[str] = ()) -> None:
    """Per-slice masked scores for every table row, for external plotting."""
    tops: dict[tuple[int, int], set[int]] = {}
    for j in sorted({r.topic for r in table.rows}):
        for t in range(model.n_slices):
            tops[(j, t)] = set(top_term_indices(model, t, j, table.n_top))
    with open(path, "w", encoding="utf-8", newline="") as handle:
        for line in header_lines:
            handle.write(f"# {line}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["slice", "topic", "term", "score"])
        for r in table.rows:
            term_id = model.term_id(r.term)
            for t, label in enumerate(model.slice_labels):
                in_top = term_id in tops[(r.topic, t)]
                score = float(model.beta[r.topic, t, term_id]) if in_top else 0.0
                writer.writerow([label, r.topic, r.term, repr(score)])
