"""Ranking evaluation against classification-revision ground truth.

Revision records carry pre-segmented description tokens; the term pipeline is
rerun over them (with a low frequency floor, revision corpora are small) to
produce the truth set. Ranked (topic, term) rows are labeled relevant by
exact surface match after canonical normalization: NFKC, case folding, and
whitespace collapsed to the declared separator. Partial matches do not count.

AP@n here is the mean of Precision@k for k = 1..n. The more common retrieval
variant (precision averaged at relevant ranks, divided by the relevant count
capped at n) is available via ``standard=True``.
"""

from __future__ import annotations

import csv
import datetime
import json
import unicodedata
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import CorpusSlice, Document, TimeSlicedCorpus, Token, _parse_token
from .dtm import DtmModel, top_term_indices
from .errors import EmptyCorpus, EmptyRanking, MalformedRecord, UnknownTerm
from .scoring import OccupationMatrix, ScoreTable, rank_rows, term_score
from .termextract import (
    StopWordPolicy,
    apply_filters,
    extract_candidates,
    revision_policy,
    score_candidates,
)


@dataclass(frozen=True)
class RevisionRecord:
    """One classification-code revision: the code plus its description text."""

    code: str
    effective_date: datetime.date
    description_tokens: tuple[Token, ...]


@dataclass(frozen=True)
class RelevanceLabeling:
    """A ranked list of (topic, term, score) with per-rank relevance flags."""

    ranked: tuple[tuple[int, str, float], ...]
    relevant: frozenset[str]
    flags: tuple[bool, ...]

    def __len__(self) -> int:
        return len(self.ranked)


@dataclass(frozen=True)
class ApReport:
    subset: str
    ns: tuple[int, ...]
    values: dict[str, dict[int, float]]  # sort_key -> {n: AP@n}


@dataclass(frozen=True)
class CooccurrenceRow:
    term: str
    term_score: float
    excerpt: str | None  # None renders as "No match"


def load_revisions(path: str) -> list[RevisionRecord]:
    """Parse line-delimited JSON revision records (same token forms as corpora)."""
    records: list[RevisionRecord] = []
    issues: list[tuple[int, str]] = []
    with open(path, encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            if not raw.strip():
                continue
            try:
                record = json.loads(raw)
                if not isinstance(record, dict):
                    raise MalformedRecord(line_no, "record is not a JSON object")
                code = record.get("code")
                if not isinstance(code, str) or not code:
                    raise MalformedRecord(line_no, "missing or empty 'code'")
                date = datetime.date.fromisoformat(str(record.get("date")))
                if "tokens" in record:
                    tokens = tuple(_parse_token(e, line_no) for e in record["tokens"])
                elif "text" in record:
                    tokens = tuple(Token(s) for s in str(record["text"]).split())
                else:
                    raise MalformedRecord(line_no, "record needs either 'tokens' or 'text'")
                if not tokens:
                    raise MalformedRecord(line_no, "revision has no tokens")
                records.append(RevisionRecord(code, date, tokens))
            except MalformedRecord as exc:
                issues.extend(exc.report)
            except (ValueError, json.JSONDecodeError) as exc:
                issues.append((line_no, str(exc)))
    if issues:
        raise MalformedRecord(issues[0][0], issues[0][1], report=issues)
    if not records:
        raise EmptyCorpus(f"no revision records in {path}")
    return records


def extract_revision_terms(
    revisions: Sequence[RevisionRecord],
    policy: StopWordPolicy | None = None,
    separator: str = " ",
    assume_nouns: bool | None = None,
) -> set[str]:
    """Run the term pipeline over revision descriptions and return the surfaces.

    ``assume_nouns=None`` auto-detects: untagged revisions are treated as
    all-noun streams. The default policy keeps every term occurring at least
    once (revision corpora are far smaller than patent corpora).
    """
    if not revisions:
        raise EmptyCorpus("no revision records supplied")
    if policy is None:
        policy = revision_policy()
    if assume_nouns is None:
        assume_nouns = not any(
            tok.pos is not None for rec in revisions for tok in rec.description_tokens
        )
    documents = tuple(
        Document(f"{rec.code}#{i}", rec.effective_date, rec.description_tokens)
        for i, rec in enumerate(revisions)
    )
    corpus = TimeSlicedCorpus((CorpusSlice("revisions", documents),))
    candidates, stats = extract_candidates(corpus, assume_nouns=assume_nouns,
                                           separator=separator)
    vocab = apply_filters(score_candidates(candidates, stats), policy)
    return set(vocab.terms)


def normalize_surface(surface: str, separator: str = " ") -> str:
    """Canonical form used for relevance matching."""
    folded = unicodedata.normalize("NFKC", surface).casefold()
    return separator.join(folded.split())


def label_relevance(
    ranked_terms: Sequence[tuple[int, str, float]],
    truth: Iterable[str],
    separator: str = " ",
) -> RelevanceLabeling:
    """Flag each ranked (topic, term, score) whose surface matches the truth set.

    Matching ignores the topic index; the input order is preserved and must
    already be the declared ranking order.
    """
    truth_normalized = frozenset(normalize_surface(t, separator) for t in truth)
    flags = tuple(
        normalize_surface(term, separator) in truth_normalized
        for _, term, _ in ranked_terms
    )
    return RelevanceLabeling(tuple(ranked_terms), truth_normalized, flags)


def ap_at_n(labeling: RelevanceLabeling, n: int, standard: bool = False) -> float:
    """Average precision over the top ``n`` ranks.

    Default: mean of Precision@k for k = 1..n (maximum 1). With
    ``standard=True``: precision summed at relevant ranks within n, divided
    by min(total relevant, n). Rankings shorter than ``n`` are evaluated
    whole, with a warning.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if len(labeling) == 0:
        raise EmptyRanking()
    if len(labeling) < n:
        warnings.warn(f"ranking has only {len(labeling)} items; evaluating AP@{len(labeling)}",
                      UserWarning)
        n = len(labeling)
    hits = 0
    precision_sum = 0.0
    for k in range(1, n + 1):
        relevant = labeling.flags[k - 1]
        if relevant:
            hits += 1
        precision_k = hits / k
        if standard:
            if relevant:
                precision_sum += precision_k
        else:
            precision_sum += precision_k
    if standard:
        total_relevant = sum(labeling.flags)
        if total_relevant == 0:
            return 0.0
        return precision_sum / min(total_relevant, n)
    return precision_sum / n


def evaluate_rankings(
    table: ScoreTable,
    truth: Iterable[str],
    ns: Sequence[int],
    subset: str = "all",
    separator: str = " ",
    standard: bool = False,
) -> ApReport:
    """AP@n for both sort keys over the table (or its newcomer subset).

    An empty population (e.g. no newcomers) yields 0.0 everywhere, with a
    warning rather than an error.
    """
    if not ns:
        raise ValueError("ns must be non-empty")
    if subset not in ("all", "newcomers"):
        raise ValueError(f"subset must be 'all' or 'newcomers', got {subset!r}")
    rows = table.subset(newcomers_only=subset == "newcomers")
    truth_set = set(truth)
    values: dict[str, dict[int, float]] = {}
    for sort_key in ("increase_score", "term_score"):
        per_n: dict[int, float] = {}
        if not rows:
            warnings.warn(f"no rows in subset {subset!r}; AP values set to 0", UserWarning)
            per_n = {n: 0.0 for n in ns}
        else:
            ranked = [
                (r.topic, r.term, getattr(r, sort_key))
                for r in rank_rows(rows, sort_key)
            ]
            labeling = label_relevance(ranked, truth_set, separator)
            for n in ns:
                per_n[n] = ap_at_n(labeling, n, standard=standard)
        values[sort_key] = per_n
    return ApReport(subset, tuple(ns), values)


def _contains_run(haystack: Sequence[str], needle: Sequence[str]) -> bool:
    width = len(needle)
    if width == 0 or width > len(haystack):
        return False
    target = tuple(needle)
    return any(tuple(haystack[i:i + width]) == target for i in range(len(haystack) - width + 1))


def cooccurrence_report(
    focus: str,
    topic: int,
    model: DtmModel,
    occ: OccupationMatrix,
    revisions: Sequence[RevisionRecord],
    n_top: int = 100,
    n_rows: int = 5,
    separator: str = " ",
) -> list[CooccurrenceRow]:
    """Top term-score terms of ``topic`` with the first revision description
    containing both the focus term and the candidate (token-level run match).
    """
    if model.term_id(focus) is None:
        raise UnknownTerm(focus)
    focus_parts = tuple(focus.split(separator)) if separator else (focus,)

    tops: set[int] = set()
    for t in range(model.n_slices):
        tops.update(top_term_indices(model, t, topic, n_top))
    candidates = sorted(
        (model.terms[w] for w in tops if model.terms[w] != focus),
        key=lambda term: (-term_score(model, occ, topic, term, n_top), term),
    )[:n_rows]

    rows: list[CooccurrenceRow] = []
    for term in candidates:
        parts = tuple(term.split(separator)) if separator else (term,)
        excerpt = None
        for rec in revisions:
            surfaces = [tok.surface for tok in rec.description_tokens]
            if _contains_run(surfaces, focus_parts) and _contains_run(surfaces, parts):
                excerpt = " ".join(surfaces)
                break
        rows.append(CooccurrenceRow(term, term_score(model, occ, topic, term, n_top), excerpt))
    return rows


# report rendering ------------------------------------------------------------

def format_ap_report(reports: Sequence[ApReport]) -> str:
    """Human-readable table: one block per subset, sort keys as columns."""
    lines: list[str] = []
    for report in reports:
        lines.append(f"subset: {report.subset}")
        lines.append(f"{'':8s}  {'sorted by increase score':>26s}  {'sorted by term score':>22s}")
        for n in report.ns:
            inc = report.values["increase_score"][n]
            ts = report.values["term_score"][n]
            lines.append(f"AP@{n:<5d}  {inc:>26.4f}  {ts:>22.4f}")
        lines.append("")
    return "\n".join(lines)


def write_ap_report_csv(path: str, reports: Sequence[ApReport],
                        header_lines: Sequence[str] = ()) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        for line in header_lines:
            handle.write(f"# {line}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["subset", "sort_key", "n", "ap"])
        for report in reports:
            for sort_key in ("increase_score", "term_score"):
                for n in report.ns:
                    writer.writerow([report.subset, sort_key, n,
                                     repr(report.values[sort_key][n])])


def format_cooccurrence(focus: str, topic: int, rows: Sequence[CooccurrenceRow]) -> str:
    lines = [f"top term-score terms of topic {topic} co-occurring with {focus!r}"]
    for row in rows:
        excerpt = row.excerpt if row.excerpt is not None else "No match"
        lines.append(f"{row.term}\t{row.term_score:.6f}\t{excerpt}")
    return "\n".join(lines)


def write_cooccurrence_csv(path: str, rows: Sequence[CooccurrenceRow],
                           header_lines: Sequence[str] = ()) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        for line in header_lines:
            handle.write(f"# {line}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["term", "term_score", "excerpt"])
        for row in rows:
            writer.writerow([row.term, repr(row.term_score),
                             row.excerpt if row.excerpt is not None else "No match"])
