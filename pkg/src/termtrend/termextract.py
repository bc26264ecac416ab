"""Technical-term candidate extraction, filtering, and bag-of-words building.

Candidates are maximal runs of consecutive noun-tagged tokens. Each occurrence
of a run is counted once, as the full compound; constituents inside a counted
compound feed the left/right collocation statistics but are not also counted
as standalone occurrences. A constituent therefore only becomes a candidate in
its own right where it occurs somewhere as a maximal run itself.

Candidate importance combines frequency with the diversity of adjacent nouns:

    score(c) = frequency(c) * [ prod over constituents n of
               (left_types(n) + 1) * (right_types(n) + 1) ] ** (1 / (2 * len(c)))

where ``left_types``/``right_types`` count distinct noun types seen
immediately left/right of ``n`` inside noun runs across the whole corpus.
The score is carried for ranking and reporting only; filtering is by stop
words and frequency thresholds alone.
"""

from __future__ import annotations

import csv
import re
import unicodedata
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import TimeSlicedCorpus
from .errors import EmptyVocabulary, MissingStats, NoNouns

NOUN_TAGS = frozenset({"noun", "N", "NN", "NNS", "NNP", "名詞"})

# Patent boilerplate shipped as defaults; callers override via StopWordPolicy.
PATENT_STOP_WORDS = (
    "前記", "上記", "当該", "該当", "次", "それら", "該", "毎",
    "概要", "課題", "選択図", "図", "解決手段", "複数", "発明",
    "summary", "task", "selected diagram", "diagram", "solution", "plural", "invention",
)

_NUMBER_RE = re.compile(r"^\d+([.,/]\d+)*$")


@dataclass
class TermCandidate:
    """A candidate term: a noun run with its corpus statistics."""

    surface: str
    constituents: tuple[str, ...]
    corpus_frequency: int
    term_score_raw: float = 0.0


@dataclass
class CollocationStats:
    """Distinct noun types adjacent to each constituent inside noun runs."""

    left: dict[str, set[str]] = field(default_factory=dict)
    right: dict[str, set[str]] = field(default_factory=dict)

    def left_count(self, constituent: str) -> int:
        return len(self.left[constituent])

    def right_count(self, constituent: str) -> int:
        return len(self.right[constituent])

    def covers(self, constituent: str) -> bool:
        return constituent in self.left


@dataclass(frozen=True)
class StopWordPolicy:
    """Which candidates to drop before building the vocabulary.

    ``low_frequency_floor`` keeps candidates appearing at least that often;
    ``high_frequency_cutoff`` removes candidates appearing strictly more
    often than the cutoff (ubiquitous boilerplate).
    """

    literal_stops: frozenset[str] = frozenset(PATENT_STOP_WORDS)
    drop_symbols: bool = True
    drop_numbers: bool = True
    drop_single_latin_letters: bool = True
    high_frequency_cutoff: int = 10_000
    low_frequency_floor: int = 100

    def __post_init__(self) -> None:
        if self.low_frequency_floor < 1:
            raise ValueError("low_frequency_floor must be >= 1")
        if self.high_frequency_cutoff <= self.low_frequency_floor:
            raise ValueError("high_frequency_cutoff must exceed low_frequency_floor")


def default_policy(**overrides) -> StopWordPolicy:
    """The shipped patent defaults (floor 100, cutoff 10000) with overrides."""
    return StopWordPolicy(**overrides) if overrides else StopWordPolicy()


def revision_policy(**overrides) -> StopWordPolicy:
    """Policy suited to small revision corpora: every occurrence counts."""
    overrides.setdefault("low_frequency_floor", 1)
    return StopWordPolicy(**overrides)


@dataclass(frozen=True)
class Vocabulary:
    """Dense term-id assignment: ids 0..V-1 in declared term order."""

    terms: tuple[str, ...]
    index: dict[str, int]
    constituents: tuple[tuple[str, ...], ...]

    @classmethod
    def from_terms(cls, terms: Sequence[str], constituents: Sequence[Sequence[str]] | None = None,
                   separator: str = " ") -> "Vocabulary":
        terms = tuple(terms)
        if len(set(terms)) != len(terms):
            raise ValueError("vocabulary surfaces must be unique")
        if constituents is None:
            parts = tuple(tuple(t.split(separator)) if separator else (t,) for t in terms)
        else:
            parts = tuple(tuple(c) for c in constituents)
        return cls(terms, {t: i for i, t in enumerate(terms)}, parts)

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, surface: str) -> bool:
        return surface in self.index


@dataclass(frozen=True)
class BowDocument:
    doc_id: str
    term_ids: np.ndarray  # int64, strictly increasing
    counts: np.ndarray    # float64, every entry >= 1

    @property
    def total(self) -> float:
        return float(self.counts.sum())


@dataclass(frozen=True)
class TimeSlicedBow:
    """Per-slice sparse bag-of-words over a fixed vocabulary.

    Documents that matched no vocabulary term are excluded from the slices
    and reported in ``excluded`` as ``(slice_label, doc_id)`` pairs.
    """

    slice_labels: tuple[str, ...]
    vocab_size: int
    slices: tuple[tuple[BowDocument, ...], ...]
    excluded: tuple[tuple[str, str], ...] = ()

    @property
    def n_slices(self) -> int:
        return len(self.slice_labels)

    @property
    def n_documents(self) -> int:
        return sum(len(s) for s in self.slices)

    def documents(self):
        for t, docs in enumerate(self.slices):
            for doc in docs:
                yield t, doc


def _noun_runs(surfaces: Sequence[str], is_noun: Sequence[bool]) -> list[tuple[str, ...]]:
    runs: list[tuple[str, ...]] = []
    start = None
    for i, noun in enumerate(is_noun):
        if noun and start is None:
            start = i
        elif not noun and start is not None:
            runs.append(tuple(surfaces[start:i]))
            start = None
    if start is not None:
        runs.append(tuple(surfaces[start:]))
    return runs


def extract_candidates(
    corpus: TimeSlicedCorpus,
    noun_tags: frozenset[str] = NOUN_TAGS,
    assume_nouns: bool = False,
    separator: str = " ",
) -> tuple[list[TermCandidate], CollocationStats]:
    """Collect noun-run candidates and collocation statistics in one pass.

    With ``assume_nouns`` every token is treated as a noun (fallback for
    untagged corpora). Returns candidates sorted by descending frequency,
    lexicographic on ties.
    """
    counts: Counter[tuple[str, ...]] = Counter()
    stats = CollocationStats()
    saw_noun = False

    for doc in corpus.documents():
        surfaces = [t.surface for t in doc.tokens]
        if assume_nouns:
            nounness = [True] * len(surfaces)
        else:
            nounness = [t.pos in noun_tags for t in doc.tokens]
        for run in _noun_runs(surfaces, nounness):
            saw_noun = True
            counts[run] += 1
            for constituent in run:
                stats.left.setdefault(constituent, set())
                stats.right.setdefault(constituent, set())
            for a, b in zip(run, run[1:]):
                stats.right[a].add(b)
                stats.left[b].add(a)

    if not saw_noun:
        raise NoNouns()

    candidates = [
        TermCandidate(separator.join(run), run, freq)
        for run, freq in counts.items()
    ]
    candidates.sort(key=lambda c: (-c.corpus_frequency, c.surface))
    return candidates, stats


def score_candidates(
    candidates: Iterable[TermCandidate],
    collocation_stats: CollocationStats,
) -> list[TermCandidate]:
    """Fill ``term_score_raw`` on every candidate from the collocation stats."""
    scored: list[TermCandidate] = []
    for cand in candidates:
        product = 1.0
        for constituent in cand.constituents:
            if not collocation_stats.covers(constituent):
                raise MissingStats(constituent)
            product *= (collocation_stats.left_count(constituent) + 1) * (
                collocation_stats.right_count(constituent) + 1
            )
        score = cand.corpus_frequency * product ** (1.0 / (2.0 * len(cand.constituents)))
        scored.append(
            TermCandidate(cand.surface, cand.constituents, cand.corpus_frequency, score)
        )
    return scored


def _is_symbolic(surface: str) -> bool:
    chars = [ch for ch in surface if not ch.isspace()]
    return bool(chars) and not any(ch.isalnum() for ch in chars)


def _is_number(surface: str) -> bool:
    return bool(_NUMBER_RE.match("".join(surface.split())))


def _is_single_latin_letter(surface: str) -> bool:
    folded = unicodedata.normalize("NFKC", surface)
    return len(folded) == 1 and folded.isascii() and folded.isalpha()


def passes_policy(candidate: TermCandidate, policy: StopWordPolicy) -> bool:
    if candidate.surface in policy.literal_stops:
        return False
    if any(c in policy.literal_stops for c in candidate.constituents):
        return False
    if policy.drop_symbols and _is_symbolic(candidate.surface):
        return False
    if policy.drop_numbers and _is_number(candidate.surface):
        return False
    if policy.drop_single_latin_letters and _is_single_latin_letter(candidate.surface):
        return False
    if candidate.corpus_frequency < policy.low_frequency_floor:
        return False
    if candidate.corpus_frequency > policy.high_frequency_cutoff:
        return False
    return True


def apply_filters(candidates: Iterable[TermCandidate], policy: StopWordPolicy) -> Vocabulary:
    """Drop stop words and out-of-band frequencies; order survivors into a vocabulary.

    Idempotent: filtering an already-filtered candidate set keeps every item.
    """
    kept = [c for c in candidates if passes_policy(c, policy)]
    if not kept:
        raise EmptyVocabulary()
    kept.sort(key=lambda c: (-c.corpus_frequency, c.surface))
    return Vocabulary.from_terms(
        [c.surface for c in kept], [c.constituents for c in kept]
    )


def docs_to_bow(corpus: TimeSlicedCorpus, vocab: Vocabulary) -> TimeSlicedBow:
    """Count vocabulary occurrences per document, longest match first.

    The token stream is scanned left to right; at each position the longest
    vocabulary surface starting there is consumed, so compounds win over
    their constituents and occurrences never overlap. Documents matching no
    term are dropped and reported.
    """
    if not len(vocab):
        raise EmptyVocabulary("cannot build bag-of-words from an empty vocabulary")
    table = {parts: tid for tid, parts in enumerate(vocab.constituents)}
    max_len = max(len(parts) for parts in table)

    slices: list[tuple[BowDocument, ...]] = []
    excluded: list[tuple[str, str]] = []
    for sl in corpus.slices:
        docs: list[BowDocument] = []
        for doc in sl.documents:
            surfaces = doc.surfaces()
            found: Counter[int] = Counter()
            i = 0
            n = len(surfaces)
            while i < n:
                for length in range(min(max_len, n - i), 0, -1):
                    tid = table.get(tuple(surfaces[i:i + length]))
                    if tid is not None:
                        found[tid] += 1
                        i += length
                        break
                else:
                    i += 1
            if not found:
                excluded.append((sl.label, doc.id))
                continue
            ids = np.array(sorted(found), dtype=np.int64)
            vals = np.array([found[t] for t in sorted(found)], dtype=np.float64)
            docs.append(BowDocument(doc.id, ids, vals))
        slices.append(tuple(docs))
    return TimeSlicedBow(corpus.labels, len(vocab), tuple(slices), tuple(excluded))


# serialization ---------------------------------------------------------------

def write_vocabulary_csv(path: str, candidates: Sequence[TermCandidate],
                         header_lines: Sequence[str] = ()) -> None:
    """Emit ``surface,frequency,term_score_raw`` rows in vocabulary order."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        for line in header_lines:
            handle.write(f"# {line}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["surface", "frequency", "term_score_raw"])
        for cand in candidates:
            writer.writerow([cand.surface, cand.corpus_frequency, repr(cand.term_score_raw)])


def read_vocabulary_csv(path: str, separator: str = " ") -> tuple[Vocabulary, list[TermCandidate]]:
    candidates: list[TermCandidate] = []
    with open(path, encoding="utf-8", newline="") as handle:
        rows = [r for r in csv.reader(handle) if r and not r[0].startswith("#")]
    for surface, freq, score in rows[1:]:
        parts = tuple(surface.split(separator)) if separator else (surface,)
        candidates.append(TermCandidate(surface, parts, int(freq), float(score)))
    vocab = Vocabulary.from_terms([c.surface for c in candidates],
                                  [c.constituents for c in candidates])
    return vocab, candidates


def write_bow_csv(path: str, bow: TimeSlicedBow, header_lines: Sequence[str] = ()) -> None:
    """Sparse ``slice,doc_id,term_id,count`` rows; slice labels ride in comments."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        for line in header_lines:
            handle.write(f"# {line}\n")
        handle.write(f"# slice_labels={','.join(bow.slice_labels)}\n")
        handle.write(f"# vocab_size={bow.vocab_size}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["slice", "doc_id", "term_id", "count"])
        for t, docs in enumerate(bow.slices):
            for doc in docs:
                for tid, cnt in zip(doc.term_ids, doc.counts):
                    writer.writerow([t, doc.doc_id, int(tid), int(cnt)])


def read_bow_csv(path: str) -> TimeSlicedBow:
    labels: tuple[str, ...] = ()
    vocab_size = 0
    rows: list[list[str]] = []
    with open(path, encoding="utf-8", newline="") as handle:
        for raw in handle:
            if raw.startswith("# slice_labels="):
                labels = tuple(raw.strip().split("=", 1)[1].split(","))
                continue
            if raw.startswith("# vocab_size="):
                vocab_size = int(raw.strip().split("=", 1)[1])
                continue
            if raw.startswith("#"):
                continue
            rows.extend(csv.reader([raw]))
    slices: list[list[BowDocument]] = [[] for _ in labels]
    current: tuple[int, str] | None = None
    ids: list[int] = []
    vals: list[float] = []

    def flush() -> None:
        if current is not None:
            slices[current[0]].append(BowDocument(
                current[1], np.array(ids, dtype=np.int64), np.array(vals, dtype=np.float64)
            ))

    for t_str, doc_id, tid, cnt in rows[1:]:
        key = (int(t_str), doc_id)
        if key != current:
            flush()
            current = key
            ids, vals = [], []
        ids.append(int(tid))
        vals.append(float(cnt))
    flush()
    return TimeSlicedBow(labels, vocab_size, tuple(tuple(s) for s in slices))


def load_stop_words(path: str) -> frozenset[str]:
    """One stop word per line; blank lines and ``#`` comments ignored."""
    stops = set()
    with open(path, encoding="utf-8") as handle:
        for raw in handle:
            word = raw.strip()
            if word and not word.startswith("#"):
                stops.add(word)
    return frozenset(stops)


def warn_exclusions(bow: TimeSlicedBow) -> None:
    if bow.excluded:
        warnings.warn(
            f"{len(bow.excluded)} document(s) matched no vocabulary term and were excluded",
            UserWarning,
        )
