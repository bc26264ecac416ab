"""Corpus ingestion and time slicing.

Input is line-delimited JSON, one document per line, in either of two forms::

    {"id": "JP-1", "date": "2006-03-14", "tokens": [{"s": "light", "pos": "N"}, ...]}
    {"id": "JP-2", "date": "2007-01-02", "text": "pre segmented words split on whitespace"}

Tokens are expected to be pre-segmented upstream (e.g. by a morphological
analyzer for Japanese); this module never splits raw sentences beyond
whitespace. Documents are partitioned into consecutive calendar slices
(year, quarter, or month); gaps between the first and last period become
empty slices so slice indices stay aligned with calendar time.
"""

from __future__ import annotations

import datetime
import json
import warnings
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple

from .errors import DuplicateId, EmptyCorpus, MalformedRecord

GRANULARITIES = ("year", "quarter", "month")


class Token(NamedTuple):
    surface: str
    pos: str | None = None


@dataclass(frozen=True)
class Document:
    """One time-stamped, pre-segmented text."""

    id: str
    date: datetime.date
    tokens: tuple[Token, ...]

    def surfaces(self) -> tuple[str, ...]:
        return tuple(t.surface for t in self.tokens)


@dataclass(frozen=True)
class CorpusSlice:
    label: str
    documents: tuple[Document, ...]

    def __len__(self) -> int:
        return len(self.documents)


@dataclass(frozen=True)
class TimeSlicedCorpus:
    """Documents partitioned into consecutive time slices.

    Slice labels are strictly increasing in calendar order and every
    document belongs to exactly one slice. Instances are immutable and safe
    to share across threads.
    """

    slices: tuple[CorpusSlice, ...]

    @property
    def n_slices(self) -> int:
        return len(self.slices)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(s.label for s in self.slices)

    @property
    def n_documents(self) -> int:
        return sum(len(s) for s in self.slices)

    def documents(self) -> Iterator[Document]:
        for s in self.slices:
            yield from s.documents


class EmptySliceWarning(UserWarning):
    """A calendar period between the first and last document has no documents."""


def _parse_token(entry: object, line_no: int) -> Token:
    if isinstance(entry, str):
        if not entry:
            raise MalformedRecord(line_no, "empty token surface")
        return Token(entry)
    if isinstance(entry, dict):
        surface = entry.get("s")
        if not isinstance(surface, str) or not surface:
            raise MalformedRecord(line_no, "token object needs a non-empty 's' field")
        pos = entry.get("pos")
        if pos is not None and not isinstance(pos, str):
            raise MalformedRecord(line_no, "token 'pos' must be a string when present")
        return Token(surface, pos)
    raise MalformedRecord(line_no, f"unsupported token entry: {entry!r}")


def _parse_record(raw: str, line_no: int) -> Document:
    try:
        record = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(line_no, f"invalid JSON ({exc.msg})") from exc
    if not isinstance(record, dict):
        raise MalformedRecord(line_no, "record is not a JSON object")

    doc_id = record.get("id")
    if not isinstance(doc_id, str) or not doc_id:
        raise MalformedRecord(line_no, "missing or empty 'id'")

    raw_date = record.get("date")
    if not isinstance(raw_date, str):
        raise MalformedRecord(line_no, "missing 'date'")
    try:
        date = datetime.date.fromisoformat(raw_date)
    except ValueError as exc:
        raise MalformedRecord(line_no, f"unparseable date {raw_date!r}") from exc

    if "tokens" in record:
        entries = record["tokens"]
        if not isinstance(entries, list):
            raise MalformedRecord(line_no, "'tokens' must be an array")
        tokens = tuple(_parse_token(e, line_no) for e in entries)
    elif "text" in record:
        text = record["text"]
        if not isinstance(text, str):
            raise MalformedRecord(line_no, "'text' must be a string")
        tokens = tuple(Token(s) for s in text.split())
    else:
        raise MalformedRecord(line_no, "record needs either 'tokens' or 'text'")

    if not tokens:
        raise MalformedRecord(line_no, "document has no tokens")
    return Document(doc_id, date, tokens)


def read_documents(path: str) -> list[Document]:
    """Parse a JSONL file into validated documents, preserving file order.

    All offending lines are collected before failing so the raised
    :class:`MalformedRecord` carries a full line-numbered report.
    """
    documents: list[Document] = []
    issues: list[tuple[int, str]] = []
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            if not raw.strip():
                continue
            try:
                doc = _parse_record(raw, line_no)
            except MalformedRecord as exc:
                issues.extend(exc.report)
                continue
            if doc.id in seen:
                raise DuplicateId(doc.id)
            seen[doc.id] = line_no
            documents.append(doc)
    if issues:
        raise MalformedRecord(issues[0][0], issues[0][1], report=issues)
    return documents


def load_corpus(path: str, slice_by: str = "year") -> TimeSlicedCorpus:
    """Read a JSONL corpus and partition it into calendar slices."""
    documents = read_documents(path)
    if not documents:
        raise EmptyCorpus(f"no documents in {path}")
    return slice_documents(documents, slice_by)


def _slice_key(date: datetime.date, granularity: str) -> tuple[int, int]:
    if granularity == "year":
        return (date.year, 0)
    if granularity == "quarter":
        return (date.year, (date.month - 1) // 3 + 1)
    if granularity == "month":
        return (date.year, date.month)
    raise ValueError(f"granularity must be one of {GRANULARITIES}, got {granularity!r}")


def _next_key(key: tuple[int, int], granularity: str) -> tuple[int, int]:
    year, sub = key
    if granularity == "year":
        return (year + 1, 0)
    last = 4 if granularity == "quarter" else 12
    return (year, sub + 1) if sub < last else (year + 1, 1)


def _key_label(key: tuple[int, int], granularity: str) -> str:
    year, sub = key
    if granularity == "year":
        return str(year)
    if granularity == "quarter":
        return f"{year}Q{sub}"
    return f"{year}-{sub:02d}"


def slice_documents(documents: Iterable[Document], granularity: str = "year") -> TimeSlicedCorpus:
    """Partition documents into consecutive calendar slices.

    Every period between the earliest and latest document is represented;
    periods with no documents become empty slices and raise an
    :class:`EmptySliceWarning`.
    """
    docs = list(documents)
    if not docs:
        raise EmptyCorpus()
    _slice_key(docs[0].date, granularity)  # validate granularity up front

    grouped: dict[tuple[int, int], list[Document]] = {}
    for doc in docs:
        grouped.setdefault(_slice_key(doc.date, granularity), []).append(doc)

    first = min(grouped)
    last = max(grouped)
    slices: list[CorpusSlice] = []
    key = first
    while True:
        label = _key_label(key, granularity)
        members = grouped.get(key, [])
        if not members:
            warnings.warn(f"no documents in period {label}; keeping an empty slice", EmptySliceWarning)
        slices.append(CorpusSlice(label, tuple(members)))
        if key == last:
            break
        key = _next_key(key, granularity)
    return TimeSlicedCorpus(tuple(slices))


def slice_by_year(documents: Iterable[Document]) -> TimeSlicedCorpus:
    return slice_documents(documents, "year")


def save_corpus(corpus: TimeSlicedCorpus, path: str) -> None:
    """Write a corpus back to JSONL; ``load_corpus`` round-trips it exactly."""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for doc in corpus.documents():
            tokens = [
                {"s": t.surface} if t.pos is None else {"s": t.surface, "pos": t.pos}
                for t in doc.tokens
            ]
            record = {"id": doc.id, "date": doc.date.isoformat(), "tokens": tokens}
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")
