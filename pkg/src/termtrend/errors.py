"""Exception types shared across the package.

Every error carries a stable machine-readable ``code`` so the CLI can report
failures uniformly (``error[CODE]: message``) while library callers catch the
concrete classes.
"""

from __future__ import annotations


class TermTrendError(Exception):
    """Base class for all package errors."""

    code = "ERROR"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


# corpus ingestion ----------------------------------------------------------

class MalformedRecord(TermTrendError):
    """One or more input records failed validation.

    ``line`` is the first offending 1-based line number; ``report`` lists
    every ``(line, reason)`` pair found in the file.
    """

    code = "MALFORMED_RECORD"

    def __init__(self, line: int, reason: str, report: list[tuple[int, str]] | None = None):
        self.line = line
        self.report = report if report is not None else [(line, reason)]
        lines = "; ".join(f"line {ln}: {why}" for ln, why in self.report[:10])
        more = "" if len(self.report) <= 10 else f" (+{len(self.report) - 10} more)"
        super().__init__(f"{len(self.report)} malformed record(s): {lines}{more}")


class DuplicateId(TermTrendError):
    code = "DUPLICATE_ID"

    def __init__(self, doc_id: str):
        self.doc_id = doc_id
        super().__init__(f"duplicate document id: {doc_id!r}")


class EmptyCorpus(TermTrendError):
    code = "EMPTY_CORPUS"

    def __init__(self, message: str = "corpus contains no documents"):
        super().__init__(message)


# term extraction -----------------------------------------------------------

class NoNouns(TermTrendError):
    code = "NO_NOUNS"

    def __init__(self, message: str = "no noun-tagged tokens found; pass assume_nouns=True for untagged corpora"):
        super().__init__(message)


class MissingStats(TermTrendError):
    code = "MISSING_STATS"

    def __init__(self, constituent: str):
        self.constituent = constituent
        super().__init__(f"no collocation statistics for constituent {constituent!r}")


class EmptyVocabulary(TermTrendError):
    code = "EMPTY_VOCABULARY"

    def __init__(self, message: str = "all candidates were removed by the stop-word policy"):
        super().__init__(message)


# model fitting -------------------------------------------------------------

class NonFiniteElbo(TermTrendError):
    code = "NON_FINITE_ELBO"

    def __init__(self, iteration: int, value: float):
        self.iteration = iteration
        self.value = value
        super().__init__(f"objective became non-finite ({value!r}) at iteration {iteration}")


class AllMasked(TermTrendError):
    code = "ALL_MASKED"

    def __init__(self, message: str = "chain smoothing needs at least one observed slice"):
        super().__init__(message)


class IndexOutOfRange(TermTrendError):
    code = "INDEX_OUT_OF_RANGE"


# scoring / evaluation ------------------------------------------------------

class UnknownTerm(TermTrendError):
    code = "UNKNOWN_TERM"

    def __init__(self, term: str):
        self.term = term
        super().__init__(f"term {term!r} is not in the model vocabulary")


class SingleSlice(TermTrendError):
    code = "SINGLE_SLICE"

    def __init__(self, message: str = "increase measures need at least two time slices"):
        super().__init__(message)


class EmptyRanking(TermTrendError):
    code = "EMPTY_RANKING"

    def __init__(self, message: str = "cannot evaluate an empty ranking"):
        super().__init__(message)


# CLI orchestration ---------------------------------------------------------

class MissingInput(TermTrendError):
    code = "MISSING_INPUT"


class MissingModel(TermTrendError):
    code = "MISSING_MODEL"

    def __init__(self, path: str):
        super().__init__(f"model file not found: {path} (run `termtrend train` first)")


class MissingRevisions(TermTrendError):
    code = "MISSING_REVISIONS"

    def __init__(self, path: str | None):
        where = path if path else "(not configured)"
        super().__init__(f"revision file not found: {where}")
