from __future__ import annotations

import datetime

import numpy as np
import pytest

from termtrend.corpus import Document, Token
from termtrend.dtm import DtmConfig, DtmModel, vocabulary_hash
from termtrend.termextract import BowDocument


def tagged_doc(doc_id: str, date: str, pairs) -> Document:
    """pairs: iterable of (surface, pos) or bare surfaces (untagged)."""
    tokens = []
    for p in pairs:
        if isinstance(p, str):
            tokens.append(Token(p))
        else:
            tokens.append(Token(p[0], p[1]))
    return Document(doc_id, datetime.date.fromisoformat(date), tuple(tokens))


def bow_doc(doc_id: str, counts: dict[int, float]) -> BowDocument:
    ids = np.array(sorted(counts), dtype=np.int64)
    vals = np.array([counts[i] for i in sorted(counts)], dtype=np.float64)
    return BowDocument(doc_id, ids, vals)


def manual_model(beta, theta, doc_slices, terms=None, labels=None,
                 config=None) -> DtmModel:
    """Assemble a model directly from arrays (for scoring/eval tests)."""
    beta = np.asarray(beta, dtype=float)
    theta = np.asarray(theta, dtype=float)
    n_topics, n_slices, vocab_size = beta.shape
    if terms is None:
        terms = tuple(f"term{i:05d}" for i in range(vocab_size))
    if labels is None:
        labels = tuple(str(2006 + t) for t in range(n_slices))
    if config is None:
        config = DtmConfig(n_topics=max(n_topics, 2))
    doc_slices = np.asarray(doc_slices, dtype=np.int64)
    return DtmModel(
        config=config,
        terms=tuple(terms),
        slice_labels=tuple(labels),
        beta=beta,
        beta_log_mean=np.log(np.maximum(beta, 1e-300)),
        theta=theta,
        doc_ids=tuple(f"d{i}" for i in range(theta.shape[0])),
        doc_slices=doc_slices,
        elbo_trace=(),
        vocab_hash=vocabulary_hash(terms),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
