"""Surface emerging technical terms from a time-stamped corpus.

The pipeline: ingest pre-segmented documents, extract compound-term
candidates, filter them into a vocabulary, fit a time-sliced topic model, and
score term trends against optional classification-revision ground truth.
"""

__version__ = "0.1.0"

from .corpus import (  # noqa: F401
    Document,
    TimeSlicedCorpus,
    Token,
    load_corpus,
    save_corpus,
    slice_by_year,
    slice_documents,
)
from .dtm import (  # noqa: F401
    DtmConfig,
    DtmModel,
    elbo,
    fit,
    infer_document,
    load_model,
    save_model,
    topic_terms,
)
from .evaluation import (  # noqa: F401
    RevisionRecord,
    ap_at_n,
    cooccurrence_report,
    evaluate_rankings,
    extract_revision_terms,
    label_relevance,
    load_revisions,
)
from .kalman import kalman_smooth_chain  # noqa: F401
from .scoring import (  # noqa: F401
    OccupationMatrix,
    ScoreTable,
    ave_topic,
    build_score_table,
    dtm_topic_score,
    increase_amount,
    newcomer_terms,
    occupation_rate,
    term_score,
)
from .termextract import (  # noqa: F401
    StopWordPolicy,
    TermCandidate,
    TimeSlicedBow,
    Vocabulary,
    apply_filters,
    default_policy,
    docs_to_bow,
    extract_candidates,
    revision_policy,
    score_candidates,
)
