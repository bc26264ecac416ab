"""Time-sliced topic model fit by variational EM.

Each topic k keeps one word distribution per slice, tied across slices by a
Gaussian random walk on the unnormalized log weights. The fit alternates:

E-step
    Per document d in slice t, mean-field fixed point against beta[:, t, :]:

        phi[k, w]  proportional to  beta[k, w] * exp(digamma(gamma[k]))
        gamma[k]   = alpha + sum_w count[w] * phi[k, w]

    iterated until the L1 change in gamma drops below 1e-6 (cap 100), then
    phi is refreshed once from the final gamma. The first EM iteration
    starts each document at gamma[k] = alpha + len(d) / K; later iterations
    warm-start from the document's previous gamma, so every update is
    coordinate ascent of the bound from the previous state. Expected counts
    ssc[k, t, w] accumulate count[w] * phi[k, w].

M-step
    Per (topic, word) chain, smooth the pseudo-observations
    log(ssc[k, :, w] + count_offset) with a scalar random-walk smoother
    (variances chain_variance / obs_variance, diffuse start) and renormalize
    each (k, t) row via softmax. Slices with no documents are masked out of
    the smoother and interpolated. With a single slice the smoother is
    skipped and the proposal is plain batch LDA. The smoothed update is a
    proposal, not a blind assignment: the bound's beta-dependent part (data
    term plus transition penalty) is concave in the log weights, so a
    per-topic backtracking line search from the current weights toward the
    proposal accepts the longest step that does not lower it. Together with
    the warm-started E-step this makes the recorded objective non-decreasing
    up to floating-point noise.

The objective recorded per iteration is the standard per-document variational
bound (expected token log-likelihood plus Dirichlet prior and entropy terms)
plus the random walk's transition log-density evaluated at the current log
weights. Everything is driven by one seed; repeated fits are bit-identical.
"""

from __future__ import annotations

import dataclasses
import hashlib
import io
import json
import warnings
import zipfile
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, psi

from .errors import EmptyCorpus, IndexOutOfRange, NonFiniteElbo
from .kalman import kalman_smooth_chain
from .termextract import BowDocument, TimeSlicedBow

FIXED_POINT_TOL = 1e-6
FIXED_POINT_MAX_ITERS = 100
MAX_BACKTRACKS = 30

MODEL_FORMAT = "termtrend-dtm"
MODEL_VERSION = 1


@dataclass(frozen=True)
class DtmConfig:
    n_topics: int = 20
    max_em_iters: int = 20
    alpha: float = 0.1
    chain_variance: float = 0.005
    obs_variance: float = 0.5
    converge_tol: float = 1e-4
    seed: int = 0
    count_offset: float = 0.01   # additive smoothing before taking logs
    init_em_iters: int = 5       # pooled batch-LDA rounds used for seeding

    def __post_init__(self) -> None:
        if self.n_topics < 2:
            raise ValueError("n_topics must be >= 2")
        if self.max_em_iters < 1:
            raise ValueError("max_em_iters must be >= 1")
        if min(self.alpha, self.chain_variance, self.obs_variance, self.count_offset) <= 0:
            raise ValueError("alpha, variances, and count_offset must be positive")
        if not 0.0 < self.converge_tol < 1.0:
            raise ValueError("converge_tol must be in (0, 1)")
        if self.init_em_iters < 1:
            raise ValueError("init_em_iters must be >= 1")


@dataclass
class DtmModel:
    """A fitted model: per-slice word distributions plus document posteriors.

    ``beta`` has shape (K, T, V) with every (k, t) row on the simplex and is
    always ``softmax(beta_log_mean)`` of the matching row. ``theta`` rows are
    per-document topic proportions aligned with ``doc_ids``/``doc_slices``.
    """

    config: DtmConfig
    terms: tuple[str, ...]
    slice_labels: tuple[str, ...]
    beta: np.ndarray
    beta_log_mean: np.ndarray
    theta: np.ndarray
    doc_ids: tuple[str, ...]
    doc_slices: np.ndarray
    elbo_trace: tuple[float, ...]
    vocab_hash: str
    dead_topics: tuple[int, ...] = ()

    @property
    def n_topics(self) -> int:
        return self.beta.shape[0]

    @property
    def n_slices(self) -> int:
        return self.beta.shape[1]

    @property
    def vocab_size(self) -> int:
        return self.beta.shape[2]

    def theta_for_slice(self, t: int) -> np.ndarray:
        return self.theta[self.doc_slices == t]

    def term_id(self, surface: str) -> int | None:
        index = self.__dict__.get("_term_index")
        if index is None:
            index = {s: i for i, s in enumerate(self.terms)}
            self.__dict__["_term_index"] = index
        return index.get(surface)


@dataclass
class DocPosterior:
    """Variational posterior for one document."""

    theta: np.ndarray      # (K,) topic proportions
    gamma: np.ndarray      # (K,) Dirichlet parameters
    phi: np.ndarray        # (K, U) per-term responsibilities, columns sum to 1
    term_ids: np.ndarray   # (U,) vocabulary ids phi columns refer to


def vocabulary_hash(terms) -> str:
    return hashlib.sha256("\n".join(terms).encode("utf-8")).hexdigest()


def _fixed_point(term_ids: np.ndarray, counts: np.ndarray, beta_slice: np.ndarray,
                 alpha: float, gamma0: np.ndarray | None = None
                 ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n_topics = beta_slice.shape[0]
    beta_w = beta_slice[:, term_ids]
    if gamma0 is None:
        gamma = np.full(n_topics, alpha + counts.sum() / n_topics)
    else:
        gamma = gamma0
    # gamma update without materializing phi: with e = exp(digamma(gamma)) and
    # column sums c_w = sum_k beta[k,w] e_k, the responsibility-weighted counts
    # reduce to e * (beta_w @ (counts / c)).
    for _ in range(FIXED_POINT_MAX_ITERS):
        e_gamma = np.exp(psi(gamma))
        col_sums = e_gamma @ beta_w
        new_gamma = alpha + e_gamma * (beta_w @ (counts / col_sums))
        delta = np.abs(new_gamma - gamma).sum()
        gamma = new_gamma
        if delta < FIXED_POINT_TOL:
            break
    e_gamma = np.exp(psi(gamma))
    phi = beta_w * e_gamma[:, None]
    phi /= e_gamma @ beta_w
    return gamma, phi, beta_w


def infer_document(doc: BowDocument, beta_slice: np.ndarray, alpha: float) -> DocPosterior:
    """Mean-field posterior for one document against one slice's topics."""
    if doc.term_ids.size == 0:
        raise ValueError("document has no counted terms")
    gamma, phi, _ = _fixed_point(doc.term_ids, doc.counts, beta_slice, alpha)
    return DocPosterior(gamma / gamma.sum(), gamma, phi, doc.term_ids)


def _doc_bound(gamma: np.ndarray, phi: np.ndarray, beta_w: np.ndarray,
               counts: np.ndarray, alpha: float) -> float:
    n_topics = gamma.shape[0]
    elog_theta = psi(gamma) - psi(gamma.sum())
    inner = elog_theta[:, None] + np.log(beta_w) - np.log(phi)
    bound = float((counts * (phi * inner).sum(axis=0)).sum())
    bound += float(gammaln(n_topics * alpha) - n_topics * gammaln(alpha)
                   + (alpha - 1.0) * elog_theta.sum())
    bound -= float(gammaln(gamma.sum()) - gammaln(gamma).sum()
                   + ((gamma - 1.0) * elog_theta).sum())
    return bound


def _e_step(bow: TimeSlicedBow, beta: np.ndarray, alpha: float,
            gammas: np.ndarray | None = None
            ) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """One inference sweep; ``gammas`` (documents x topics) warm-starts and is
    returned updated."""
    n_topics, n_slices, vocab_size = beta.shape
    ssc = np.zeros((n_topics, n_slices, vocab_size))
    theta = np.zeros((bow.n_documents, n_topics))
    new_gammas = np.zeros((bow.n_documents, n_topics))
    bound_sum = 0.0
    row = 0
    for t in range(n_slices):
        beta_t = beta[:, t, :]
        for doc in bow.slices[t]:
            gamma0 = gammas[row] if gammas is not None else None
            gamma, phi, beta_w = _fixed_point(doc.term_ids, doc.counts, beta_t,
                                              alpha, gamma0)
            ssc[:, t, doc.term_ids] += phi * doc.counts
            theta[row] = gamma / gamma.sum()
            new_gammas[row] = gamma
            bound_sum += _doc_bound(gamma, phi, beta_w, doc.counts, alpha)
            row += 1
    return ssc, theta, new_gammas, bound_sum


def _row_softmax(log_weights: np.ndarray) -> np.ndarray:
    shifted = log_weights - log_weights.max(axis=-1, keepdims=True)
    expd = np.exp(shifted)
    return expd / expd.sum(axis=-1, keepdims=True)


def _chain_penalty(beta_log_mean: np.ndarray, chain_var: float) -> float:
    if beta_log_mean.shape[1] == 1:
        return 0.0
    diffs = np.diff(beta_log_mean, axis=1)
    return float(-0.5 * np.log(2.0 * np.pi * chain_var) * diffs.size
                 - (diffs ** 2).sum() / (2.0 * chain_var))


def _topic_objective(x: np.ndarray, ssc_k: np.ndarray, chain_var: float) -> float:
    """Beta-dependent part of the bound for one topic: expected-count data
    term plus the transition quadratic (x-independent constants dropped)."""
    totals = ssc_k.sum(axis=1)
    peak = x.max(axis=1, keepdims=True)
    lse = np.log(np.exp(x - peak).sum(axis=1)) + peak[:, 0]
    value = float((ssc_k * x).sum() - (totals * lse).sum())
    if x.shape[0] > 1:
        diffs = np.diff(x, axis=0)
        value -= float((diffs ** 2).sum()) / (2.0 * chain_var)
    return value


def _m_step(ssc: np.ndarray, beta_log_mean: np.ndarray, slice_mask: np.ndarray,
            config: DtmConfig) -> tuple[np.ndarray, np.ndarray]:
    pseudo = np.log(ssc + config.count_offset)
    if ssc.shape[1] == 1:
        proposal = pseudo
    else:
        means, _ = kalman_smooth_chain(
            pseudo.transpose(1, 0, 2), slice_mask,
            chain_var=config.chain_variance, obs_var=config.obs_variance,
        )
        proposal = np.ascontiguousarray(means.transpose(1, 0, 2))
    log_mean = np.empty_like(beta_log_mean)
    for k in range(ssc.shape[0]):
        current = beta_log_mean[k]
        delta = proposal[k] - current
        base = _topic_objective(current, ssc[k], config.chain_variance)
        accepted = current
        step = 1.0
        for _ in range(MAX_BACKTRACKS):
            candidate = current + step * delta
            if _topic_objective(candidate, ssc[k], config.chain_variance) >= base:
                accepted = candidate
                break
            step *= 0.5
        log_mean[k] = accepted
    return log_mean, _row_softmax(log_mean)


def _pooled_lda_init(bow: TimeSlicedBow, config: DtmConfig) -> np.ndarray:
    """Seed all slices with one batch-LDA run over the pooled corpus."""
    rng = np.random.default_rng(config.seed)
    beta = rng.random((config.n_topics, bow.vocab_size)) + 0.01
    beta /= beta.sum(axis=1, keepdims=True)
    for _ in range(config.init_em_iters):
        ssc = np.zeros_like(beta)
        for _, doc in bow.documents():
            _, phi, _ = _fixed_point(doc.term_ids, doc.counts, beta, config.alpha)
            ssc[:, doc.term_ids] += phi * doc.counts
        beta = ssc + config.count_offset
        beta /= beta.sum(axis=1, keepdims=True)
    return beta


def fit(bow: TimeSlicedBow, config: DtmConfig,
        terms=None, vocab_hash: str | None = None) -> DtmModel:
    """Fit the model by EM until ``max_em_iters`` or relative objective change
    below ``converge_tol``.

    The recorded trace holds one objective value per E-step; the loop stops
    before the M-step that would follow the final recorded value, so the
    returned ``beta``, ``theta``, and last trace entry are mutually
    consistent. Deterministic given the seed.
    """
    if bow.n_documents == 0:
        raise EmptyCorpus("bag-of-words contains no documents")
    if bow.vocab_size < config.n_topics:
        warnings.warn(
            f"vocabulary size {bow.vocab_size} is below n_topics {config.n_topics}",
            UserWarning,
        )
    n_slices = bow.n_slices
    slice_mask = np.array([len(docs) > 0 for docs in bow.slices], dtype=bool)

    pooled = _pooled_lda_init(bow, config)
    beta_log_mean = np.ascontiguousarray(
        np.broadcast_to(np.log(pooled)[:, None, :],
                        (config.n_topics, n_slices, bow.vocab_size)))
    beta = _row_softmax(beta_log_mean)

    trace: list[float] = []
    previous: float | None = None
    ssc = np.zeros_like(beta)
    theta = np.zeros((bow.n_documents, config.n_topics))
    gammas: np.ndarray | None = None
    for iteration in range(config.max_em_iters):
        ssc, theta, gammas, bound_sum = _e_step(bow, beta, config.alpha, gammas)
        value = bound_sum + _chain_penalty(beta_log_mean, config.chain_variance)
        if not np.isfinite(value):
            raise NonFiniteElbo(iteration, value)
        trace.append(value)
        if previous is not None and abs(value - previous) / max(abs(previous), 1e-12) < config.converge_tol:
            break
        previous = value
        if iteration == config.max_em_iters - 1:
            break
        beta_log_mean, beta = _m_step(ssc, beta_log_mean, slice_mask, config)

    dead = tuple(int(k) for k in np.nonzero(ssc.sum(axis=(1, 2)) == 0.0)[0])
    if dead:
        warnings.warn(f"topics with no expected counts anywhere: {dead}", UserWarning)

    term_tuple = tuple(terms) if terms is not None else tuple(
        f"term{i:05d}" for i in range(bow.vocab_size))
    doc_ids: list[str] = []
    doc_slices: list[int] = []
    for t, doc in bow.documents():
        doc_ids.append(doc.doc_id)
        doc_slices.append(t)
    return DtmModel(
        config=config,
        terms=term_tuple,
        slice_labels=tuple(bow.slice_labels),
        beta=beta,
        beta_log_mean=beta_log_mean,
        theta=theta,
        doc_ids=tuple(doc_ids),
        doc_slices=np.array(doc_slices, dtype=np.int64),
        elbo_trace=tuple(trace),
        vocab_hash=vocab_hash if vocab_hash is not None else vocabulary_hash(term_tuple),
        dead_topics=dead,
    )


def elbo(model: DtmModel, bow: TimeSlicedBow) -> float:
    """Evaluate the variational objective of ``model`` on ``bow``.

    Re-infers document posteriors from the model's current beta (fresh
    starts), so the value is a pure function of (beta_log_mean, bow). It can
    differ at fixed-point-tolerance scale from the fit's final trace entry,
    which is evaluated at warm-started posteriors.
    """
    if bow.vocab_size != model.vocab_size or bow.n_slices != model.n_slices:
        raise ValueError("bag-of-words does not match the model dimensions")
    _, _, _, bound_sum = _e_step(bow, model.beta, model.config.alpha)
    value = bound_sum + _chain_penalty(model.beta_log_mean, model.config.chain_variance)
    if not np.isfinite(value):
        raise NonFiniteElbo(-1, value)
    return value


def top_term_indices(model: DtmModel, t: int, j: int, n: int) -> list[int]:
    """Vocabulary ids of the ``n`` most probable terms of topic ``j`` at slice
    ``t``, by descending probability with lexicographic tie-break."""
    if not 0 <= t < model.n_slices:
        raise IndexOutOfRange(f"slice index {t} outside 0..{model.n_slices - 1}")
    if not 0 <= j < model.n_topics:
        raise IndexOutOfRange(f"topic index {j} outside 0..{model.n_topics - 1}")
    if not 1 <= n <= model.vocab_size:
        raise IndexOutOfRange(f"n must be in 1..{model.vocab_size}, got {n}")
    row = model.beta[j, t]
    order = sorted(range(model.vocab_size), key=lambda w: (-row[w], model.terms[w]))
    return order[:n]


def topic_terms(model: DtmModel, t: int, j: int, n: int) -> list[tuple[str, float]]:
    """Top-``n`` terms of topic ``j`` at slice ``t``; ties break lexicographically."""
    order = top_term_indices(model, t, j, n)
    row = model.beta[j, t]
    return [(model.terms[w], float(row[w])) for w in order]


# serialization ---------------------------------------------------------------

def _npy_bytes(array: np.ndarray) -> bytes:
    buffer = io.BytesIO()
    np.save(buffer, array)
    return buffer.getvalue()


def _zip_entry(archive: zipfile.ZipFile, name: str, data: bytes) -> None:
    # fixed date_time keeps the container byte-identical across runs
    info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
    info.external_attr = 0o644 << 16
    archive.writestr(info, data, compress_type=zipfile.ZIP_DEFLATED, compresslevel=6)


def save_model(model: DtmModel, path: str) -> None:
    """Write the model to a single-file container (a deterministic zip)."""
    meta = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "config": dataclasses.asdict(model.config),
        "slice_labels": list(model.slice_labels),
        "elbo_trace": list(model.elbo_trace),
        "vocab_hash": model.vocab_hash,
        "dead_topics": list(model.dead_topics),
    }
    docs = {"doc_ids": list(model.doc_ids), "doc_slices": [int(t) for t in model.doc_slices]}
    with zipfile.ZipFile(path, "w") as archive:
        _zip_entry(archive, "meta.json",
                   json.dumps(meta, ensure_ascii=False, sort_keys=True).encode("utf-8"))
        _zip_entry(archive, "terms.json",
                   json.dumps(list(model.terms), ensure_ascii=False).encode("utf-8"))
        _zip_entry(archive, "docs.json",
                   json.dumps(docs, ensure_ascii=False, sort_keys=True).encode("utf-8"))
        _zip_entry(archive, "beta_log_mean.npy", _npy_bytes(model.beta_log_mean))
        _zip_entry(archive, "theta.npy", _npy_bytes(model.theta))


def load_model(path: str) -> DtmModel:
    with zipfile.ZipFile(path) as archive:
        meta = json.loads(archive.read("meta.json"))
        if meta.get("format") != MODEL_FORMAT:
            raise ValueError(f"{path} is not a model container")
        if meta.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {meta.get('version')}")
        terms = tuple(json.loads(archive.read("terms.json")))
        docs = json.loads(archive.read("docs.json"))
        beta_log_mean = np.load(io.BytesIO(archive.read("beta_log_mean.npy")))
        theta = np.load(io.BytesIO(archive.read("theta.npy")))
    config = DtmConfig(**meta["config"])
    return DtmModel(
        config=config,
        terms=terms,
        slice_labels=tuple(meta["slice_labels"]),
        beta=_row_softmax(beta_log_mean),
        beta_log_mean=beta_log_mean,
        theta=theta,
        doc_ids=tuple(docs["doc_ids"]),
        doc_slices=np.array(docs["doc_slices"], dtype=np.int64),
        elbo_trace=tuple(float(v) for v in meta["elbo_trace"]),
        vocab_hash=meta["vocab_hash"],
        dead_topics=tuple(int(k) for k in meta["dead_topics"]),
    )
