"""Command-line pipeline: extract-terms, train, scores, eval, report.

Each subcommand reads/writes a shared output directory so they can run
independently. All outputs carry a header with the tool version, seed, and
config hash; given unchanged inputs and config, reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import __version__
from .config import PipelineConfig, load_pipeline_config
from .corpus import load_corpus
from .dtm import fit, load_model, save_model, vocabulary_hash
from .errors import MissingInput, MissingModel, MissingRevisions, TermTrendError
from .evaluation import (
    cooccurrence_report,
    evaluate_rankings,
    extract_revision_terms,
    format_ap_report,
    format_cooccurrence,
    load_revisions,
    write_ap_report_csv,
    write_cooccurrence_csv,
)
from .scoring import (
    build_score_table,
    occupation_rate,
    write_occupation_csv,
    write_score_table_csv,
    write_trajectories_csv,
)
from .termextract import (
    apply_filters,
    docs_to_bow,
    extract_candidates,
    load_stop_words,
    read_bow_csv,
    read_vocabulary_csv,
    score_candidates,
    write_bow_csv,
    write_vocabulary_csv,
)

VOCAB_FILE = "vocabulary.csv"
BOW_FILE = "bow.csv"
EXCLUDED_FILE = "excluded_docs.csv"
MODEL_FILE = "model.ttm"
ELBO_FILE = "elbo_trace.csv"
SCORE_FILE = "score_table.csv"
OCCUPATION_FILE = "occupation_rate.csv"
TRAJECTORY_FILE = "term_trajectories.csv"
AP_CSV_FILE = "ap_report.csv"
AP_TEXT_FILE = "ap_report.txt"
COOCCURRENCE_FILE = "cooccurrence.csv"
FIGURE_DIR = "figures"


def _outpath(config: PipelineConfig, name: str) -> str:
    return os.path.join(config.output_dir, name)


def cmd_extract_terms(config: PipelineConfig) -> None:
    if not config.corpus_path or not os.path.exists(config.corpus_path):
        raise MissingInput(f"corpus file not found: {config.corpus_path}")
    os.makedirs(config.output_dir, exist_ok=True)
    corpus = load_corpus(config.corpus_path, config.slice_by)

    assume_nouns = config.token_mode == "all-nouns"
    if config.token_mode == "auto":
        assume_nouns = not any(t.pos is not None for d in corpus.documents() for t in d.tokens)
    candidates, stats = extract_candidates(corpus, assume_nouns=assume_nouns,
                                           separator=config.separator)
    scored = score_candidates(candidates, stats)
    vocab = apply_filters(scored, config.stopword_policy())
    bow = docs_to_bow(corpus, vocab)

    header = config.header_lines()
    by_surface = {c.surface: c for c in scored}
    kept = [by_surface[term] for term in vocab.terms]
    write_vocabulary_csv(_outpath(config, VOCAB_FILE), kept, header)
    write_bow_csv(_outpath(config, BOW_FILE), bow, header)
    with open(_outpath(config, EXCLUDED_FILE), "w", encoding="utf-8", newline="\n") as handle:
        for line in header:
            handle.write(f"# {line}\n")
        handle.write("slice,doc_id\n")
        for label, doc_id in bow.excluded:
            handle.write(f"{label},{doc_id}\n")
    print(f"{len(vocab.terms)} terms, {len(bow.excluded)} documents excluded, "
          f"{bow.n_documents} retained")


def cmd_train(config: PipelineConfig) -> None:
    bow_path = _outpath(config, BOW_FILE)
    vocab_path = _outpath(config, VOCAB_FILE)
    if not os.path.exists(bow_path) or not os.path.exists(vocab_path):
        raise MissingInput(
            f"missing {BOW_FILE}/{VOCAB_FILE} in {config.output_dir} "
            "(run `termtrend extract-terms` first)")
    bow = read_bow_csv(bow_path)
    vocab, _ = read_vocabulary_csv(vocab_path, config.separator)
    model = fit(bow, config.dtm_config(), terms=vocab.terms,
                vocab_hash=vocabulary_hash(vocab.terms))
    save_model(model, _outpath(config, MODEL_FILE))
    with open(_outpath(config, ELBO_FILE), "w", encoding="utf-8", newline="\n") as handle:
        for line in config.header_lines():
            handle.write(f"# {line}\n")
        handle.write("iteration,elbo\n")
        for i, value in enumerate(model.elbo_trace):
            handle.write(f"{i},{value!r}\n")
    print(f"model fitted: {model.n_topics} topics, {model.n_slices} slices, "
          f"{len(model.elbo_trace)} EM iterations")


def _load_model(config: PipelineConfig):
    path = _outpath(config, MODEL_FILE)
    if not os.path.exists(path):
        raise MissingModel(path)
    return load_model(path)


def cmd_scores(config: PipelineConfig) -> None:
    model = _load_model(config)
    occ = occupation_rate(model)
    table = build_score_table(model, occ, config.top_terms)
    header = config.header_lines()
    write_score_table_csv(_outpath(config, SCORE_FILE), table, header)
    write_occupation_csv(_outpath(config, OCCUPATION_FILE), occ, header)
    write_trajectories_csv(_outpath(config, TRAJECTORY_FILE), model, table, header)
    print(f"{len(table.rows)} scored (topic, term) pairs, "
          f"{sum(r.newcomer for r in table.rows)} newcomers")


def cmd_eval(config: PipelineConfig, focus: str | None = None,
             focus_topic: int | None = None) -> None:
    model = _load_model(config)
    if not config.revision_path or not os.path.exists(config.revision_path):
        raise MissingRevisions(config.revision_path)
    revisions = load_revisions(config.revision_path)
    truth = extract_revision_terms(
        revisions, config.stopword_policy(for_revisions=True), config.separator)
    occ = occupation_rate(model)
    table = build_score_table(model, occ, config.top_terms)
    reports = [
        evaluate_rankings(table, truth, config.eval_ns, subset, config.separator)
        for subset in ("all", "newcomers")
    ]
    header = config.header_lines()
    write_ap_report_csv(_outpath(config, AP_CSV_FILE), reports, header)
    text = format_ap_report(reports)
    with open(_outpath(config, AP_TEXT_FILE), "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text + "\n")
    print(f"{len(truth)} ground-truth terms")
    print(text)

    if focus is not None:
        if focus_topic is None:
            raise TermTrendError("--focus needs --topic")
        rows = cooccurrence_report(focus, focus_topic, model, occ, revisions,
                                   config.top_terms, separator=config.separator)
        write_cooccurrence_csv(_outpath(config, COOCCURRENCE_FILE), rows, header)
        print(format_cooccurrence(focus, focus_topic, rows))


def cmd_report(config: PipelineConfig, plot_topics: list[int] | None = None,
               n_series: int = 8) -> None:
    """Emit the trend CSVs plus rendered figures."""
    from .report import (
        default_report_topics,
        render_occupation_figure,
        render_term_trajectories_figure,
    )

    model = _load_model(config)
    occ = occupation_rate(model)
    table = build_score_table(model, occ, config.top_terms)
    header = config.header_lines()
    write_occupation_csv(_outpath(config, OCCUPATION_FILE), occ, header)
    write_trajectories_csv(_outpath(config, TRAJECTORY_FILE), model, table, header)

    fig_dir = _outpath(config, FIGURE_DIR)
    os.makedirs(fig_dir, exist_ok=True)
    topics = plot_topics if plot_topics else default_report_topics(occ)
    render_occupation_figure(occ, os.path.join(fig_dir, "occupation_rate.png"))
    written = ["occupation_rate.png"]
    for j in topics:
        name = f"topic_{j:02d}_terms.png"
        render_term_trajectories_figure(model, table, j, os.path.join(fig_dir, name),
                                        n_series)
        written.append(name)
    print(f"figures written to {fig_dir}: {', '.join(written)}")


def _int_list(raw: str) -> list[int]:
    return [int(part) for part in raw.split(",") if part]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="termtrend",
        description="Trend scoring for technical terms in time-stamped corpora",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", dest="output_dir", help="output directory")
        p.add_argument("--seed", type=int)
        p.add_argument("--separator", help="surface separator for compound terms")
        p.add_argument("--top", dest="top_terms", type=int,
                       help="top-term cutoff per topic and slice")

    p = sub.add_parser("extract-terms", help="build vocabulary and bag-of-words")
    common(p)
    p.add_argument("--corpus", dest="corpus_path", help="line-delimited JSON corpus")
    p.add_argument("--slice", dest="slice_by", choices=["year", "quarter", "month"])
    p.add_argument("--token-mode", dest="token_mode",
                   choices=["auto", "tagged", "all-nouns"])
    p.add_argument("--floor", dest="low_frequency_floor", type=int,
                   help="minimum corpus frequency kept")
    p.add_argument("--cutoff", dest="high_frequency_cutoff", type=int,
                   help="frequencies above this are removed")
    p.add_argument("--stop-words", dest="stop_word_file",
                   help="file with one stop word per line (replaces defaults)")

    p = sub.add_parser("train", help="fit the time-sliced topic model")
    common(p)
    p.add_argument("--topics", type=int)
    p.add_argument("--iters", dest="em_iters", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--chain-var", dest="chain_variance", type=float)
    p.add_argument("--obs-var", dest="obs_variance", type=float)

    p = sub.add_parser("scores", help="compute trend score tables")
    common(p)

    p = sub.add_parser("eval", help="evaluate rankings against revision terms")
    common(p)
    p.add_argument("--revisions", dest="revision_path")
    p.add_argument("--ns", dest="eval_ns", type=_int_list, help="comma-separated AP cutoffs")
    p.add_argument("--focus", help="term for the co-occurrence report")
    p.add_argument("--topic", dest="focus_topic", type=int,
                   help="topic index for the co-occurrence report")
    p.add_argument("--revision-floor", dest="revision_frequency_floor", type=int)

    p = sub.add_parser("report", help="emit trend CSVs and figures")
    common(p)
    p.add_argument("--plot-topics", type=_int_list, help="comma-separated topic indices")
    p.add_argument("--series", dest="n_series", type=int, default=8,
                   help="term trajectories per topic figure")
    return parser


_CONFIG_KEYS = (
    "corpus_path", "revision_path", "output_dir", "slice_by", "separator",
    "token_mode", "low_frequency_floor", "high_frequency_cutoff",
    "revision_frequency_floor", "topics", "em_iters", "alpha", "chain_variance",
    "obs_variance", "seed", "top_terms", "eval_ns",
)


def _config_from_args(args: argparse.Namespace) -> PipelineConfig:
    overrides = {k: getattr(args, k) for k in _CONFIG_KEYS if hasattr(args, k)}
    if overrides.get("eval_ns") is not None:
        overrides["eval_ns"] = tuple(overrides["eval_ns"])
    if getattr(args, "stop_word_file", None):
        overrides["stop_words"] = tuple(sorted(load_stop_words(args.stop_word_file)))
    return load_pipeline_config(args.config, overrides)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _config_from_args(args)
        if args.command == "extract-terms":
            cmd_extract_terms(config)
        elif args.command == "train":
            cmd_train(config)
        elif args.command == "scores":
            cmd_scores(config)
        elif args.command == "eval":
            cmd_eval(config, args.focus, args.focus_topic)
        elif args.command == "report":
            cmd_report(config, args.plot_topics, args.n_series)
    except TermTrendError as exc:
        print(f"error[{exc.code}]: {exc.message}", file=sys.stderr)
        return 1
    except (FileNotFoundError, ValueError) as exc:
        print(f"error[INVALID_INPUT]: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
