from __future__ import annotations

import datetime
import itertools
import json

import numpy as np
import pytest

from conftest import manual_model
from oracles import brute_ap
from termtrend.corpus import Token
from termtrend.errors import EmptyCorpus, EmptyRanking, MalformedRecord, UnknownTerm
from termtrend.evaluation import (
    RelevanceLabeling,
    RevisionRecord,
    ap_at_n,
    cooccurrence_report,
    evaluate_rankings,
    extract_revision_terms,
    format_ap_report,
    format_cooccurrence,
    label_relevance,
    load_revisions,
    normalize_surface,
)
from termtrend.scoring import build_score_table, occupation_rate


def revision(code, tokens, date="2015-04-01", tagged=True):
    toks = tuple(Token(s, "N" if tagged else None) for s in tokens)
    return RevisionRecord(code, datetime.date.fromisoformat(date), toks)


def labeling_from_flags(flags):
    ranked = tuple((0, f"term{i}", 1.0 - i * 0.01) for i in range(len(flags)))
    truth = frozenset(f"term{i}" for i, f in enumerate(flags) if f)
    return RelevanceLabeling(ranked, truth, tuple(flags))


# --- revision term extraction -------------------------------------------------

def test_single_noun_description():
    terms = extract_revision_terms([revision("F21-1", ["reflector"])])
    assert terms == {"reflector"}


def test_stop_words_removed_from_revisions():
    records = [revision("F21-1", ["前記", "反射板"]),
               revision("F21-2", ["反射板"])]
    terms = extract_revision_terms(records)
    assert "前記" not in terms
    assert "反射板" in terms


def test_untagged_revisions_fall_back_to_all_nouns():
    records = [revision("F21-1", ["beam", "splitter"], tagged=False)]
    terms = extract_revision_terms(records)
    assert "beam splitter" in terms


def test_revision_floor_default_keeps_singletons():
    records = [revision("F21-1", ["one-off"])]
    assert extract_revision_terms(records) == {"one-off"}


def test_empty_revisions_rejected():
    with pytest.raises(EmptyCorpus):
        extract_revision_terms([])


def test_load_revisions(tmp_path):
    path = tmp_path / "rev.jsonl"
    rows = [
        {"code": "F21S8/02", "date": "2013-04-01",
         "tokens": [{"s": "footlight", "pos": "N"}]},
        {"code": "F21V7/00", "date": "2014-04-01", "text": "reflector surface"},
    ]
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")
    records = load_revisions(str(path))
    assert [r.code for r in records] == ["F21S8/02", "F21V7/00"]
    assert records[1].description_tokens[0].surface == "reflector"


def test_load_revisions_reports_lines(tmp_path):
    path = tmp_path / "rev.jsonl"
    path.write_text('{"code": "", "date": "2013-04-01", "text": "x"}\n', encoding="utf-8")
    with pytest.raises(MalformedRecord) as exc:
        load_revisions(str(path))
    assert exc.value.line == 1


# --- relevance labeling ---------------------------------------------------------

def test_exact_match_is_relevant():
    labeling = label_relevance([(0, "reflector", 1.0)], {"reflector"})
    assert labeling.flags == (True,)


def test_superstring_is_not_relevant():
    labeling = label_relevance([(0, "light source device", 1.0)], {"light source"})
    assert labeling.flags == (False,)


def test_mixed_list_counts():
    ranked = [(0, t, 1.0) for t in ["a1", "b2", "c3", "d4", "e5"]]
    labeling = label_relevance(ranked, {"b2", "e5"})
    assert sum(labeling.flags) == 2
    assert [f for f in labeling.flags] == [t in {"b2", "e5"} for _, t, _ in ranked]


def test_normalization_nfkc_and_casefold():
    assert normalize_surface("ＬＥＤ Lamp") == "led lamp"
    labeling = label_relevance([(0, "ＬＥＤ　chip", 1.0)], {"led chip"})
    assert labeling.flags == (True,)


def test_topic_index_does_not_affect_relevance():
    l1 = label_relevance([(0, "x9", 1.0)], {"x9"})
    l2 = label_relevance([(7, "x9", 1.0)], {"x9"})
    assert l1.flags == l2.flags == (True,)


# --- AP@n ------------------------------------------------------------------------

def test_ap_hand_value():
    labeling = labeling_from_flags([True, False, True])
    assert ap_at_n(labeling, 3) == pytest.approx(13.0 / 18.0, abs=1e-12)


def test_ap_all_relevant_is_one():
    assert ap_at_n(labeling_from_flags([True] * 5), 5) == 1.0


def test_ap_none_relevant_is_zero():
    assert ap_at_n(labeling_from_flags([False] * 5), 5) == 0.0


def test_ap_empty_ranking():
    with pytest.raises(EmptyRanking):
        ap_at_n(labeling_from_flags([]), 3)
    with pytest.raises(ValueError):
        ap_at_n(labeling_from_flags([True]), 0)


def test_ap_short_ranking_warns_and_evaluates_whole():
    labeling = labeling_from_flags([True, False])
    with pytest.warns(UserWarning, match="only 2 items"):
        value = ap_at_n(labeling, 10)
    assert value == pytest.approx(brute_ap([True, False], 2), abs=1e-12)


def test_ap_matches_brute_force(rng):
    for _ in range(50):
        flags = [bool(b) for b in rng.integers(0, 2, size=int(rng.integers(1, 9)))]
        n = int(rng.integers(1, len(flags) + 1))
        assert ap_at_n(labeling_from_flags(flags), n) == \
            pytest.approx(brute_ap(flags, n), abs=1e-12)


def test_ap_invariant_below_cutoff():
    head = [True, False, True]
    for tail in itertools.permutations([True, False, False]):
        value = ap_at_n(labeling_from_flags(head + list(tail)), 3)
        assert value == pytest.approx(13.0 / 18.0, abs=1e-12)


def test_ap_swap_monotonicity_exhaustive():
    # pushing a relevant item down past an irrelevant one never raises AP@n
    for length in range(2, 7):
        for bits in itertools.product([False, True], repeat=length):
            flags = list(bits)
            base = ap_at_n(labeling_from_flags(flags), length)
            for i in range(length):
                for j in range(i + 1, length):
                    if flags[i] and not flags[j]:
                        swapped = flags.copy()
                        swapped[i], swapped[j] = swapped[j], swapped[i]
                        assert ap_at_n(labeling_from_flags(swapped), length) <= base + 1e-12


def test_ap_standard_variant():
    labeling = labeling_from_flags([True, False, True])
    # precision at relevant ranks: 1/1 and 2/3; two relevant items
    assert ap_at_n(labeling, 3, standard=True) == pytest.approx((1.0 + 2.0 / 3.0) / 2.0)
    assert ap_at_n(labeling_from_flags([False, False]), 2, standard=True) == 0.0


# --- ranking evaluation -----------------------------------------------------------

def eval_model():
    beta = np.array([
        [[0.5, 0.3, 0.1, 0.06, 0.04],
         [0.3, 0.05, 0.3, 0.3, 0.05]],  # lens enters the top 3 -> newcomer
        [[0.1, 0.1, 0.2, 0.3, 0.3],
         [0.1, 0.1, 0.2, 0.3, 0.3]],
    ])
    theta = np.array([[0.8, 0.2], [0.6, 0.4], [0.5, 0.5], [0.4, 0.6]])
    terms = ("lamp", "socket", "reflector", "lens", "housing")
    return manual_model(beta, theta, [0, 0, 1, 1], terms=terms)


def test_evaluate_rankings_empty_truth_all_zero():
    model = eval_model()
    occ = occupation_rate(model)
    table = build_score_table(model, occ, 3)
    report = evaluate_rankings(table, set(), (1, 2), "all")
    assert all(v == 0.0 for per_n in report.values.values() for v in per_n.values())


def test_evaluate_rankings_matches_brute_force():
    model = eval_model()
    occ = occupation_rate(model)
    table = build_score_table(model, occ, 3)
    truth = {"reflector", "lens"}
    report = evaluate_rankings(table, truth, (1, 3, 5), "all")
    for key in ("term_score", "increase_score"):
        ranked = sorted(table.rows, key=lambda r: (-getattr(r, key), r.term, r.topic))
        flags = [r.term in truth for r in ranked]
        for n in (1, 3, 5):
            assert report.values[key][n] == pytest.approx(brute_ap(flags, n), abs=1e-12)


def test_evaluate_rankings_newcomer_subset():
    model = eval_model()
    occ = occupation_rate(model)
    table = build_score_table(model, occ, 3)
    newcomers = [r for r in table.rows if r.newcomer]
    truth = {r.term for r in newcomers[:1]}
    report = evaluate_rankings(table, truth, (1,), "newcomers")
    assert report.subset == "newcomers"
    if newcomers:
        ranked = sorted(newcomers, key=lambda r: (-r.increase_score, r.term, r.topic))
        assert report.values["increase_score"][1] == (1.0 if ranked[0].term in truth else 0.0)


def test_evaluate_rankings_empty_subset_warns():
    model = eval_model()
    occ = occupation_rate(model)
    table = build_score_table(model, occ, 3)
    no_newcomers = type(table)(tuple(r for r in table.rows if not r.newcomer), table.n_top)
    with pytest.warns(UserWarning, match="no rows"):
        report = evaluate_rankings(no_newcomers, {"lamp"}, (1,), "newcomers")
    assert report.values["term_score"][1] == 0.0


def test_evaluate_rankings_validation():
    model = eval_model()
    occ = occupation_rate(model)
    table = build_score_table(model, occ, 3)
    with pytest.raises(ValueError):
        evaluate_rankings(table, set(), (), "all")
    with pytest.raises(ValueError):
        evaluate_rankings(table, set(), (1,), "some")


def test_format_ap_report_layout():
    import warnings

    model = eval_model()
    occ = occupation_rate(model)
    table = build_score_table(model, occ, 3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)  # newcomer subset is short
        reports = [evaluate_rankings(table, {"lens"}, (1, 3), subset)
                   for subset in ("all", "newcomers")]
    text = format_ap_report(reports)
    assert "sorted by increase score" in text
    assert "sorted by term score" in text
    assert "AP@1" in text and "AP@3" in text
    assert "subset: all" in text and "subset: newcomers" in text


# --- co-occurrence report ----------------------------------------------------------

def test_cooccurrence_finds_first_matching_description():
    model = eval_model()
    occ = occupation_rate(model)
    revisions = [
        revision("F21-0", ["unrelated", "words"]),
        revision("F21-1", ["focal", "point", "lens", "reflector", "sequence"]),
        revision("F21-2", ["lens", "reflector"]),
    ]
    rows = cooccurrence_report("reflector", 1, model, occ, revisions, n_top=3, n_rows=3)
    by_term = {r.term: r for r in rows}
    assert "lens" in by_term
    assert by_term["lens"].excerpt == "focal point lens reflector sequence"


def test_cooccurrence_no_match_rows():
    model = eval_model()
    occ = occupation_rate(model)
    rows = cooccurrence_report("reflector", 1, model, occ, [], n_top=3, n_rows=2)
    assert rows and all(r.excerpt is None for r in rows)
    text = format_cooccurrence("reflector", 1, rows)
    assert "No match" in text


def test_cooccurrence_excludes_focus_and_ranks_by_term_score():
    model = eval_model()
    occ = occupation_rate(model)
    rows = cooccurrence_report("lens", 1, model, occ, [], n_top=3, n_rows=5)
    assert all(r.term != "lens" for r in rows)
    scores = [r.term_score for r in rows]
    assert scores == sorted(scores, reverse=True)


def test_cooccurrence_requires_token_run_not_substring():
    model = eval_model()
    occ = occupation_rate(model)
    revisions = [revision("F21-1", ["reflectorized", "lens"])]
    rows = cooccurrence_report("reflector", 1, model, occ, revisions, n_top=3, n_rows=3)
    assert all(r.excerpt is None for r in rows)


def test_cooccurrence_unknown_focus():
    model = eval_model()
    occ = occupation_rate(model)
    with pytest.raises(UnknownTerm):
        cooccurrence_report("nonexistent", 0, model, occ, [])
