from __future__ import annotations

import json

import pytest

from synth import write_revision_records, write_text_corpus
from termtrend.cli import main


@pytest.fixture(scope="module")
def pipeline_dir(tmp_path_factory):
    """A small corpus run end to end once; commands assert on its outputs."""
    root = tmp_path_factory.mktemp("pipeline")
    corpus = root / "corpus.jsonl"
    revisions = root / "revisions.jsonl"
    write_text_corpus(str(corpus), n_docs=240, n_terms=120, seed=7,
                      year_range=(2006, 2011), tokens_per_doc=25,
                      compound_every=6, standalone_light_every=12)
    write_revision_records(str(revisions), seed=8, n_records=30, n_terms=120)
    out = root / "out"
    args = ["--corpus", str(corpus), "--out", str(out), "--floor", "2",
            "--cutoff", "100000", "--seed", "3"]
    assert main(["extract-terms", *args]) == 0
    assert main(["train", "--out", str(out), "--topics", "4", "--iters", "4",
                 "--seed", "3"]) == 0
    assert main(["scores", "--out", str(out), "--top", "20", "--seed", "3"]) == 0
    assert main(["eval", "--out", str(out), "--revisions", str(revisions),
                 "--ns", "5,10", "--top", "20", "--seed", "3",
                 "--focus", "light emitting diode", "--topic", "0"]) == 0
    assert main(["report", "--out", str(out), "--top", "20", "--seed", "3",
                 "--plot-topics", "0,1", "--series", "4"]) == 0
    return root


def test_pipeline_outputs_exist(pipeline_dir):
    out = pipeline_dir / "out"
    for name in ["vocabulary.csv", "bow.csv", "excluded_docs.csv", "model.ttm",
                 "elbo_trace.csv", "score_table.csv", "occupation_rate.csv",
                 "term_trajectories.csv", "ap_report.csv", "ap_report.txt",
                 "cooccurrence.csv"]:
        assert (out / name).exists(), name
    figures = out / "figures"
    assert (figures / "occupation_rate.png").exists()
    assert (figures / "topic_00_terms.png").exists()
    assert (figures / "topic_01_terms.png").exists()


def test_vocabulary_contains_planted_compound(pipeline_dir):
    text = (pipeline_dir / "out" / "vocabulary.csv").read_text(encoding="utf-8")
    assert "light emitting diode" in text


def test_outputs_carry_provenance_header(pipeline_dir):
    for name in ["vocabulary.csv", "score_table.csv", "ap_report.csv"]:
        first = (pipeline_dir / "out" / name).read_text(encoding="utf-8").splitlines()[0]
        assert first.startswith("# termtrend=")
        assert "seed=3" in first and "config=" in first


def test_elbo_trace_respects_iteration_cap(pipeline_dir):
    lines = [l for l in (pipeline_dir / "out" / "elbo_trace.csv").read_text().splitlines()
             if l and not l.startswith("#")]
    assert lines[0] == "iteration,elbo"
    assert 1 <= len(lines) - 1 <= 4


def test_single_iteration_trace(pipeline_dir, tmp_path):
    out = tmp_path / "single"
    import shutil

    shutil.copytree(pipeline_dir / "out", out)
    assert main(["train", "--out", str(out), "--topics", "4", "--iters", "1",
                 "--seed", "3"]) == 0
    lines = [l for l in (out / "elbo_trace.csv").read_text().splitlines()
             if l and not l.startswith("#")]
    assert len(lines) - 1 == 1


def test_rerun_is_byte_identical(pipeline_dir, tmp_path):
    corpus = pipeline_dir / "corpus.jsonl"
    outs = []
    for run in range(2):
        out = tmp_path / f"run{run}"
        args = ["--corpus", str(corpus), "--out", str(out), "--floor", "2",
                "--cutoff", "100000", "--seed", "3"]
        assert main(["extract-terms", *args]) == 0
        assert main(["train", "--out", str(out), "--topics", "3", "--iters", "2",
                     "--seed", "3"]) == 0
        assert main(["scores", "--out", str(out), "--top", "15", "--seed", "3"]) == 0
        outs.append(out)
    for name in ["vocabulary.csv", "bow.csv", "model.ttm", "elbo_trace.csv",
                 "score_table.csv", "occupation_rate.csv", "term_trajectories.csv"]:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name


def test_missing_corpus_fails(tmp_path, capsys):
    assert main(["extract-terms", "--corpus", str(tmp_path / "nope.jsonl"),
                 "--out", str(tmp_path / "o")]) == 1
    assert "error[MISSING_INPUT]" in capsys.readouterr().err


def test_empty_corpus_fails(tmp_path, capsys):
    corpus = tmp_path / "empty.jsonl"
    corpus.write_text("")
    assert main(["extract-terms", "--corpus", str(corpus),
                 "--out", str(tmp_path / "o")]) == 1
    assert "error[EMPTY_CORPUS]" in capsys.readouterr().err


def test_missing_model_fails(tmp_path, capsys):
    assert main(["scores", "--out", str(tmp_path)]) == 1
    assert "error[MISSING_MODEL]" in capsys.readouterr().err


def test_missing_revisions_fails(pipeline_dir, capsys):
    out = pipeline_dir / "out"
    assert main(["eval", "--out", str(out),
                 "--revisions", str(pipeline_dir / "nope.jsonl")]) == 1
    assert "error[MISSING_REVISIONS]" in capsys.readouterr().err


def test_focus_requires_topic(pipeline_dir, capsys):
    out = pipeline_dir / "out"
    code = main(["eval", "--out", str(out),
                 "--revisions", str(pipeline_dir / "revisions.jsonl"),
                 "--ns", "5", "--top", "20", "--focus", "light"])
    assert code == 1
    assert "--topic" in capsys.readouterr().err


def test_config_file_with_flag_override(pipeline_dir, tmp_path, capsys):
    corpus = pipeline_dir / "corpus.jsonl"
    config = tmp_path / "config.json"
    out = tmp_path / "cfg_out"
    config.write_text(json.dumps({
        "corpus_path": str(corpus),
        "output_dir": str(tmp_path / "ignored"),
        "low_frequency_floor": 2,
        "high_frequency_cutoff": 100000,
        "seed": 3,
    }), encoding="utf-8")
    # --out overrides the file's output_dir
    assert main(["extract-terms", "--config", str(config), "--out", str(out)]) == 0
    assert out.exists() and not (tmp_path / "ignored").exists()


def test_unknown_config_key_fails(tmp_path, capsys):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"not_a_key": 1}), encoding="utf-8")
    assert main(["extract-terms", "--config", str(config)]) == 1
    assert "error[INVALID_INPUT]" in capsys.readouterr().err


def test_stop_word_file_flag(pipeline_dir, tmp_path):
    corpus = pipeline_dir / "corpus.jsonl"
    stops = tmp_path / "stops.txt"
    stops.write_text("# comment\nw0000\n", encoding="utf-8")
    out = tmp_path / "stopped"
    assert main(["extract-terms", "--corpus", str(corpus), "--out", str(out),
                 "--floor", "2", "--cutoff", "100000", "--stop-words", str(stops)]) == 0
    vocab = (out / "vocabulary.csv").read_text(encoding="utf-8")
    assert "w0000" not in vocab


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
