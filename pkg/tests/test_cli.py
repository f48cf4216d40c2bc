"""CLI commands end to end in temporary directories."""

import io
import json

from click.testing import CliRunner

from archivist.benchmark import write_corpus_jsonl
from archivist.cli import main

from conftest import hand_authors, hand_entries


def write_hand_corpus(path) -> None:
    sink = io.StringIO()
    write_corpus_jsonl(hand_entries(), hand_authors(), sink)
    path.write_text(sink.getvalue(), encoding="utf-8")


def test_gen_benchmark_writes_files(tmp_path):
    runner = CliRunner()
    out = tmp_path / "bench"
    result = runner.invoke(main, ["gen-benchmark", "--seed", "7", "--out-dir", str(out)])
    assert result.exit_code == 0, result.output
    assert "125 entries" in result.output
    corpus = (out / "corpus.jsonl").read_text().strip().splitlines()
    assert len(corpus) == 150  # 25 authors + 125 entries
    dataset = (out / "dataset.jsonl").read_text().strip().splitlines()
    assert len(dataset) == 75  # 25 topics + 50 questions


def test_eval_prints_grid():
    runner = CliRunner()
    result = runner.invoke(main, ["eval", "--seed", "7"])
    assert result.exit_code == 0, result.output
    for label in ("lexical-only", "semantic-only", "hybrid"):
        assert label in result.output
    assert "Precision@5" in result.output


def test_eval_json_output():
    runner = CliRunner()
    result = runner.invoke(main, ["eval", "--seed", "7", "--json"])
    assert result.exit_code == 0, result.output
    report = json.loads(result.output)
    assert report["k"] == 5
    assert len(report["rows"]) == 3


def test_ingest_index_search_flow(tmp_path):
    corpus = tmp_path / "corpus.jsonl"
    write_hand_corpus(corpus)
    data_dir = str(tmp_path / "data")
    runner = CliRunner()

    result = runner.invoke(
        main, ["ingest", "--data-dir", data_dir, "--entries", str(corpus)]
    )
    assert result.exit_code == 0, result.output
    assert "6 entries, 3 authors" in result.output

    result = runner.invoke(main, ["index", "--data-dir", data_dir])
    assert result.exit_code == 0, result.output
    stats = json.loads(result.output)
    assert stats["lexical_docs"] == 6 and stats["entry_vectors"] == 6

    result = runner.invoke(
        main, ["search", "storm at sea", "--data-dir", data_dir, "--k", "2"]
    )
    assert result.exit_code == 0, result.output
    assert "#3" in result.output  # the storm entry ranks

    result = runner.invoke(
        main, ["search", "storm at sea", "--data-dir", data_dir, "--alpha", "0.0"]
    )
    assert result.exit_code == 0, result.output


def test_ask_degrades_without_llm(tmp_path):
    corpus = tmp_path / "corpus.jsonl"
    write_hand_corpus(corpus)
    data_dir = str(tmp_path / "data")
    runner = CliRunner()
    runner.invoke(main, ["ingest", "--data-dir", data_dir, "--entries", str(corpus)])
    runner.invoke(main, ["index", "--data-dir", data_dir])

    result = runner.invoke(main, ["ask", "what about storms?", "--data-dir", data_dir])
    assert result.exit_code == 0, result.output
    assert "degraded" in result.output
    assert "source entry" in result.output


def test_ingest_requires_an_input():
    result = CliRunner().invoke(main, ["ingest"])
    assert result.exit_code != 0
