"""Command-line surface: exit codes, output formats, config plumbing."""

from __future__ import annotations

import csv
import io
import json
import os
import signal
import subprocess
import sys
import time
import urllib.request
from pathlib import Path

import pytest

from paperscreen.cli import main
from paperscreen.dictionary import seed_dictionary_text
from paperscreen.search import read_corpus
from paperscreen.store import LedgerStore

REPO_ROOT = Path(__file__).resolve().parent.parent
DEMO_GRAMMAR = REPO_ROOT / "src" / "paperscreen" / "data" / "demo_grammar.txt"


@pytest.fixture
def seed_dict_path(tmp_path) -> Path:
    path = tmp_path / "seed.txt"
    path.write_text(seed_dictionary_text(), encoding="utf-8")
    return path


def run_cli(*argv: str) -> int:
    return main(list(argv))


class TestScan:
    def test_hit_exits_one_with_json_report(self, tmp_path, seed_dict_path, capsys):
        doc = tmp_path / "doc.txt"
        doc.write_text("This fake neural organization cites prior art.")
        code = run_cli("scan", str(doc), "--dict", str(seed_dict_path))
        assert code == 1
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 1
        report = json.loads(lines[0])
        assert report["paper_id"] == str(doc)
        assert report["categories_triggered"] == ["tortured"]
        (hit,) = report["hits"]
        assert hit["matched_surface"] == "fake neural organization"
        assert hit["expected_phrase"] == "artificial neural network"

    def test_empty_directory_exits_zero(self, tmp_path, seed_dict_path, capsys):
        empty = tmp_path / "empty"
        empty.mkdir()
        code = run_cli("scan", str(empty), "--dict", str(seed_dict_path))
        assert code == 0
        assert capsys.readouterr().out == ""

    def test_clean_file_exits_zero(self, tmp_path, seed_dict_path, capsys):
        doc = tmp_path / "doc.txt"
        doc.write_text("nothing suspicious at all")
        assert run_cli("scan", str(doc), "--dict", str(seed_dict_path)) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["hits"] == []

    def test_jsonl_corpus_input(self, tmp_path, seed_dict_path, capsys):
        corpus = tmp_path / "corpus.jsonl"
        corpus.write_text(
            json.dumps({"external_id": "a", "full_text": "fake neural organization"})
            + "\n"
            + json.dumps({"external_id": "b", "full_text": "clean"})
            + "\n"
        )
        assert run_cli("scan", str(corpus), "--dict", str(seed_dict_path)) == 1
        reports = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
        assert [r["paper_id"] for r in reports] == ["a", "b"]
        assert len(reports[0]["hits"]) == 1
        assert reports[1]["hits"] == []

    def test_missing_input_alone_exits_three(self, tmp_path, seed_dict_path, capsys):
        code = run_cli("scan", str(tmp_path / "nope.txt"), "--dict", str(seed_dict_path))
        assert code == 3
        record = json.loads(capsys.readouterr().out)
        assert "error" in record

    def test_partial_failure_still_reports_findings(self, tmp_path, seed_dict_path, capsys):
        doc = tmp_path / "doc.txt"
        doc.write_text("a fake neural organization")
        code = run_cli(
            "scan", str(tmp_path / "nope.txt"), str(doc),
            "--dict", str(seed_dict_path),
        )
        assert code == 1

    def test_bad_dictionary_is_usage_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.txt"
        bad.write_text("not a dictionary")
        doc = tmp_path / "doc.txt"
        doc.write_text("x")
        assert run_cli("scan", str(doc), "--dict", str(bad)) == 2

    def test_json_output_round_trips(self, tmp_path, seed_dict_path):
        doc = tmp_path / "doc.txt"
        doc.write_text("Fake  Neural—Organization appears twice: "
                       "fake neural organization.")
        out = tmp_path / "reports.jsonl"
        run_cli("scan", str(doc), "--dict", str(seed_dict_path),
                "--format", "json", "--out", str(out))
        reports = [json.loads(l) for l in out.read_text().splitlines()]
        (report,) = reports
        assert len(report["hits"]) == 2
        for hit in report["hits"]:
            text = doc.read_text()
            assert text[hit["start"]:hit["end"]] == hit["matched_surface"]

    def test_csv_output_round_trips(self, tmp_path, seed_dict_path):
        doc1 = tmp_path / "doc1.txt"
        doc1.write_text("a fake neural organization here")
        doc2 = tmp_path / "doc2.txt"
        doc2.write_text("clean")
        out = tmp_path / "reports.csv"
        run_cli("scan", str(doc1), str(doc2), "--dict", str(seed_dict_path),
                "--format", "csv", "--out", str(out))

        with open(out, newline="", encoding="utf-8") as handle:
            rows = list(csv.DictReader(handle))
        by_doc: dict[str, list[dict]] = {}
        for row in rows:
            by_doc.setdefault(row["paper_id"], []).append(row)
        hit_rows = [r for r in by_doc[str(doc1)] if r["fingerprint_id"]]
        assert len(hit_rows) == 1
        assert hit_rows[0]["matched_surface"] == "fake neural organization"
        assert hit_rows[0]["expected_phrase"] == "artificial neural network"
        assert int(hit_rows[0]["start"]) == 2
        # zero-hit documents still appear, with empty hit columns
        assert [r["fingerprint_id"] for r in by_doc[str(doc2)]] == [""]

    def test_text_format_mentions_expected_phrase(self, tmp_path, seed_dict_path, capsys):
        doc = tmp_path / "doc.txt"
        doc.write_text("a fake neural organization")
        run_cli("scan", str(doc), "--dict", str(seed_dict_path), "--format", "text")
        out = capsys.readouterr().out
        assert "1 hit(s)" in out
        assert "artificial neural network" in out

    def test_deterministic_ordering_follows_input_order(self, tmp_path, seed_dict_path, capsys):
        docs = []
        for name in ("z.txt", "a.txt"):
            path = tmp_path / name
            path.write_text("fake neural organization")
            docs.append(str(path))
        run_cli("scan", *docs, "--dict", str(seed_dict_path))
        reports = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
        assert [r["paper_id"] for r in reports] == docs


class TestValidators:
    def test_seed_dictionary_is_valid(self, seed_dict_path, capsys):
        assert run_cli("dict-validate", str(seed_dict_path)) == 0
        assert "ok:" in capsys.readouterr().out

    def test_duplicate_pattern_exits_two_with_line_numbers(self, tmp_path, capsys):
        path = tmp_path / "dup.txt"
        path.write_text(
            "ppsdict v1\nscigen\talpha beta\t\tx\nscigen\talpha beta\t\ty\n"
        )
        assert run_cli("dict-validate", str(path)) == 2
        err = capsys.readouterr().err
        assert "line 2" in err and "line 3" in err

    def test_demo_grammar_is_valid(self, capsys):
        assert run_cli("gram-validate", str(DEMO_GRAMMAR)) == 0

    def test_unproductive_grammar_exits_two_with_witness(self, tmp_path, capsys):
        path = tmp_path / "cyclic.txt"
        path.write_text("ppsgram v1\nS -> 1 : A\nA -> 1 : S\n")
        assert run_cli("gram-validate", str(path)) == 2
        assert "->" in capsys.readouterr().err


class TestGenerate:
    def test_zero_documents(self, tmp_path, capsys):
        out = tmp_path / "corpus.jsonl"
        assert run_cli("generate", "--grammar", str(DEMO_GRAMMAR),
                       "--n", "0", "--seed", "1", "--out", str(out)) == 0
        assert out.read_text() == ""

    def test_same_seed_is_byte_identical(self, tmp_path):
        out1 = tmp_path / "c1.jsonl"
        out2 = tmp_path / "c2.jsonl"
        for out in (out1, out2):
            run_cli("generate", "--grammar", str(DEMO_GRAMMAR),
                    "--n", "50", "--seed", "7", "--out", str(out))
        assert out1.read_bytes() == out2.read_bytes()

    def test_generated_corpus_is_loadable(self, tmp_path):
        out = tmp_path / "corpus.jsonl"
        run_cli("generate", "--grammar", str(DEMO_GRAMMAR),
                "--n", "10", "--seed", "3", "--out", str(out))
        records = read_corpus(out)
        assert len(records) == 10
        assert all(r["full_text"] for r in records)


def write_config(tmp_path: Path, seed_dict_path: Path, corpus: Path) -> Path:
    config = {
        "listen": "127.0.0.1:0",
        "store_path": str(tmp_path / "ledger.jsonl"),
        "dictionary_path": str(seed_dict_path),
        "harvest": {"interval_seconds": 0.05, "allow_short_interval": True},
        "search_client": {"kind": "local", "corpus_path": str(corpus)},
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config, indent=2))
    return path


@pytest.fixture
def fixture_config(tmp_path, seed_dict_path) -> Path:
    corpus = tmp_path / "corpus.jsonl"
    records = [
        {"external_id": "d1", "doi": "10.1/a",
         "full_text": "a fake neural organization inside"},
        {"external_id": "d2", "full_text": "spotless text"},
    ]
    corpus.write_text("".join(json.dumps(r) + "\n" for r in records))
    return write_config(tmp_path, seed_dict_path, corpus)


class TestHarvestAndStats:
    def test_harvest_once_prints_run_summary(self, fixture_config, tmp_path, capsys):
        assert run_cli("harvest", "--config", str(fixture_config), "--once") == 0
        run = json.loads(capsys.readouterr().out)
        assert run["new_suspects"] == 1
        assert run["errors"] == []
        with LedgerStore(tmp_path / "ledger.jsonl") as store:
            assert len(store.papers()) == 1

    def test_stats_reports_ledger_numbers(self, fixture_config, capsys):
        run_cli("harvest", "--config", str(fixture_config), "--once")
        capsys.readouterr()
        assert run_cli("stats", "--config", str(fixture_config)) == 0
        stats = json.loads(capsys.readouterr().out)
        assert stats["total_suspects"] == 1
        assert stats["awaiting"] == 1
        assert stats["per_category_counts"]["tortured"] == 1

    def test_stats_at_fixture_ledger_scale(self, tmp_path, seed_dict_path, capsys):
        from datetime import datetime, timezone

        from paperscreen.model import PaperRecord, Verdict

        corpus = tmp_path / "corpus.jsonl"
        corpus.write_text("")
        config_path = write_config(tmp_path, seed_dict_path, corpus)
        t0 = datetime(2021, 10, 1, tzinfo=timezone.utc)
        with LedgerStore(tmp_path / "ledger.jsonl") as store:
            store.upsert_papers(
                PaperRecord(paper_id=f"p{i:06d}", external_id=f"x{i}", first_seen=t0)
                for i in range(2088)
            )
            store.add_assessments(
                (f"p{i:06d}", Verdict.PROBLEMATIC, "assessor", None)
                for i in range(744)
            )
        assert run_cli("stats", "--config", str(config_path)) == 0
        stats = json.loads(capsys.readouterr().out)
        assert stats["total_suspects"] == 2088
        assert stats["assessed"] == 744
        assert stats["awaiting"] == 1344

    def test_interval_floor_enforced_without_flag(self, tmp_path, seed_dict_path, capsys):
        corpus = tmp_path / "corpus.jsonl"
        corpus.write_text("")
        config = {
            "store_path": str(tmp_path / "ledger.jsonl"),
            "dictionary_path": str(seed_dict_path),
            "harvest": {"interval_seconds": 1},
            "search_client": {"kind": "local", "corpus_path": str(corpus)},
        }
        path = tmp_path / "config.json"
        path.write_text(json.dumps(config))
        assert run_cli("harvest", "--config", str(path), "--once") == 2
        assert "allow_short_interval" in capsys.readouterr().err


def test_usage_error_exits_two():
    with pytest.raises(SystemExit) as err:
        main(["scan"])  # missing --dict and inputs
    assert err.value.code == 2


SUBPROCESS_ENV = {
    **os.environ,
    "PYTHONPATH": str(REPO_ROOT / "src"),
}


class TestSubprocess:
    def test_serve_answers_healthz_and_stops_on_sigint(self, fixture_config, tmp_path):
        config = json.loads(fixture_config.read_text())
        config["listen"] = "127.0.0.1:18571"
        fixture_config.write_text(json.dumps(config))
        process = subprocess.Popen(
            [sys.executable, "-m", "paperscreen", "serve",
             "--config", str(fixture_config)],
            env=SUBPROCESS_ENV,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
        )
        try:
            deadline = time.monotonic() + 10
            status = None
            while time.monotonic() < deadline:
                try:
                    with urllib.request.urlopen(
                        "http://127.0.0.1:18571/api/healthz", timeout=1
                    ) as response:
                        status = response.status
                        break
                except OSError:
                    time.sleep(0.1)
            assert status == 200
        finally:
            process.send_signal(signal.SIGINT)
            assert process.wait(timeout=10) == 0

    def test_harvest_loop_runs_until_interrupted(self, fixture_config):
        process = subprocess.Popen(
            [sys.executable, "-m", "paperscreen", "harvest",
             "--config", str(fixture_config), "--loop"],
            env=SUBPROCESS_ENV,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
        )
        try:
            time.sleep(1.5)
        finally:
            process.send_signal(signal.SIGINT)
            out, _ = process.communicate(timeout=10)
        assert process.returncode == 0
        runs = [json.loads(line) for line in out.strip().splitlines() if line]
        assert len(runs) >= 1
        assert runs[0]["new_suspects"] == 1
        if len(runs) > 1:
            assert runs[1]["new_suspects"] == 0  # idempotent re-harvest
