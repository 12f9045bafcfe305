"""Operator command line.

    paperscreen scan DOC... --dict PATH [--format json|csv|text] [--out FILE]
    paperscreen dict-validate PATH
    paperscreen gram-validate PATH
    paperscreen generate --grammar PATH --n N --seed S [--out FILE]
    paperscreen harvest --config PATH (--once | --loop)
    paperscreen serve --config PATH
    paperscreen stats --config PATH

Exit status: 0 success; 1 scan found hits; 2 usage or validation error;
3 runtime error (for scan: only when every input failed).

The json and csv scan formats are stable, machine-readable contracts and
round-trip losslessly; the text format is for humans and may change.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

from . import config as config_mod
from .detect import DetectionReport, Detector
from .dictionary import load_dictionary_file
from .errors import (
    ConfigError,
    DictionaryError,
    GrammarError,
    RequestError,
    ScreenerError,
)
from .grammar import generate, load_grammar_file
from .harvest import HarvestScheduler, harvest_once
from .search import read_corpus, write_corpus
from .service import Api, create_server, run_server

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_USAGE = 2
EXIT_RUNTIME = 3

USAGE_ERRORS = (ConfigError, DictionaryError, GrammarError, RequestError)


# ---------------------------------------------------------------------------
# scan

def _collect_inputs(paths: list[str]) -> tuple[list[Path], list[tuple[str, str]]]:
    """Expand directories (non-recursive, sorted); report missing paths."""
    files: list[Path] = []
    errors: list[tuple[str, str]] = []
    for raw in paths:
        path = Path(raw)
        if path.is_dir():
            files.extend(
                sorted(p for p in path.iterdir() if p.is_file())
            )
        elif path.is_file():
            files.append(path)
        else:
            errors.append((raw, "no such file or directory"))
    return files, errors


def _iter_documents(path: Path):
    """Yield (doc_id, text) pairs for one input file."""
    if path.suffix == ".jsonl":
        for record in read_corpus(path):
            yield record["external_id"], record.get("full_text") or ""
    else:
        yield str(path), path.read_text(encoding="utf-8")


def _report_to_json(report: DetectionReport, detector: Detector) -> dict:
    hits = []
    for hit in report.hits:
        explanation = detector.explain(hit)
        hits.append(
            {
                "fingerprint_id": hit.fingerprint_id,
                "category": explanation.category.value,
                "pattern": explanation.pattern,
                "expected_phrase": explanation.expected_phrase,
                "start": hit.start,
                "end": hit.end,
                "matched_surface": hit.matched_surface,
                "snippet": hit.snippet,
            }
        )
    return {
        "paper_id": report.paper_id,
        "dictionary_version": report.dictionary_version,
        "categories_triggered": sorted(c.value for c in report.categories_triggered),
        "hits": hits,
    }

CSV_COLUMNS = [
    "paper_id", "dictionary_version", "fingerprint_id", "category", "pattern",
    "expected_phrase", "start", "end", "matched_surface", "snippet",
]


class _ReportWriter:
    def __init__(self, fmt: str, out: io.TextIOBase):
        self.fmt = fmt
        self.out = out
        self._csv = None
        if fmt == "csv":
            self._csv = csv.DictWriter(out, fieldnames=CSV_COLUMNS + ["error"])
            self._csv.writeheader()

    def report(self, data: dict) -> None:
        if self.fmt == "json":
            self.out.write(json.dumps(data, ensure_ascii=False) + "\n")
        elif self.fmt == "csv":
            base = {
                "paper_id": data["paper_id"],
                "dictionary_version": data["dictionary_version"],
                "error": "",
            }
            if not data["hits"]:
                self._csv.writerow(base)
            for hit in data["hits"]:
                row = dict(base)
                row.update(
                    {k: ("" if hit[k] is None else hit[k]) for k in hit}
                )
                self._csv.writerow(row)
        else:
            hits = data["hits"]
            self.out.write(f"{data['paper_id']}: {len(hits)} hit(s)\n")
            for hit in hits:
                line = (
                    f"  [{hit['category']}] {hit['matched_surface']!r} "
                    f"at {hit['start']}..{hit['end']}"
                )
                if hit["expected_phrase"]:
                    line += f" (expected: {hit['expected_phrase']!r})"
                self.out.write(line + "\n")

    def error(self, doc_id: str, message: str) -> None:
        if self.fmt == "json":
            self.out.write(
                json.dumps({"paper_id": doc_id, "error": message}) + "\n"
            )
        elif self.fmt == "csv":
            self._csv.writerow({"paper_id": doc_id, "error": message})
        else:
            self.out.write(f"{doc_id}: ERROR {message}\n")


def cmd_scan(args: argparse.Namespace) -> int:
    try:
        dictionary = load_dictionary_file(args.dict)
    except (OSError, DictionaryError) as exc:
        print(f"error: cannot load dictionary: {exc}", file=sys.stderr)
        return EXIT_USAGE
    detector = Detector(dictionary)

    files, path_errors = _collect_inputs(args.inputs)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    writer = _ReportWriter(args.format, out)
    try:
        for doc_id, message in path_errors:
            writer.error(doc_id, message)
        any_hits = False
        scanned = 0
        failed = len(path_errors)
        for path in files:
            try:
                documents = list(_iter_documents(path))
            except (OSError, RequestError, UnicodeDecodeError) as exc:
                writer.error(str(path), str(exc))
                failed += 1
                continue
            for doc_id, text in documents:
                report = detector.detect(text, paper_id=doc_id)
                writer.report(_report_to_json(report, detector))
                scanned += 1
                if report.hits:
                    any_hits = True
    finally:
        if args.out:
            out.close()

    if failed and scanned == 0:
        return EXIT_RUNTIME
    return EXIT_FINDINGS if any_hits else EXIT_OK


# ---------------------------------------------------------------------------
# validators

def cmd_dict_validate(args: argparse.Namespace) -> int:
    try:
        dictionary = load_dictionary_file(args.path)
    except (OSError, DictionaryError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"ok: {len(dictionary.fingerprints)} fingerprints")
    return EXIT_OK


def cmd_gram_validate(args: argparse.Namespace) -> int:
    try:
        grammar = load_grammar_file(args.path)
    except (OSError, GrammarError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(
        f"ok: start={grammar.start} nonterminals={len(grammar.order)} "
        f"terminals={len(grammar.terminals)}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# generation

def cmd_generate(args: argparse.Namespace) -> int:
    grammar = load_grammar_file(args.grammar)
    import random as random_mod

    master = random_mod.Random(args.seed)
    records = []
    for i in range(args.n):
        text = generate(grammar, master.getrandbits(63), args.max_depth)
        records.append(
            {
                "external_id": f"gen-{args.seed}-{i:05d}",
                "title": f"generated document {i:05d}",
                "full_text": text,
            }
        )
    if args.out:
        count = write_corpus(args.out, records)
    else:
        count = 0
        for record in records:
            sys.stdout.write(json.dumps(record, ensure_ascii=False) + "\n")
            count += 1
    print(f"generated {count} documents", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# harvest / serve / stats

def cmd_harvest(args: argparse.Namespace) -> int:
    cfg = config_mod.load_config(args.config)
    client = config_mod.build_search_client(cfg)
    with config_mod.open_store(cfg) as store:
        if args.once:
            run = harvest_once(
                client,
                store.current_dictionary(),
                store,
                allowlist=cfg.harvest.allowlist,
            )
            print(json.dumps(run.to_dict(), indent=2))
            return EXIT_OK

        scheduler = HarvestScheduler(
            lambda: harvest_once(
                client,
                store.current_dictionary(),
                store,
                allowlist=cfg.harvest.allowlist,
            ),
            interval=cfg.harvest.interval_seconds,
            failure_threshold=cfg.harvest.failure_threshold,
        )
        scheduler.start()
        print(
            f"harvesting every {cfg.harvest.interval_seconds:.0f}s; ctrl-c to stop",
            file=sys.stderr,
        )
        reported = 0
        try:
            while True:
                time.sleep(0.2)
                while reported < len(scheduler.runs):
                    print(json.dumps(scheduler.runs[reported].to_dict()))
                    reported += 1
                if scheduler.paused:
                    alert = scheduler.alert
                    print(
                        f"error: harvesting paused after "
                        f"{alert.consecutive_failures} consecutive failures: "
                        f"{alert.last_error}",
                        file=sys.stderr,
                    )
                    return EXIT_RUNTIME
        except KeyboardInterrupt:
            pass
        finally:
            scheduler.stop()
        return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    cfg = config_mod.load_config(args.config)
    with config_mod.open_store(cfg) as store:
        api = Api(store)
        server = create_server(
            api,
            cfg.listen_host,
            cfg.listen_port,
            write_rate_limit_per_minute=cfg.write_rate_limit_per_minute,
        )
        host, port = server.server_address[:2]
        print(f"listening on http://{host}:{port}", file=sys.stderr)
        try:
            run_server(server)
        except KeyboardInterrupt:
            server.server_close()
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    cfg = config_mod.load_config(args.config)
    with config_mod.open_store(cfg) as store:
        stats = store.stats()
    print(
        json.dumps(
            {
                "total_suspects": stats.total_suspects,
                "awaiting": stats.awaiting,
                "assessed": stats.assessed,
                "assessed_problematic": stats.assessed_problematic,
                "assessed_not_problematic": stats.assessed_not_problematic,
                "assessed_unsure": stats.assessed_unsure,
                "per_category_counts": {
                    category.value: count
                    for category, count in stats.per_category_counts.items()
                },
            },
            indent=2,
        )
    )
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paperscreen",
        description="Screen scholarly full text for generator fragments "
        "and tortured phrases.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    scan = sub.add_parser("scan", help="scan text files or JSONL corpora")
    scan.add_argument("inputs", nargs="+", help="text files, .jsonl corpora, or directories")
    scan.add_argument("--dict", required=True, help="fingerprint dictionary file")
    scan.add_argument("--format", choices=["json", "csv", "text"], default="json")
    scan.add_argument("--out", help="write reports here instead of stdout")
    scan.set_defaults(func=cmd_scan)

    dict_validate = sub.add_parser("dict-validate", help="check a dictionary file")
    dict_validate.add_argument("path")
    dict_validate.set_defaults(func=cmd_dict_validate)

    gram_validate = sub.add_parser("gram-validate", help="check a grammar file")
    gram_validate.add_argument("path")
    gram_validate.set_defaults(func=cmd_gram_validate)

    gen = sub.add_parser("generate", help="sample a decoy corpus from a grammar")
    gen.add_argument("--grammar", required=True)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--max-depth", type=int, default=20)
    gen.add_argument("--out", help="write JSONL here instead of stdout")
    gen.set_defaults(func=cmd_generate)

    harvest = sub.add_parser("harvest", help="run fingerprint queries against the index")
    harvest.add_argument("--config", required=True)
    mode = harvest.add_mutually_exclusive_group(required=True)
    mode.add_argument("--once", action="store_true")
    mode.add_argument("--loop", action="store_true")
    harvest.set_defaults(func=cmd_harvest)

    serve = sub.add_parser("serve", help="run the assessment REST service")
    serve.add_argument("--config", required=True)
    serve.set_defaults(func=cmd_serve)

    stats = sub.add_parser("stats", help="print ledger statistics as JSON")
    stats.add_argument("--config", required=True)
    stats.set_defaults(func=cmd_stats)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ScreenerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main_entry() -> None:
    sys.exit(main())
