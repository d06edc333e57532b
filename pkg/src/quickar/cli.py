"""Command-line entry point: build-db, index, search, reformulate, evaluate.

Every subcommand is a pure function of its inputs and configuration:
re-running any of them reproduces byte-identical artifacts, whatever the
worker count. Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import configparser
import itertools
import json
import logging
import sys
from dataclasses import dataclass

from . import __version__, adjacency, corpus as corpus_mod, evaluate as eval_mod
from .errors import DataError, QuickarError
from .nouns import default_noun_oracle
from .reformulate import MODES, MODE_ALL, MODE_REDUCE, QueryRecord, reformulate
from .rocchio import RocchioConfig, rocchio_expand
from .search import searcher_for
from .textprep import SPLIT_AND_KEEP_WHOLE, load_language_keywords, load_stoplist, preprocess
from .util import map_ordered

log = logging.getLogger("quickar")

USAGE_ERROR = 1
DATA_ERROR = 2


@dataclass
class Config:
    """Shared tool configuration; flags override file values override these
    defaults (window 2, top 5 documents, top 5 candidates, 10-term budget)."""

    stoplist_path: str | None = None
    keywords_path: str | None = None
    window: int = adjacency.DEFAULT_WINDOW
    top_docs: int = 5
    top_k: int = 5
    query_budget: int = 10
    mode: str = MODE_ALL

    def validate(self) -> None:
        if self.window < 2:
            raise DataError(f"window must be >= 2, got {self.window}")
        if min(self.top_docs, self.top_k, self.query_budget) < 1:
            raise DataError("top_docs, top_k and query_budget must be >= 1")
        if self.mode not in MODES:
            raise DataError(f"mode must be one of {MODES}, got {self.mode!r}")


def load_config(path: str | None) -> Config:
    cfg = Config()
    if path is None:
        return cfg
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise DataError(f"config file not found: {path}")
    if not parser.has_section("quickar"):
        raise DataError(f"{path}: missing [quickar] section")
    section = parser["quickar"]
    cfg.stoplist_path = section.get("stoplist_path", cfg.stoplist_path)
    cfg.keywords_path = section.get("keywords_path", cfg.keywords_path)
    cfg.window = section.getint("window", cfg.window)
    cfg.top_docs = section.getint("top_docs", cfg.top_docs)
    cfg.top_k = section.getint("top_k", cfg.top_k)
    cfg.query_budget = section.getint("query_budget", cfg.query_budget)
    cfg.mode = section.get("mode", cfg.mode)
    return cfg


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this tool reserves 2 for data
    errors, so remap."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> _Parser:
    parser = _Parser(prog="quickar",
                     description="Crowd-assisted query reformulation for code search.")
    parser.add_argument("--version", action="version", version=f"quickar {__version__}")
    parser.add_argument("--config", metavar="FILE",
                        help="INI config file with a [quickar] section")
    parser.add_argument("-v", "--verbose", action="store_true", help="log warnings and info")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("build-db", help="build the word adjacency database from a title dump")
    p.add_argument("--dump", required=True, metavar="TSV",
                   help="title dump: question_id<TAB>title<TAB>tag1;tag2;...")
    p.add_argument("--tag", default="java", help="keep only titles carrying this tag")
    p.add_argument("--out", required=True, metavar="FILE")
    p.add_argument("--window", type=int, default=None, help="sliding window size (default 2)")
    p.add_argument("--limit", type=int, default=None, metavar="N",
                   help="use only the first N tag-filtered titles")
    p.add_argument("--stoplist", default=None, metavar="FILE")
    p.add_argument("--binary", action="store_true",
                   help="count each word pair at most once per title")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("index", help="index a source tree into a method-level corpus")
    p.add_argument("--src", metavar="DIR", help="source tree to split into methods")
    p.add_argument("--pre-split", dest="pre_split", metavar="DIR",
                   help="directory of one-document-per-file text (bypasses the splitter)")
    p.add_argument("--out", required=True, metavar="FILE")
    p.add_argument("--keywords", default=None, metavar="FILE",
                   help="language keyword list to remove (default: bundled Java list)")
    p.add_argument("--stoplist", default=None, metavar="FILE")
    p.add_argument("--ext", action="append", default=None, metavar=".java",
                   help="source extension to index (repeatable, default .java)")
    p.add_argument("--strip-comments", action="store_true")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("search", help="run a TF-IDF cosine search against an index")
    p.add_argument("--index", required=True, metavar="FILE")
    p.add_argument("--query", required=True)
    p.add_argument("--top", type=int, default=10, metavar="N")
    p.add_argument("--stoplist", default=None, metavar="FILE")

    p = sub.add_parser("reformulate", help="suggest reformulations for one query")
    p.add_argument("--index", required=True, metavar="FILE")
    p.add_argument("--db", required=True, metavar="FILE")
    p.add_argument("--query", required=True, help="change-request title")
    p.add_argument("--mode", choices=MODES, default=None)
    p.add_argument("--strategy", choices=("quickar", "rocchio"), default="quickar")
    p.add_argument("--stoplist", default=None, metavar="FILE")
    p.add_argument("--json", action="store_true", dest="as_json")

    p = sub.add_parser("evaluate", help="run the batch evaluation harness")
    p.add_argument("--index", required=True, metavar="FILE")
    p.add_argument("--db", required=True, metavar="FILE")
    p.add_argument("--queries", required=True, metavar="TSV",
                   help="query_id<TAB>title<TAB>gold_doc1;gold_doc2;...")
    p.add_argument("--strategies", default=",".join(eval_mod.STRATEGIES),
                   help="comma-separated subset of: " + ",".join(eval_mod.STRATEGIES))
    p.add_argument("--strict", action="store_true",
                   help="exclude unretrieved queries from bucket percentages")
    p.add_argument("--stoplist", default=None, metavar="FILE")
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--jobs", type=int, default=1)
    return parser


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_build_db(args, cfg: Config) -> int:
    stops = load_stoplist(args.stoplist or cfg.stoplist_path)
    window = args.window if args.window is not None else cfg.window
    if window < 2:
        raise DataError(f"window must be >= 2, got {window}")
    stats = adjacency.DumpStats()
    records = adjacency.filter_titles(adjacency.read_title_dump(args.dump, stats), args.tag)
    if args.limit is not None:
        records = itertools.islice(records, args.limit)
    titles = list(records)
    source = f"{_basename(args.dump)}:{args.tag}"

    jobs = max(1, args.jobs)
    if jobs == 1 or len(titles) < 2 * jobs:
        db = adjacency.build(titles, stops, window=window, source=source, binary=args.binary)
    else:
        chunk = (len(titles) + jobs - 1) // jobs
        parts = [titles[i:i + chunk] for i in range(0, len(titles), chunk)]
        built = map_ordered(
            lambda part: adjacency.build(part, stops, window=window,
                                         source=source, binary=args.binary),
            parts, jobs)
        db = adjacency.merge(built)
    adjacency.save(db, args.out)
    if stats.malformed:
        print(f"warning: skipped {stats.malformed} malformed record(s)", file=sys.stderr)
    print(f"adjacency database: {len(titles)} titles, {db.vocab_size} words, "
          f"{db.total_pair_count} pairs -> {args.out}")
    return 0


def _cmd_index(args, cfg: Config) -> int:
    if bool(args.src) == bool(args.pre_split):
        raise DataError("exactly one of --src or --pre-split is required")
    stops = load_stoplist(args.stoplist or cfg.stoplist_path)
    keywords = load_language_keywords(args.keywords or cfg.keywords_path)
    stats = corpus_mod.IngestStats()
    jobs = max(1, args.jobs)
    if args.pre_split:
        built = corpus_mod.build_corpus_presplit(args.pre_split, stops, keywords,
                                                 jobs=jobs, stats=stats)
    else:
        extensions = tuple(args.ext) if args.ext else corpus_mod.DEFAULT_EXTENSIONS
        built = corpus_mod.build_corpus(args.src, stops, keywords, extensions=extensions,
                                        strip_comments=args.strip_comments,
                                        jobs=jobs, stats=stats)
    corpus_mod.save(built, args.out)
    if stats.skipped:
        print(f"warning: skipped {stats.skipped} unreadable file(s)", file=sys.stderr)
    print(f"corpus: {stats.files} files, {built.n_docs} documents, "
          f"{len(built.doc_freq)} terms -> {args.out}")
    return 0


def _cmd_search(args, cfg: Config) -> int:
    stops = load_stoplist(args.stoplist or cfg.stoplist_path)
    index = corpus_mod.load(args.index)
    terms = preprocess(args.query, stops, SPLIT_AND_KEEP_WHOLE)
    hits = searcher_for(index).search(terms, top_n=args.top)
    for hit in hits:
        print(f"{hit.rank}\t{hit.doc_id}\t{hit.score:.6f}")
    return 0


def _warn_meta_mismatch(db_meta, corpus_meta, stops) -> None:
    if db_meta.stoplist_sha and corpus_meta.stoplist_sha \
            and db_meta.stoplist_sha != corpus_meta.stoplist_sha:
        print("warning: adjacency database and index were built with different "
              "stop lists", file=sys.stderr)
    if stops.sha not in (db_meta.stoplist_sha, ""):
        if db_meta.stoplist_sha and stops.sha != db_meta.stoplist_sha:
            print("warning: active stop list differs from the one the adjacency "
                  "database was built with", file=sys.stderr)


def _cmd_reformulate(args, cfg: Config) -> int:
    stops = load_stoplist(args.stoplist or cfg.stoplist_path)
    index = corpus_mod.load(args.index)
    db = adjacency.load(args.db)
    _warn_meta_mismatch(db.meta, index.meta, stops)
    oracle = default_noun_oracle()
    query = QueryRecord(query_id="cli", text=args.query)
    mode = args.mode if args.mode is not None else cfg.mode

    if args.strategy == "rocchio":
        ref = rocchio_expand(query, index,
                             RocchioConfig(top_docs=cfg.top_docs, budget=cfg.query_budget),
                             stops=stops)
    else:
        ref = reformulate(query, index, db, mode=mode, stops=stops, oracle=oracle,
                          top_docs=cfg.top_docs, top_k=cfg.top_k,
                          budget=cfg.query_budget)

    if args.as_json:
        payload = {
            "query": args.query,
            "strategy": args.strategy,
            "mode": ref.mode,
            "reduced_keywords": [
                {"term": t.normalized, "surface": t.surface} for t in ref.reduced_keywords
            ],
            "expansion_terms": [
                {"term": c.term, "surface": c.surface, "source": c.source, "score": c.score}
                for c in ref.expansion_terms
            ],
            "reduced_query": ref.reduced_query_text(),
            "rendered_query": ref.query_text(),
        }
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(f"reduced query : {ref.reduced_query_text()}")
        if ref.mode != MODE_REDUCE:
            print(f"expanded query: {ref.query_text()}")
            if ref.expansion_terms:
                print("expansion terms:")
                for c in ref.expansion_terms:
                    print(f"  {c.surface:<24}{c.source:<10}{c.score:.4f}")
    return 0


def _cmd_evaluate(args, cfg: Config) -> int:
    stops = load_stoplist(args.stoplist or cfg.stoplist_path)
    index = corpus_mod.load(args.index)
    db = adjacency.load(args.db)
    _warn_meta_mismatch(db.meta, index.meta, stops)
    strategies = tuple(s.strip() for s in args.strategies.split(",") if s.strip())
    unknown = [s for s in strategies if s not in eval_mod.STRATEGIES]
    if unknown:
        raise DataError(f"unknown strategies: {', '.join(unknown)}")
    queries = eval_mod.parse_queries_tsv(args.queries)
    run_cfg = eval_mod.EvalConfig(top_docs=cfg.top_docs, top_k=cfg.top_k,
                                  budget=cfg.query_budget, strict=args.strict,
                                  jobs=max(1, args.jobs))
    report = eval_mod.run_evaluation(queries, index, db, strategies,
                                     stops=stops, oracle=default_noun_oracle(),
                                     cfg=run_cfg)
    text_path, json_path = eval_mod.emit_report(report, args.out)
    print(eval_mod.render_report_text(report))
    print(f"report written to {text_path} and {json_path}")
    return 0


_COMMANDS = {
    "build-db": _cmd_build_db,
    "index": _cmd_index,
    "search": _cmd_search,
    "reformulate": _cmd_reformulate,
    "evaluate": _cmd_evaluate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command is None:
        parser.print_help()
        return USAGE_ERROR
    try:
        cfg = load_config(args.config)
        cfg.validate()
        return _COMMANDS[args.command](args, cfg)
    except QuickarError as exc:
        print(f"quickar {args.command}: error: {exc}", file=sys.stderr)
        return DATA_ERROR


def _basename(path: str) -> str:
    from pathlib import Path
    return Path(path).name


if __name__ == "__main__":
    sys.exit(main())
