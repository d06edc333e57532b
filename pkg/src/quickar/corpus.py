"""Method-level source corpus: splitting, preprocessing, statistics, storage.

Each source file is decomposed into method-like units by a lightweight
brace-matching splitter; every unit becomes one document. Files the splitter
cannot handle contribute a single whole-file document, so no file is ever
silently dropped.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .errors import CorruptFileError, DataError
from .textprep import SPLIT_AND_KEEP_WHOLE, StopList, TermSequence, preprocess, words_sha
from .util import map_ordered

log = logging.getLogger(__name__)

DEFAULT_EXTENSIONS = (".java",)

# Keywords that look like `name (...) {` but never open a method body.
_CONTROL_WORDS = frozenset({
    "if", "else", "for", "while", "do", "switch", "case", "catch", "try",
    "finally", "synchronized", "return", "throw", "new", "assert", "break",
    "continue", "default", "instanceof", "yield",
})

_SIGNATURE_RE = re.compile(r"([A-Za-z_$][A-Za-z0-9_$]*)\s*\(")
_WORD_TAIL_RE = re.compile(r"([A-Za-z_$][A-Za-z0-9_$]*)\s*$")

# Characters that may not directly precede a method name (call chains,
# operators, annotations). `>` stays legal: generic return types end with it.
_BAD_PRECEDERS = ".@=!&|+-*/%,([~^"

# `new Name() {` opens an anonymous class, `record Name(...) {` a type body.
_BAD_PRECEDING_WORDS = frozenset({"new", "record"})


class UnbalancedBraces(Exception):
    """Raised internally when a file's braces do not balance."""


@dataclass(frozen=True)
class MethodUnit:
    """One extracted unit: signature plus balanced-brace body text."""

    name: str
    text: str
    whole_file: bool = False


def _mask_comments_and_strings(text: str) -> tuple[str, str]:
    """Return (scan_text, no_comment_text), both the same length as `text`.

    scan_text blanks comments and string/char literals so brace and paren
    matching cannot be fooled; no_comment_text blanks only comments, for the
    optional strip-comments extraction mode.
    """
    scan = list(text)
    nocom = list(text)
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == "/" and i + 1 < n and text[i + 1] == "/":
            j = i
            while j < n and text[j] != "\n":
                scan[j] = " "
                nocom[j] = " "
                j += 1
            i = j
        elif c == "/" and i + 1 < n and text[i + 1] == "*":
            j = i + 2
            while j < n and not (text[j] == "*" and j + 1 < n and text[j + 1] == "/"):
                j += 1
            end = min(n, j + 2)
            for k in range(i, end):
                if text[k] != "\n":
                    scan[k] = " "
                    nocom[k] = " "
            i = end
        elif c in "\"'":
            quote = c
            j = i + 1
            while j < n and text[j] != quote:
                if text[j] == "\\":
                    j += 1
                j += 1
            end = min(n, j + 1)
            for k in range(i + 1, min(j, n)):
                if text[k] != "\n":
                    scan[k] = " "
            i = end
        else:
            i += 1
    return "".join(scan), "".join(nocom)


def _check_balanced(scan: str) -> None:
    depth = 0
    for c in scan:
        if c == "{":
            depth += 1
        elif c == "}":
            depth -= 1
            if depth < 0:
                raise UnbalancedBraces("closing brace without opener")
    if depth != 0:
        raise UnbalancedBraces(f"{depth} unclosed brace(s)")


def _depth_before(scan: str) -> list[int]:
    """depths[i] = brace depth immediately before scan[i]."""
    depths = [0] * (len(scan) + 1)
    d = 0
    for i, c in enumerate(scan):
        depths[i] = d
        if c == "{":
            d += 1
        elif c == "}":
            d -= 1
    depths[len(scan)] = d
    return depths


def _matching_brace(scan: str, open_idx: int) -> int:
    depth = 0
    for i in range(open_idx, len(scan)):
        if scan[i] == "{":
            depth += 1
        elif scan[i] == "}":
            depth -= 1
            if depth == 0:
                return i
    raise UnbalancedBraces("unterminated body")


def _closing_paren(scan: str, open_idx: int) -> int:
    depth = 0
    for i in range(open_idx, len(scan)):
        if scan[i] == "(":
            depth += 1
        elif scan[i] == ")":
            depth -= 1
            if depth == 0:
                return i
    raise UnbalancedBraces("unterminated parameter list")


def _body_open_after_params(scan: str, close_paren: int) -> int | None:
    """Index of the `{` opening the body, allowing a throws clause; None if
    this is not a method declaration."""
    i = close_paren + 1
    n = len(scan)
    while i < n and scan[i].isspace():
        i += 1
    if scan[i:i + 6] == "throws" and (i + 6 == n or not (scan[i + 6].isalnum() or scan[i + 6] in "_$")):
        i += 6
        while i < n and scan[i] not in "{;":
            i += 1
    if i < n and scan[i] == "{":
        return i
    return None


def split_methods(text: str, fallback_name: str = "file") -> list[MethodUnit]:
    """Split one curly-brace-language source file into method-like units.

    A unit starts at an identifier followed by a parameter list and an
    opening brace, sitting at class-body depth; its text runs from the
    previous statement boundary through the balanced closing brace (so
    modifiers, annotations and the signature are included). Files with no
    matches, or with unbalanced braces, yield one whole-file unit.
    """
    scan, _ = _mask_comments_and_strings(text)
    try:
        _check_balanced(scan)
    except UnbalancedBraces as exc:
        log.warning("unbalanced braces (%s); indexing whole file", exc)
        return [MethodUnit(name=fallback_name, text=text, whole_file=True)]

    depths = _depth_before(scan)
    units: list[MethodUnit] = []
    cursor = 0
    for match in _SIGNATURE_RE.finditer(scan):
        if match.start() < cursor:
            continue
        name = match.group(1)
        if name in _CONTROL_WORDS:
            continue
        if depths[match.start()] < 1:
            continue
        before = scan[:match.start()].rstrip()
        if before and before[-1] in _BAD_PRECEDERS:
            continue
        prev_word = _WORD_TAIL_RE.search(before)
        if prev_word and prev_word.group(1) in _BAD_PRECEDING_WORDS:
            continue
        open_paren = match.end() - 1
        try:
            close_paren = _closing_paren(scan, open_paren)
            body_open = _body_open_after_params(scan, close_paren)
            if body_open is None:
                continue
            body_close = _matching_brace(scan, body_open)
        except UnbalancedBraces as exc:
            log.warning("unbalanced braces (%s); indexing whole file", exc)
            return [MethodUnit(name=fallback_name, text=text, whole_file=True)]
        sig_start = max(before.rfind(";"), before.rfind("{"), before.rfind("}")) + 1
        units.append(MethodUnit(name=name, text=text[sig_start:body_close + 1].strip()))
        cursor = body_close + 1

    if not units:
        return [MethodUnit(name=fallback_name, text=text, whole_file=True)]
    return units


# ---------------------------------------------------------------------------
# Documents and the corpus
# ---------------------------------------------------------------------------

@dataclass
class Document:
    """One method-level document: normalized term counts plus the first-seen
    surface form of each term (kept for query rendering)."""

    doc_id: str
    term_counts: dict[str, int] = field(default_factory=dict)
    surfaces: dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_terms(cls, doc_id: str, terms: TermSequence) -> "Document":
        counts: dict[str, int] = {}
        surfaces: dict[str, str] = {}
        for tok in terms:
            counts[tok.normalized] = counts.get(tok.normalized, 0) + 1
            surfaces.setdefault(tok.normalized, tok.surface)
        return cls(doc_id=doc_id, term_counts=counts, surfaces=surfaces)

    @property
    def length(self) -> int:
        return sum(self.term_counts.values())


@dataclass(frozen=True)
class CorpusMeta:
    source: str = ""
    stoplist_sha: str = ""
    keywords_sha: str = ""


class Corpus:
    """Immutable method-level document collection with frequency statistics."""

    def __init__(self, documents: list[Document], meta: CorpusMeta | None = None):
        self.documents = documents
        self.meta = meta if meta is not None else CorpusMeta()
        self.doc_freq: dict[str, int] = {}
        for doc in documents:
            for term in doc.term_counts:
                self.doc_freq[term] = self.doc_freq.get(term, 0) + 1

    @property
    def n_docs(self) -> int:
        return len(self.documents)

    def document_frequency_ratio(self, word: str) -> float:
        """Fraction of documents containing `word`, in [0, 1]."""
        if self.n_docs == 0:
            raise DataError("document frequency is undefined on an empty corpus")
        return self.doc_freq.get(word, 0) / self.n_docs

    def __eq__(self, other) -> bool:
        if not isinstance(other, Corpus):
            return NotImplemented
        return self.documents == other.documents and self.meta == other.meta

    def __repr__(self) -> str:
        return f"Corpus(n_docs={self.n_docs}, vocab={len(self.doc_freq)}, meta={self.meta})"


@dataclass
class IngestStats:
    files: int = 0
    skipped: int = 0


def _file_documents(
    root: Path,
    rel: str,
    stops: StopList,
    keywords: frozenset[str],
    strip_comments: bool,
) -> list[Document] | None:
    """Documents of one source file; None when the file cannot be read."""
    path = root / rel
    try:
        text = path.read_text(encoding="utf-8", errors="replace")
    except OSError as exc:
        log.warning("skipping unreadable file %s: %s", path, exc)
        return None
    if strip_comments:
        _, text = _mask_comments_and_strings(text)
    units = split_methods(text, fallback_name=Path(rel).stem)
    docs = []
    for ordinal, unit in enumerate(units, start=1):
        number = 0 if unit.whole_file else ordinal
        doc_id = f"{rel}#{number}:{unit.name}"
        terms = preprocess(unit.text, stops, SPLIT_AND_KEEP_WHOLE,
                           source_id=doc_id, extra_drop=keywords)
        docs.append(Document.from_terms(doc_id, terms))
    return docs


def build_corpus(
    root,
    stops: StopList,
    keywords: frozenset[str] = frozenset(),
    extensions: tuple[str, ...] = DEFAULT_EXTENSIONS,
    strip_comments: bool = False,
    jobs: int = 1,
    stats: IngestStats | None = None,
) -> Corpus:
    """Index every matching file under `root`, one document per method.

    Files are processed in lexicographic path order, so rebuilding from the
    same tree is byte-identical regardless of `jobs`.
    """
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"source directory not found: {root}")
    stats = stats if stats is not None else IngestStats()
    rels = sorted(
        p.relative_to(root).as_posix()
        for p in root.rglob("*")
        if p.is_file() and p.suffix in extensions
    )

    def work(rel: str) -> list[Document] | None:
        return _file_documents(root, rel, stops, keywords, strip_comments)

    per_file = map_ordered(work, rels, jobs)
    documents: list[Document] = []
    for docs in per_file:
        if docs is None:
            stats.skipped += 1
            continue
        stats.files += 1
        documents.extend(docs)
    meta = CorpusMeta(source=root.name, stoplist_sha=stops.sha, keywords_sha=words_sha(keywords))
    return Corpus(documents, meta=meta)


def build_corpus_presplit(
    root,
    stops: StopList,
    keywords: frozenset[str] = frozenset(),
    jobs: int = 1,
    stats: IngestStats | None = None,
) -> Corpus:
    """Index a directory of already-split documents, one file per document.

    For users with a real language parser: write each method to its own text
    file and this path skips the heuristic splitter entirely. Document ids
    are the relative file paths.
    """
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"pre-split directory not found: {root}")
    stats = stats if stats is not None else IngestStats()
    rels = sorted(p.relative_to(root).as_posix() for p in root.rglob("*") if p.is_file())

    def work(rel: str) -> Document | None:
        try:
            text = (root / rel).read_text(encoding="utf-8", errors="replace")
        except OSError as exc:
            log.warning("skipping unreadable file %s: %s", root / rel, exc)
            return None
        terms = preprocess(text, stops, SPLIT_AND_KEEP_WHOLE, source_id=rel, extra_drop=keywords)
        return Document.from_terms(rel, terms)

    documents = []
    for doc in map_ordered(work, rels, jobs):
        if doc is None:
            stats.skipped += 1
            continue
        stats.files += 1
        documents.append(doc)
    meta = CorpusMeta(source=root.name, stoplist_sha=stops.sha, keywords_sha=words_sha(keywords))
    return Corpus(documents, meta=meta)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------
#
# Same style as the adjacency database file:
#   #source=<id>
#   #stoplist_sha=<hex>
#   #keywords_sha=<hex>
#   doc_id<TAB>surface:count,surface:count,...   (terms sorted by normalized)
#   #docs=<n>,terms=<total term count>           (trailing checksum)

def save(corpus: Corpus, path) -> None:
    total_terms = sum(doc.length for doc in corpus.documents)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"#source={corpus.meta.source}\n")
            fh.write(f"#stoplist_sha={corpus.meta.stoplist_sha}\n")
            fh.write(f"#keywords_sha={corpus.meta.keywords_sha}\n")
            for doc in corpus.documents:
                cells = ",".join(
                    f"{doc.surfaces[term]}:{count}"
                    for term, count in sorted(doc.term_counts.items())
                )
                fh.write(f"{doc.doc_id}\t{cells}\n")
            fh.write(f"#docs={corpus.n_docs},terms={total_terms}\n")
    except OSError as exc:
        raise DataError(f"cannot write index {path}: {exc}") from exc


def load(path) -> Corpus:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read index {path}: {exc}") from exc

    header: dict[str, str] = {}
    documents: list[Document] = []
    checksum: str | None = None
    try:
        for line in lines:
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                if key == "docs":
                    checksum = line[1:]
                else:
                    header[key] = value
                continue
            doc_id, _, cells = line.partition("\t")
            counts: dict[str, int] = {}
            surfaces: dict[str, str] = {}
            if cells:
                for cell in cells.split(","):
                    surface, _, count = cell.rpartition(":")
                    norm = surface.lower()
                    counts[norm] = int(count)
                    surfaces[norm] = surface
            documents.append(Document(doc_id=doc_id, term_counts=counts, surfaces=surfaces))
    except ValueError as exc:
        raise CorruptFileError(f"unparseable index line in {path}: {exc}") from exc

    if checksum is None:
        raise CorruptFileError(f"{path}: missing trailing #docs line (truncated file?)")
    try:
        declared = dict(part.split("=", 1) for part in checksum.split(","))
        n_docs, n_terms = int(declared["docs"]), int(declared["terms"])
    except (ValueError, KeyError) as exc:
        raise CorruptFileError(f"{path}: bad checksum line #{checksum}: {exc}") from exc
    total_terms = sum(doc.length for doc in documents)
    if len(documents) != n_docs or total_terms != n_terms:
        raise CorruptFileError(
            f"{path}: checksum mismatch, declared docs={n_docs} terms={n_terms}, "
            f"found docs={len(documents)} terms={total_terms}")
    meta = CorpusMeta(
        source=header.get("source", ""),
        stoplist_sha=header.get("stoplist_sha", ""),
        keywords_sha=header.get("keywords_sha", ""),
    )
    return Corpus(documents, meta=meta)
