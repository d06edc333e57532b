"""Word-adjacency database mined from crowd-sourced question titles.

For every word seen in the titles this stores the multiset of words that
co-occurred with it inside a small sliding window. The database backs both
relevance signals used during reformulation: cosine similarity between two
words' adjacency vectors, and direct co-occurrence counts.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator

from .errors import CorruptFileError, DataError
from .textprep import SPLIT_ONLY, StopList, preprocess

log = logging.getLogger(__name__)

DEFAULT_WINDOW = 2


@dataclass(frozen=True)
class TitleRecord:
    """One question title from a dump: id, raw title, lower-cased tags."""

    question_id: int
    title: str
    tags: tuple[str, ...]


@dataclass(frozen=True)
class DbMeta:
    """Build parameters recorded with the database."""

    window: int = DEFAULT_WINDOW
    stoplist_sha: str = ""
    source: str = ""
    binary: bool = False  # True: each unordered pair counted once per title


@dataclass
class AdjacencyVector:
    """The stored neighbor counts of one word. Treat `weights` as read-only."""

    owner: str
    weights: dict[str, int] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return bool(self.weights)


class AdjacencyDatabase:
    """Symmetric word -> (neighbor -> count) map with build metadata."""

    def __init__(self, entries: dict[str, dict[str, int]] | None = None,
                 meta: DbMeta | None = None):
        self.entries: dict[str, dict[str, int]] = entries if entries is not None else {}
        self.meta = meta if meta is not None else DbMeta()
        self._norms: dict[str, float] = {}

    @property
    def vocab_size(self) -> int:
        return len(self.entries)

    @property
    def total_pair_count(self) -> int:
        # Every unordered pair is stored in both directions.
        return sum(sum(nbrs.values()) for nbrs in self.entries.values()) // 2

    def neighbors(self, word: str) -> AdjacencyVector:
        """Stored adjacency vector of `word`; empty for unknown words."""
        return AdjacencyVector(owner=word, weights=self.entries.get(word, {}))

    def cooccurrence_count(self, a: str, b: str) -> int:
        """Windowed co-occurrence count of the pair, 0 when never adjacent."""
        return self.entries.get(a, {}).get(b, 0)

    def vector_norm(self, word: str) -> float:
        """L2 norm of a word's adjacency vector (cached; 0.0 if unknown)."""
        norm = self._norms.get(word)
        if norm is None:
            nbrs = self.entries.get(word)
            # Sorted for order-independent float accumulation.
            norm = math.sqrt(sum(c * c for _, c in sorted(nbrs.items()))) if nbrs else 0.0
            self._norms[word] = norm
        return norm

    def __eq__(self, other) -> bool:
        if not isinstance(other, AdjacencyDatabase):
            return NotImplemented
        return self.entries == other.entries and self.meta == other.meta

    def __repr__(self) -> str:
        return (f"AdjacencyDatabase(vocab_size={self.vocab_size}, "
                f"total_pair_count={self.total_pair_count}, meta={self.meta})")


def cosine_similarity(a: AdjacencyVector, b: AdjacencyVector,
                      db: AdjacencyDatabase | None = None) -> float:
    """Cosine between two count-weighted adjacency vectors, 0.0 if either is
    empty. When `db` is given its cached norms are used."""
    if not a.weights or not b.weights:
        return 0.0
    small, large = (a.weights, b.weights) if len(a.weights) <= len(b.weights) else (b.weights, a.weights)
    dot = sum(c * large[w] for w, c in sorted(small.items()) if w in large)
    if dot == 0:
        return 0.0
    if db is not None:
        norm_a, norm_b = db.vector_norm(a.owner), db.vector_norm(b.owner)
    else:
        norm_a = math.sqrt(sum(c * c for _, c in sorted(a.weights.items())))
        norm_b = math.sqrt(sum(c * c for _, c in sorted(b.weights.items())))
    return dot / (norm_a * norm_b)


# ---------------------------------------------------------------------------
# Dump parsing and filtering
# ---------------------------------------------------------------------------

@dataclass
class DumpStats:
    """Counters filled while reading a dump; malformed lines never abort."""

    read: int = 0
    malformed: int = 0


def parse_title_line(line: str) -> TitleRecord:
    """Parse one `question_id<TAB>title<TAB>tag1;tag2;...` line."""
    parts = line.rstrip("\n").split("\t")
    if len(parts) != 3:
        raise DataError(f"expected 3 tab-separated fields, got {len(parts)}")
    qid_text, title, tag_field = parts
    try:
        qid = int(qid_text)
    except ValueError:
        raise DataError(f"non-integer question id: {qid_text!r}") from None
    if not title:
        raise DataError("empty title")
    tags = tuple(t.strip().lower() for t in tag_field.split(";") if t.strip())
    return TitleRecord(question_id=qid, title=title, tags=tags)


def read_title_dump(path, stats: DumpStats | None = None) -> Iterator[TitleRecord]:
    """Stream TitleRecords from a TSV dump, skipping malformed lines."""
    stats = stats if stats is not None else DumpStats()
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read dump {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            stats.read += 1
            try:
                yield parse_title_line(line)
            except DataError as exc:
                stats.malformed += 1
                log.warning("skipping malformed record at %s:%d: %s", path, lineno, exc)


def filter_titles(records: Iterable[TitleRecord], required_tag: str) -> Iterator[TitleRecord]:
    """Yield exactly the records whose tag list contains `required_tag`."""
    wanted = required_tag.lower()
    for rec in records:
        if wanted in rec.tags:
            yield rec


# ---------------------------------------------------------------------------
# Building
# ---------------------------------------------------------------------------

def count_title_pairs(
    tokens: list[str],
    window: int,
    into: dict[str, dict[str, int]],
    binary: bool = False,
) -> None:
    """Add the windowed pair counts of one preprocessed title to `into`.

    A pair is two distinct words at positions less than `window` apart; each
    position pair counts once. Identical words never pair with themselves.
    """
    seen: set[tuple[str, str]] = set() if binary else None  # type: ignore[assignment]
    n = len(tokens)
    for i in range(n):
        a = tokens[i]
        for j in range(i + 1, min(i + window, n)):
            b = tokens[j]
            if a == b:
                continue
            if binary:
                key = (a, b) if a < b else (b, a)
                if key in seen:
                    continue
                seen.add(key)
            slot_a = into.setdefault(a, {})
            slot_a[b] = slot_a.get(b, 0) + 1
            slot_b = into.setdefault(b, {})
            slot_b[a] = slot_b.get(a, 0) + 1


def build(
    titles: Iterable[TitleRecord],
    stops: StopList,
    window: int = DEFAULT_WINDOW,
    source: str = "",
    binary: bool = False,
) -> AdjacencyDatabase:
    """Build an adjacency database from already tag-filtered titles."""
    if window < 2:
        raise ValueError(f"window must be >= 2, got {window}")
    entries: dict[str, dict[str, int]] = {}
    for rec in titles:
        tokens = preprocess(rec.title, stops, SPLIT_ONLY).normalized()
        count_title_pairs(tokens, window, entries, binary=binary)
    meta = DbMeta(window=window, stoplist_sha=stops.sha, source=source, binary=binary)
    return AdjacencyDatabase(entries=entries, meta=meta)


def merge(parts: Iterable[AdjacencyDatabase]) -> AdjacencyDatabase:
    """Merge databases built from partitions of one stream.

    Counts sum; the result is independent of partitioning and order, which is
    what makes parallel builds deterministic. Metadata must agree.
    """
    merged: dict[str, dict[str, int]] = {}
    meta: DbMeta | None = None
    for part in parts:
        if meta is None:
            meta = part.meta
        elif replace(part.meta, source=meta.source) != meta:
            raise DataError(f"cannot merge databases with differing meta: {part.meta} vs {meta}")
        for word, nbrs in part.entries.items():
            slot = merged.setdefault(word, {})
            for nbr, count in nbrs.items():
                slot[nbr] = slot.get(nbr, 0) + count
    return AdjacencyDatabase(entries=merged, meta=meta if meta is not None else DbMeta())


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------
#
# Plain text, human-inspectable:
#   #window=2
#   #stoplist_sha=<hex>
#   #source=<id>
#   #binary=0
#   word<TAB>neighbor:count,neighbor:count,...      (sorted by word, neighbor)
#   #pairs=<total unordered pair count>             (trailing checksum)

def save(db: AdjacencyDatabase, path) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"#window={db.meta.window}\n")
            fh.write(f"#stoplist_sha={db.meta.stoplist_sha}\n")
            fh.write(f"#source={db.meta.source}\n")
            fh.write(f"#binary={int(db.meta.binary)}\n")
            for word in sorted(db.entries):
                cells = ",".join(f"{n}:{c}" for n, c in sorted(db.entries[word].items()))
                fh.write(f"{word}\t{cells}\n")
            fh.write(f"#pairs={db.total_pair_count}\n")
    except OSError as exc:
        raise DataError(f"cannot write database {path}: {exc}") from exc


def load(path) -> AdjacencyDatabase:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read database {path}: {exc}") from exc

    header: dict[str, str] = {}
    entries: dict[str, dict[str, int]] = {}
    declared_pairs: int | None = None
    try:
        for line in lines:
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                if key == "pairs":
                    declared_pairs = int(value)
                else:
                    header[key] = value
                continue
            word, _, cells = line.partition("\t")
            nbrs: dict[str, int] = {}
            if cells:
                for cell in cells.split(","):
                    nbr, _, count = cell.partition(":")
                    nbrs[nbr] = int(count)
            entries[word] = nbrs
    except ValueError as exc:
        raise CorruptFileError(f"unparseable database line in {path}: {exc}") from exc

    meta = DbMeta(
        window=int(header.get("window", DEFAULT_WINDOW)),
        stoplist_sha=header.get("stoplist_sha", ""),
        source=header.get("source", ""),
        binary=header.get("binary", "0") == "1",
    )
    db = AdjacencyDatabase(entries=entries, meta=meta)
    if declared_pairs is None:
        raise CorruptFileError(f"{path}: missing trailing #pairs line (truncated file?)")
    if db.total_pair_count != declared_pairs:
        raise CorruptFileError(
            f"{path}: checksum mismatch, file declares {declared_pairs} pairs "
            f"but body sums to {db.total_pair_count}")
    return db
