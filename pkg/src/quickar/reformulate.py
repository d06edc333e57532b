"""Crowd-assisted query reformulation: reduce, harvest, score, expand.

The pipeline for one change-request title:

1. collect keywords (camel-split, whole identifiers kept, stops removed)
2. reduce: drop non-nominal keywords and those in more than 25% of documents
3. harvest candidate terms from the project (top retrieved documents) and
   from the crowd adjacency database (neighbors of the keywords)
4. score: project candidates by accumulated adjacency-vector cosine against
   the keywords, crowd candidates by accumulated co-occurrence counts
5. take the top few nominal candidates of each source, min-max normalize,
   merge, and append up to the 10-term query budget
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .adjacency import AdjacencyDatabase, cosine_similarity
from .corpus import Corpus
from .errors import QueryEmptyError
from .nouns import NounOracle
from .search import Searcher, searcher_for
from .textprep import (
    CAMEL_PART,
    SPLIT_AND_KEEP_WHOLE,
    StopList,
    TermSequence,
    Token,
    WHOLE,
    preprocess,
    split_camel,
)

# Reformulation modes.
MODE_ALL = "all"        # candidates from project and crowd
MODE_PROJECT = "p"      # project candidates only
MODE_CROWD = "so"       # crowd candidates only
MODE_REDUCE = "red"     # reduction only, no expansion
MODES = (MODE_ALL, MODE_PROJECT, MODE_CROWD, MODE_REDUCE)

# Candidate sources.
SOURCE_PROJECT = "project"
SOURCE_CROWD = "crowd"

DEFAULT_TOP_DOCS = 5     # retrieved documents mined for project candidates
DEFAULT_TOP_K = 5        # candidates kept per source before merging
DEFAULT_BUDGET = 10      # total query term budget, pre-rendering
DEFAULT_MAX_DF_RATIO = 0.25


@dataclass(frozen=True)
class QueryRecord:
    """One change request: title text plus (for evaluation) gold documents."""

    query_id: str
    text: str
    gold_docs: frozenset[str] = frozenset()


@dataclass
class KeywordSet:
    """Ordered keywords, deduplicated on normalized form (first wins)."""

    tokens: list[Token] = field(default_factory=list)

    @classmethod
    def from_terms(cls, terms: TermSequence) -> "KeywordSet":
        seen: set[str] = set()
        kept = []
        for tok in terms:
            if tok.normalized not in seen:
                seen.add(tok.normalized)
                kept.append(tok)
        return cls(tokens=kept)

    def normalized(self) -> list[str]:
        return [t.normalized for t in self.tokens]

    def normalized_set(self) -> set[str]:
        return {t.normalized for t in self.tokens}

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)


@dataclass(frozen=True)
class CandidateScore:
    """A candidate expansion term with its source and accumulated score."""

    term: str      # normalized
    surface: str
    source: str    # SOURCE_PROJECT or SOURCE_CROWD
    score: float


@dataclass
class Reformulation:
    query_id: str
    mode: str
    reduced_keywords: KeywordSet
    expansion_terms: list[CandidateScore]
    rendered_query: TermSequence

    def query_text(self) -> str:
        return " ".join(self.rendered_query.surfaces())

    def reduced_query_text(self) -> str:
        return " ".join(render_terms(self.reduced_keywords.tokens).surfaces())


def _is_identifier(token: Token) -> bool:
    """Camel parts and multi-part camel surfaces came from identifiers."""
    return token.origin == CAMEL_PART or len(split_camel(token.surface)) > 1


def _token_is_nominal(token: Token, oracle: NounOracle) -> bool:
    # Identifier-derived terms name things; only plain words face the oracle.
    return _is_identifier(token) or oracle.is_noun(token.normalized)


def _candidate_is_nominal(cand: CandidateScore, oracle: NounOracle) -> bool:
    if len(split_camel(cand.surface)) > 1:
        return True
    return oracle.is_noun(cand.term)


def collect_keywords(query: QueryRecord, stops: StopList) -> KeywordSet:
    """Preprocessed, order-preserving deduplicated keywords of a title.

    Raises QueryEmptyError when every term is filtered out, which marks the
    query as unreformulatable.
    """
    terms = preprocess(query.text, stops, SPLIT_AND_KEEP_WHOLE, source_id=query.query_id)
    keywords = KeywordSet.from_terms(terms)
    if not keywords.tokens:
        raise QueryEmptyError(f"query {query.query_id!r}: no keywords survive preprocessing")
    return keywords


def reduce_keywords(
    keywords: KeywordSet,
    corpus: Corpus,
    oracle: NounOracle,
    max_df_ratio: float = DEFAULT_MAX_DF_RATIO,
) -> KeywordSet:
    """Drop non-nominal keywords and those occurring in more than
    `max_df_ratio` of the documents; if that empties the set, the original
    keywords are returned unchanged."""
    kept = [
        tok for tok in keywords
        if _token_is_nominal(tok, oracle)
        and corpus.document_frequency_ratio(tok.normalized) <= max_df_ratio
    ]
    if not kept:
        return keywords
    return KeywordSet(tokens=kept)


def project_candidates(
    keywords: KeywordSet,
    searcher: Searcher,
    top_docs: int = DEFAULT_TOP_DOCS,
) -> dict[str, str]:
    """Candidate terms mined from the top retrieved documents.

    Returns normalized term -> representative surface, excluding the
    keywords themselves. An empty retrieval yields an empty mapping.
    """
    hits = searcher.search(keywords.normalized(), top_n=top_docs)
    exclude = keywords.normalized_set()
    by_id = {doc.doc_id: doc for doc in searcher.corpus.documents}
    found: dict[str, str] = {}
    for hit in hits:
        doc = by_id[hit.doc_id]
        for term in sorted(doc.term_counts):
            if term not in exclude:
                found.setdefault(term, doc.surfaces[term])
    return found


def crowd_candidates(keywords: KeywordSet, db: AdjacencyDatabase) -> set[str]:
    """Union of the keywords' adjacency lists, minus the keywords."""
    exclude = keywords.normalized_set()
    found: set[str] = set()
    for word in keywords.normalized():
        found.update(db.neighbors(word).weights)
    return found - exclude


def score_project_candidates(
    candidates: dict[str, str],
    keywords: KeywordSet,
    db: AdjacencyDatabase,
) -> list[CandidateScore]:
    """Accumulated adjacency-vector cosine of each candidate against every
    keyword; candidates or keywords without adjacency entries contribute 0."""
    keyword_vectors = [db.neighbors(word) for word in keywords.normalized()]
    scored = []
    for term in sorted(candidates):
        vec = db.neighbors(term)
        score = sum(cosine_similarity(vec, kv, db) for kv in keyword_vectors)
        scored.append(CandidateScore(term=term, surface=candidates[term],
                                     source=SOURCE_PROJECT, score=score))
    return scored


def score_crowd_candidates(
    candidates: set[str],
    keywords: KeywordSet,
    db: AdjacencyDatabase,
) -> list[CandidateScore]:
    """Accumulated windowed co-occurrence count of each candidate against
    every keyword."""
    words = keywords.normalized()
    scored = []
    for term in sorted(candidates):
        score = float(sum(db.cooccurrence_count(term, word) for word in words))
        scored.append(CandidateScore(term=term, surface=term,
                                     source=SOURCE_CROWD, score=score))
    return scored


def _top_nominal_normalized(
    scored: list[CandidateScore],
    oracle: NounOracle,
    top_k: int,
) -> list[CandidateScore]:
    """Top-k by score (term-ascending ties), nominal only, min-max normalized.

    A single survivor gets 1.0; an all-equal list collapses to 1.0 when the
    shared score is positive and 0.0 when it is zero.
    """
    ranked = sorted(scored, key=lambda c: (-c.score, c.term))[:top_k]
    ranked = [c for c in ranked if _candidate_is_nominal(c, oracle)]
    if not ranked:
        return []
    if len(ranked) == 1:
        return [replace(ranked[0], score=1.0)]
    hi = max(c.score for c in ranked)
    lo = min(c.score for c in ranked)
    if hi == lo:
        value = 1.0 if hi > 0 else 0.0
        return [replace(c, score=value) for c in ranked]
    return [replace(c, score=(c.score - lo) / (hi - lo)) for c in ranked]


def select_and_combine(
    r_project: list[CandidateScore],
    r_crowd: list[CandidateScore],
    oracle: NounOracle,
    top_k: int = DEFAULT_TOP_K,
) -> list[CandidateScore]:
    """Merge the per-source shortlists into one expansion ranking.

    Each source keeps its top-k nominal candidates with scores min-max
    normalized to [0, 1]; duplicates keep the higher normalized entry, and
    exact ties favor the project source.
    """
    pool: dict[str, CandidateScore] = {}
    for cand in _top_nominal_normalized(r_project, oracle, top_k):
        pool[cand.term] = cand
    for cand in _top_nominal_normalized(r_crowd, oracle, top_k):
        existing = pool.get(cand.term)
        if existing is None or cand.score > existing.score:
            pool[cand.term] = cand
    return sorted(
        pool.values(),
        key=lambda c: (-c.score, 0 if c.source == SOURCE_PROJECT else 1, c.term),
    )


def render_terms(tokens: list[Token]) -> TermSequence:
    """Camel-dual rendering: every multi-part term contributes its parts and
    its whole form, deduplicated on normalized form keeping first position."""
    out: list[Token] = []
    seen: set[str] = set()
    for tok in tokens:
        parts = split_camel(tok.surface)
        if len(parts) > 1:
            emit = [Token.from_surface(p, CAMEL_PART) for p in parts if not p.isdigit()]
            emit.append(Token.from_surface(tok.surface, WHOLE))
        else:
            emit = [tok]
        for candidate in emit:
            if candidate.normalized in seen:
                continue
            seen.add(candidate.normalized)
            out.append(candidate)
    return TermSequence(tokens=out)


def reformulate(
    query: QueryRecord,
    corpus: Corpus,
    db: AdjacencyDatabase,
    mode: str = MODE_ALL,
    *,
    stops: StopList,
    oracle: NounOracle,
    top_docs: int = DEFAULT_TOP_DOCS,
    top_k: int = DEFAULT_TOP_K,
    budget: int = DEFAULT_BUDGET,
    max_df_ratio: float = DEFAULT_MAX_DF_RATIO,
    searcher: Searcher | None = None,
) -> Reformulation:
    """Run the full reformulation pipeline for one query in the given mode."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}, expected one of {MODES}")
    keywords = collect_keywords(query, stops)
    reduced = reduce_keywords(keywords, corpus, oracle, max_df_ratio=max_df_ratio)
    need = max(0, budget - len(reduced))

    expansions: list[CandidateScore] = []
    if mode != MODE_REDUCE and need > 0:
        if searcher is None:
            searcher = searcher_for(corpus)
        scored_project: list[CandidateScore] = []
        scored_crowd: list[CandidateScore] = []
        if mode in (MODE_ALL, MODE_PROJECT):
            candidates = project_candidates(reduced, searcher, top_docs=top_docs)
            scored_project = score_project_candidates(candidates, reduced, db)
        if mode in (MODE_ALL, MODE_CROWD):
            candidates_so = crowd_candidates(reduced, db)
            scored_crowd = score_crowd_candidates(candidates_so, reduced, db)
        combined = select_and_combine(scored_project, scored_crowd, oracle, top_k=top_k)
        expansions = combined[:need]

    rendered = render_terms(
        list(reduced.tokens)
        + [Token.from_surface(c.surface, WHOLE) for c in expansions]
    )
    rendered.source_id = query.query_id
    return Reformulation(
        query_id=query.query_id,
        mode=mode,
        reduced_keywords=reduced,
        expansion_terms=expansions,
        rendered_query=rendered,
    )
