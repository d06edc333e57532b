"""Deterministic TF-IDF cosine retrieval over a method-level corpus.

Classic log-scaled term frequency with smoothed inverse document frequency:

    tf'(t, d) = 1 + ln(count(t, d))
    idf(t)    = ln((N + 1) / (df(t) + 1)) + 1
    score     = cosine of the L2-normalized tf'*idf vectors

Ties break by ascending document id, which makes every ranked list total and
reproducible; the evaluation harness relies on that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import Corpus
from .errors import DataError
from .textprep import TermSequence

# Sentinel rank for "the gold document never showed up in the result list".
NOT_RETRIEVED = None


@dataclass(frozen=True)
class SearchHit:
    doc_id: str
    score: float
    rank: int  # 1-based, consecutive


class Searcher:
    """Inverted-index retriever bound to one immutable corpus."""

    def __init__(self, corpus: Corpus, drop_unknown: bool = False):
        if corpus.n_docs == 0:
            raise DataError("cannot search an empty corpus")
        self.corpus = corpus
        self.drop_unknown = drop_unknown
        n = corpus.n_docs
        self._idf = {
            term: math.log((n + 1) / (df + 1)) + 1.0
            for term, df in corpus.doc_freq.items()
        }
        self._unknown_idf = math.log(n + 1) + 1.0
        # Postings hold final L2-normalized document weights.
        self._postings: dict[str, list[tuple[int, float]]] = {}
        self._doc_ids = [doc.doc_id for doc in corpus.documents]
        for index, doc in enumerate(corpus.documents):
            if not doc.term_counts:
                continue
            weights = {
                term: (1.0 + math.log(count)) * self._idf[term]
                for term, count in sorted(doc.term_counts.items())
            }
            norm = math.sqrt(sum(w * w for w in weights.values()))
            for term, weight in weights.items():
                self._postings.setdefault(term, []).append((index, weight / norm))

    def idf(self, term: str) -> float:
        return self._idf.get(term, self._unknown_idf)

    def query_vector(self, terms: Sequence[str]) -> dict[str, float]:
        """L2-normalized tf'*idf weights of a term query.

        Unknown terms keep their smoothed idf and only affect normalization
        (they match nothing); with drop_unknown they are removed entirely.
        """
        counts: dict[str, int] = {}
        for term in terms:
            if self.drop_unknown and term not in self._idf:
                continue
            counts[term] = counts.get(term, 0) + 1
        weights = {
            term: (1.0 + math.log(count)) * self.idf(term)
            for term, count in sorted(counts.items())
        }
        norm = math.sqrt(sum(w * w for w in weights.values()))
        if norm == 0.0:
            return {}
        return {term: w / norm for term, w in weights.items()}

    def search(self, query_terms, top_n: int | None = None) -> list[SearchHit]:
        """Ranked documents for a term query; zero-overlap documents are
        omitted, an empty query returns an empty list."""
        terms = _as_terms(query_terms)
        qvec = self.query_vector(terms)
        scores: dict[int, float] = {}
        for term in sorted(qvec):
            weight = qvec[term]
            for index, doc_weight in self._postings.get(term, ()):
                scores[index] = scores.get(index, 0.0) + weight * doc_weight
        order = sorted(scores.items(), key=lambda kv: (-kv[1], self._doc_ids[kv[0]]))
        if top_n is not None:
            order = order[:top_n]
        return [
            SearchHit(doc_id=self._doc_ids[index], score=score, rank=rank)
            for rank, (index, score) in enumerate(order, start=1)
        ]


def _as_terms(query_terms) -> list[str]:
    if isinstance(query_terms, TermSequence):
        return query_terms.normalized()
    return list(query_terms)


def searcher_for(corpus: Corpus, drop_unknown: bool = False) -> Searcher:
    """Searcher for `corpus`, cached on the corpus object."""
    cached = getattr(corpus, "_searcher", None)
    if cached is None or cached.drop_unknown != drop_unknown:
        cached = Searcher(corpus, drop_unknown=drop_unknown)
        corpus._searcher = cached
    return cached


def search(corpus: Corpus, query_terms, top_n: int | None = None) -> list[SearchHit]:
    """Convenience wrapper around a cached Searcher."""
    return searcher_for(corpus).search(query_terms, top_n=top_n)


def rank_of_first_relevant(hits: Iterable[SearchHit], gold: set[str]) -> int | None:
    """Smallest rank whose doc_id is in `gold`, or NOT_RETRIEVED (None)."""
    if not gold:
        raise ValueError("gold document set must not be empty")
    best: int | None = None
    for hit in hits:
        if hit.doc_id in gold and (best is None or hit.rank < best):
            best = hit.rank
    return best
