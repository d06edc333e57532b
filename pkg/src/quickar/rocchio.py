"""Rocchio-style pseudo-relevance-feedback expansion, the comparison baseline.

The top retrieved documents of the unreduced keyword query are assumed
relevant; candidate terms are ranked by their summed tf-idf weight across
those documents and appended to the keywords. No nominal filtering and no
reduction step: this baseline expands, nothing more.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .corpus import Corpus
from .reformulate import (
    CandidateScore,
    DEFAULT_BUDGET,
    DEFAULT_TOP_DOCS,
    KeywordSet,
    QueryRecord,
    Reformulation,
    collect_keywords,
    render_terms,
)
from .search import Searcher, searcher_for
from .textprep import StopList, Token, WHOLE

MODE_ROCCHIO = "rocchio"

SOURCE_FEEDBACK = "feedback"


@dataclass(frozen=True)
class RocchioConfig:
    top_docs: int = DEFAULT_TOP_DOCS
    # None: fill up to the shared 10-term query budget.
    expansion_count: int | None = None
    budget: int = DEFAULT_BUDGET


def rank_feedback_terms(
    keywords: KeywordSet,
    searcher: Searcher,
    top_docs: int = DEFAULT_TOP_DOCS,
) -> list[CandidateScore]:
    """Candidate terms of the top documents ranked by summed tf'*idf.

    Uses the retriever's own weighting (tf' = 1 + ln count, smoothed idf) so
    the baseline and the retriever agree on what "important" means.
    """
    hits = searcher.search(keywords.normalized(), top_n=top_docs)
    exclude = keywords.normalized_set()
    by_id = {doc.doc_id: doc for doc in searcher.corpus.documents}
    totals: dict[str, float] = {}
    surfaces: dict[str, str] = {}
    for hit in hits:
        doc = by_id[hit.doc_id]
        for term, count in sorted(doc.term_counts.items()):
            if term in exclude:
                continue
            weight = (1.0 + math.log(count)) * searcher.idf(term)
            totals[term] = totals.get(term, 0.0) + weight
            surfaces.setdefault(term, doc.surfaces[term])
    ranked = sorted(totals.items(), key=lambda kv: (-kv[1], kv[0]))
    return [
        CandidateScore(term=term, surface=surfaces[term], source=SOURCE_FEEDBACK, score=score)
        for term, score in ranked
    ]


def rocchio_expand(
    query: QueryRecord,
    corpus: Corpus,
    cfg: RocchioConfig = RocchioConfig(),
    *,
    stops: StopList,
    searcher: Searcher | None = None,
) -> Reformulation:
    """Expand a query with the strongest terms of its top retrieved documents.

    An empty retrieval returns the keyword query unchanged. Raises
    QueryEmptyError when the title has no usable keywords at all.
    """
    if searcher is None:
        searcher = searcher_for(corpus)
    keywords = collect_keywords(query, stops)
    count = cfg.expansion_count
    if count is None:
        count = max(0, cfg.budget - len(keywords))
    expansions = rank_feedback_terms(keywords, searcher, top_docs=cfg.top_docs)[:count]
    rendered = render_terms(
        list(keywords.tokens) + [Token.from_surface(c.surface, WHOLE) for c in expansions]
    )
    rendered.source_id = query.query_id
    return Reformulation(
        query_id=query.query_id,
        mode=MODE_ROCCHIO,
        reduced_keywords=keywords,
        expansion_terms=expansions,
        rendered_query=rendered,
    )
