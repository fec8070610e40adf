# -*- coding: utf-8 -*-
# -----------------------------------------------------------------------------
# Copyright 2024 by SmartRAG Lab Authors, see AUTHORS for more details.
#
# Distributed under the terms of the BSD license.
#
# The full license is in the file LICENCE, distributed with this software.
# -----------------------------------------------------------------------------
"""In-memory Okapi BM25 index.

Documents are indexed on the normalised tokens of their title followed by
their text. Scores use k1 = 1.2, b = 0.75 and the non negative smoothed
inverse document frequency ln(1 + (N - df + 0.5) / (df + 0.5)).

"""
import math
import logging
from collections import Counter

from atom.api import Dict, Float, Int, Str, Typed

from ..errors import CorpusError
from ..metrics import normalize_tokens
from ..env.records import Observation, Record, Snippet
from .retriever_tools import CACHE_SIZE, BaseRetriever

logger = logging.getLogger(__name__)

K1 = 1.2

B = 0.75


class Document(Record):
    """A searchable document.

    """
    id = Str()

    title = Str()

    text = Str()

    #: Phrase the document states as an answer (never read by the policy
    #: except through the snippets it produces).
    answer_span = Typed(str)

    def __init__(self, **kwargs):
        if not kwargs.get('text'):
            raise CorpusError('Document {} has an empty text.'
                              .format(kwargs.get('id')))
        super(Document, self).__init__(**kwargs)

    def to_record(self):
        record = {'id': self.id, 'title': self.title, 'text': self.text}
        if self.answer_span is not None:
            record['answer_span'] = self.answer_span
        return record


class Index(Record):
    """Inverted index and corpus statistics.

    """
    #: Token -> tuple of (doc_id, term frequency) in corpus order.
    postings = Dict()

    #: doc_id -> number of indexed tokens.
    doc_lengths = Dict()

    #: doc_id -> Document.
    documents = Dict()

    n_docs = Int()

    avg_length = Float()

    def idf(self, token):
        """Smoothed inverse document frequency of a token.

        """
        df = len(self.postings.get(token, ()))
        return math.log(1.0 + (self.n_docs - df + 0.5) / (df + 0.5))

    def term_weight(self, token, tf, doc_id):
        length = self.doc_lengths[doc_id]
        avg = self.avg_length or 1.0
        norm = K1 * (1.0 - B + B * length / avg)
        return self.idf(token) * tf * (K1 + 1.0) / (tf + norm)


def _doc_tokens(doc):
    return normalize_tokens(doc.title + ' ' + doc.text)


def build_index(docs):
    """Index a list of documents.

    Parameters
    ----------
    docs : iterable of Document
        Corpus, ids must be unique.

    Returns
    -------
    index : Index

    """
    postings = {}
    lengths = {}
    documents = {}
    for doc in docs:
        if doc.id in documents:
            raise CorpusError('Duplicate document id {}'.format(doc.id))
        documents[doc.id] = doc
        tokens = _doc_tokens(doc)
        lengths[doc.id] = len(tokens)
        for token, tf in sorted(Counter(tokens).items()):
            postings.setdefault(token, []).append((doc.id, tf))

    n_docs = len(documents)
    avg = sum(lengths.values()) / n_docs if n_docs else 0.0
    logger.debug('Indexed %d documents (%d distinct tokens)', n_docs,
                 len(postings))
    return Index(postings={t: tuple(p) for t, p in postings.items()},
                 doc_lengths=lengths, documents=documents, n_docs=n_docs,
                 avg_length=avg)


def _query_terms(query_tokens):
    return sorted(set(query_tokens))


def score(index, query_tokens, doc_id):
    """BM25 score of one document for a tokenised query.

    Each distinct query token contributes once.

    """
    if doc_id not in index.documents:
        raise CorpusError('Unknown document id {}'.format(doc_id))
    frequencies = Counter(_doc_tokens(index.documents[doc_id]))
    total = 0.0
    for token in _query_terms(query_tokens):
        tf = frequencies.get(token, 0)
        if tf:
            total += index.term_weight(token, tf, doc_id)
    return total


def search(index, query, k):
    """Observation made of the k best scoring documents.

    Documents with a null score are never returned. Ties are broken by
    increasing document id.

    """
    scores = {}
    for token in _query_terms(normalize_tokens(query)):
        for doc_id, tf in index.postings.get(token, ()):
            weight = index.term_weight(token, tf, doc_id)
            scores[doc_id] = scores.get(doc_id, 0.0) + weight

    ranked = sorted(((s, d) for d, s in scores.items() if s > 0),
                    key=lambda x: (-x[0], x[1]))[:k]
    snippets = []
    for s, doc_id in ranked:
        doc = index.documents[doc_id]
        snippets.append(Snippet(doc_id=doc_id, score=s, text=doc.text,
                                answer_span=doc.answer_span))
    return Observation.from_snippets(query, snippets)


class BM25Retriever(BaseRetriever):
    """Retriever backed by an in-memory BM25 index.

    Parameters
    ----------
    docs : iterable of Document
        Corpus to index.

    """
    def __init__(self, docs, caching_allowed=True, cache_size=CACHE_SIZE):
        super(BM25Retriever, self).__init__(caching_allowed, cache_size)
        self.index = build_index(docs)

    def _search(self, query, k):
        return search(self.index, query, k)
