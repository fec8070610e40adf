# -*- coding: utf-8 -*-
# -----------------------------------------------------------------------------
# Copyright 2024 by SmartRAG Lab Authors, see AUTHORS for more details.
#
# Distributed under the terms of the BSD license.
#
# The full license is in the file LICENCE, distributed with this software.
# -----------------------------------------------------------------------------
"""Answer candidates offered to the answer head.

"""
import math

from atom.api import Bool, Dict, Enum, Float, Int, Str

from ..env.records import Record
from ..metrics import normalize_tokens
from .templates import keywords, surface_tokens

MEMORY = 'Memory'

OBSERVATION = 'Observation'

#: Maximal number of n-gram candidates extracted from one snippet.
MAX_NGRAMS_PER_SNIPPET = 8

#: Longest n-gram considered.
MAX_NGRAM = 4


class Memory(Record):
    """Answers the base model believes to know, possibly wrong.

    """
    #: question id -> claimed answer.
    entries = Dict()

    def lookup(self, question_id):
        return self.entries.get(question_id)

    def __len__(self):
        return len(self.entries)


class AnswerCandidate(Record):
    """A possible final answer and the evidence attached to it.

    """
    text = Str()

    source = Enum(MEMORY, OBSERVATION)

    #: Score of the snippet the candidate was read from (0 for memory).
    score = Float()

    #: Rank of that snippet in its observation (0 for memory).
    rank = Int()

    #: Fraction of the question keywords found around the candidate.
    context_overlap = Float()

    #: Fraction of the candidate tokens which are question keywords.
    candidate_overlap = Float()

    #: Number of normalised tokens.
    n_tokens = Int()

    #: Whether this is the empty candidate emitted when nothing else exists.
    fallback = Bool()

    def feature_row(self):
        """Dense description used by the answer head.

        """
        return [float(self.source == MEMORY),
                float(self.source == OBSERVATION),
                math.log1p(max(self.score, 0.0)),
                1.0 / (1.0 + self.rank),
                self.context_overlap,
                self.candidate_overlap,
                min(self.n_tokens, 8) / 4.0,
                float(self.fallback)]


#: Number of entries of `AnswerCandidate.feature_row`.
N_CANDIDATE_FEATURES = 8


def question_keywords(question_text):
    """Normalised keywords of a question, in order of appearance.

    """
    out = []
    for token in keywords(question_text):
        for norm in normalize_tokens(token):
            if norm not in out:
                out.append(norm)
    return out


def _overlap(tokens, reference):
    if not reference:
        return 0.0
    tokens = set(tokens)
    return sum(1 for t in reference if t in tokens) / len(reference)


def overlapping_ngrams(text, q_keywords):
    """N-grams of a snippet sharing at least one keyword with the question.

    N-grams are visited by first occurrence (start token, then length) and
    at most `MAX_NGRAMS_PER_SNIPPET` distinct ones are kept.

    """
    tokens = surface_tokens(text)
    keyset = set(q_keywords)
    out, seen = [], set()
    for start in range(len(tokens)):
        for n in range(1, MAX_NGRAM + 1):
            stop = start + n
            if stop > len(tokens):
                break
            ngram = ' '.join(tokens[start:stop])
            norm = normalize_tokens(ngram)
            if not keyset.intersection(norm):
                continue
            key = ' '.join(norm)
            if key in seen:
                continue
            seen.add(key)
            out.append(ngram)
            if len(out) == MAX_NGRAMS_PER_SNIPPET:
                return out
    return out


def enumerate_candidates(state, memory):
    """Ordered and deduplicated answer candidates of a state.

    The memory claim comes first, then the candidates of every snippet in
    rank order: the answer span of the snippet when known, else its n-grams
    sharing a keyword with the question. When nothing is found a single empty
    fallback candidate is returned.

    Parameters
    ----------
    state : State
        Current state, gold answers are never read.

    memory : Memory
        Parametric knowledge of the policy.

    Returns
    -------
    candidates : list of AnswerCandidate

    """
    q_keywords = question_keywords(state.question.text)
    candidates = []
    seen = set()

    def add(text, **kwargs):
        norm = normalize_tokens(text)
        key = ' '.join(norm)
        if not key or key in seen:
            return
        seen.add(key)
        candidates.append(AnswerCandidate(
            text=text, n_tokens=len(norm),
            candidate_overlap=_overlap(q_keywords, norm), **kwargs))

    claimed = memory.lookup(state.question.id) if memory is not None else None
    if claimed:
        add(claimed, source=MEMORY)

    for observation in state.observations:
        for rank, snippet in enumerate(observation.snippets):
            context = _overlap(normalize_tokens(snippet.text), q_keywords)
            if snippet.answer_span is not None:
                texts = [snippet.answer_span]
            else:
                texts = overlapping_ngrams(snippet.text, q_keywords)
            for text in texts:
                add(text, source=OBSERVATION, score=snippet.score, rank=rank,
                    context_overlap=context)

    if not candidates:
        candidates.append(AnswerCandidate(text='', source=OBSERVATION,
                                          fallback=True))
    return candidates
