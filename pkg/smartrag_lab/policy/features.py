# -*- coding: utf-8 -*-
# -----------------------------------------------------------------------------
# Copyright 2024 by SmartRAG Lab Authors, see AUTHORS for more details.
#
# Distributed under the terms of the BSD license.
#
# The full license is in the file LICENCE, distributed with this software.
# -----------------------------------------------------------------------------
"""Hashed bag of words features of a state and of its answer candidates.

The state vector of dimension D is laid out as three hashed segments of
equal size followed by five scalars:

- segment 1: normalised question tokens (binary)
- segment 2: normalised observation tokens (binary)
- segment 3: wh-word x question token crosses (binary)
- scalars: retrieve count, observation tokens / 100, best snippet score,
  non fallback candidates / 10, bias

Candidates are described by a small dense row (see `AnswerCandidate`) and by
hashed source x question keyword crosses spread over D slots. Since these
crosses only depend on the source, they are stored as two index arrays.

"""
import hashlib
from functools import lru_cache

import numpy as np
from atom.api import Float, Str, Tuple, Typed

from ..env.records import Record
from ..metrics import normalize_tokens
from .candidates import (MEMORY, N_CANDIDATE_FEATURES, OBSERVATION,
                         enumerate_candidates, question_keywords)
from .templates import wh_word

#: Number of scalars closing the state vector.
N_SCALARS = 5

#: Index of each candidate source in the cross index tuple.
SOURCE_INDEX = {MEMORY: 0, OBSERVATION: 1}


@lru_cache(maxsize=2**18)
def hash_index(token, namespace, seed, size):
    """Bucket of a token in a hashed segment.

    The hash is a keyed 64 bits BLAKE2b digest so that it does not depend on
    the interpreter hash randomisation.

    """
    key = int(seed).to_bytes(8, 'little')
    digest = hashlib.blake2b('{}\x1f{}'.format(namespace, token)
                             .encode('utf-8'), digest_size=8, key=key)
    return int.from_bytes(digest.digest(), 'little') % size


def segment_size(dim):
    return (dim - N_SCALARS) // 3


def _frozen(array):
    array.flags.writeable = False
    return array


class PolicyInputs(Record):
    """Everything the heads need to score a state.

    """
    #: State features.
    x = Typed(np.ndarray)

    #: Dense candidate rows (k x N_CANDIDATE_FEATURES).
    cand_dense = Typed(np.ndarray)

    #: Source index of every candidate (0 memory, 1 observation).
    cand_source = Typed(np.ndarray)

    #: Hashed cross indices for each source.
    cross_index = Tuple()

    #: Weight of every hashed cross.
    cross_scale = Float()

    candidates = Tuple()

    digest = Str()

    @property
    def n_candidates(self):
        return len(self.candidates)

    def answer_scores(self, w_ans):
        """Score of every candidate under the answer weights.

        """
        dense = w_ans[:N_CANDIDATE_FEATURES]
        cross = w_ans[N_CANDIDATE_FEATURES:]
        scores = self.cand_dense @ dense
        source_terms = np.array([self.cross_scale * cross[idx].sum()
                                 for idx in self.cross_index])
        return scores + source_terms[self.cand_source]

    def answer_grad(self, g_scores, dim):
        """Gradient of the answer weights given the score gradients.

        """
        grad = np.zeros(N_CANDIDATE_FEATURES + dim)
        grad[:N_CANDIDATE_FEATURES] = self.cand_dense.T @ g_scores
        cross = grad[N_CANDIDATE_FEATURES:]
        for source, idx in enumerate(self.cross_index):
            total = g_scores[self.cand_source == source].sum()
            if total:
                np.add.at(cross, idx, self.cross_scale * total)
        return grad


class Featurizer(object):
    """Turn states into policy inputs.

    Parameters
    ----------
    dim : int
        Dimension D of the state features.

    hash_seed : int
        Key of the feature hashing.

    """
    def __init__(self, dim, hash_seed):
        self.dim = dim
        self.hash_seed = hash_seed
        self.seg = segment_size(dim)

    @classmethod
    def from_config(cls, cfg):
        return cls(cfg.dim, cfg.hash_seed)

    def _set(self, x, offset, tokens, namespace):
        for token in tokens:
            x[offset + hash_index(token, namespace, self.hash_seed,
                                  self.seg)] = 1.0

    def featurize(self, state, memory, candidates=None):
        """State feature vector.

        Parameters
        ----------
        state : State
            State to describe (gold answers are never read).

        memory : Memory
            Parametric knowledge, only used through the candidate count.

        candidates : list, optional
            Precomputed candidates of the state.

        Returns
        -------
        x : numpy.ndarray

        """
        if candidates is None:
            candidates = enumerate_candidates(state, memory)
        x = np.zeros(self.dim)
        q_tokens = normalize_tokens(state.question.text)
        self._set(x, 0, q_tokens, 'q')
        obs_tokens = [t for o in state.observations
                      for t in normalize_tokens(o.concatenated_text)]
        self._set(x, self.seg, obs_tokens, 'o')
        wh = wh_word(state.question.text) or 'none'
        self._set(x, 2 * self.seg, ['{}|{}'.format(wh, t) for t in q_tokens],
                  'x')
        max_score = max((o.max_score for o in state.observations),
                        default=0.0)
        x[-N_SCALARS:] = [state.retrieve_count, len(obs_tokens) / 100.,
                          max_score,
                          sum(1 for c in candidates if not c.fallback) / 10.,
                          1.0]
        return x

    def inputs(self, state, memory):
        """Complete inputs of the heads for a state.

        """
        candidates = enumerate_candidates(state, memory)
        x = self.featurize(state, memory, candidates)
        q_keywords = question_keywords(state.question.text)
        cross_index = tuple(
            _frozen(np.array([hash_index('{}|{}'.format(source, k), 'a',
                                         self.hash_seed, self.dim)
                              for k in q_keywords], dtype=np.int64))
            for source in sorted(SOURCE_INDEX, key=SOURCE_INDEX.get))
        dense = np.array([c.feature_row() for c in candidates], dtype=float)
        sources = np.array([SOURCE_INDEX[c.source] for c in candidates],
                           dtype=np.int64)
        digest = hashlib.blake2b(x.tobytes(), digest_size=8).hexdigest()
        return PolicyInputs(x=_frozen(x), cand_dense=_frozen(dense),
                            cand_source=_frozen(sources),
                            cross_index=cross_index,
                            cross_scale=1.0 / max(len(q_keywords), 1),
                            candidates=tuple(candidates), digest=digest)


def answer_feature_matrix(inputs, dim):
    """Dense candidate feature matrix (k x (N_CANDIDATE_FEATURES + D)).

    """
    phi = np.zeros((inputs.n_candidates, N_CANDIDATE_FEATURES + dim))
    phi[:, :N_CANDIDATE_FEATURES] = inputs.cand_dense
    for row, source in enumerate(inputs.cand_source):
        np.add.at(phi[row, N_CANDIDATE_FEATURES:], inputs.cross_index[source],
                  inputs.cross_scale)
    return phi


def answer_dim(dim):
    """Size of the candidate feature vector for a state dimension D.

    """
    return N_CANDIDATE_FEATURES + dim
