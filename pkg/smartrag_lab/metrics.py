# -*- coding: utf-8 -*-
# -----------------------------------------------------------------------------
# Copyright 2024 by SmartRAG Lab Authors, see AUTHORS for more details.
#
# Distributed under the terms of the BSD license.
#
# The full license is in the file LICENCE, distributed with this software.
# -----------------------------------------------------------------------------
"""Answer metrics and rewards.

Normalisation follows the usual open domain QA convention: lower case,
punctuation and English articles removed, whitespace tokenisation.

"""
import re
import string
from collections import Counter

from .errors import ContractError
from .env.records import QUERY

_PUNCTUATION = set(string.punctuation)

_ARTICLES = re.compile(r'\b(a|an|the)\b')


def normalize_tokens(text):
    """Normalise a piece of text into a list of tokens.

    Parameters
    ----------
    text : str
        Text to normalise.

    Returns
    -------
    tokens : list of str

    """
    text = ''.join(ch for ch in text.lower() if ch not in _PUNCTUATION)
    text = _ARTICLES.sub(' ', text)
    return text.split()


def _check_golds(golds):
    if not golds:
        raise ContractError('At least one gold answer is required.')


def exact_match(prediction, golds):
    """1 if the normalised prediction equals one of the normalised golds.

    """
    _check_golds(golds)
    pred = normalize_tokens(prediction)
    return int(any(pred == normalize_tokens(g) for g in golds))


def _f1(pred_tokens, gold_tokens):
    if not pred_tokens and not gold_tokens:
        return 1.0
    if not pred_tokens or not gold_tokens:
        return 0.0
    common = Counter(pred_tokens) & Counter(gold_tokens)
    n_same = sum(common.values())
    if n_same == 0:
        return 0.0
    precision = n_same / len(pred_tokens)
    recall = n_same / len(gold_tokens)
    return 2 * precision * recall / (precision + recall)


def token_f1(prediction, golds):
    """Best token level F1 between the prediction and the golds.

    """
    _check_golds(golds)
    pred = normalize_tokens(prediction)
    return max(_f1(pred, normalize_tokens(g)) for g in golds)


def _contains(tokens, sub):
    n = len(sub)
    return any(tokens[i:i + n] == sub for i in range(len(tokens) - n + 1))


def hit(observation_text, golds):
    """1 if a gold appears as a contiguous run of the observation tokens.

    Golds normalising to nothing never hit.

    """
    tokens = normalize_tokens(observation_text)
    for gold in golds:
        sub = normalize_tokens(gold)
        if sub and _contains(tokens, sub):
            return 1
    return 0


def step_reward(action, golds, cfg):
    """Reward of a single action.

    A query costs ``cfg.alpha``, an answer earns exact match plus F1.

    Parameters
    ----------
    action : Action
        Action taken by the policy.

    golds : list of str
        Gold answers of the question.

    cfg : RewardConfig
        Reward parameters.

    Returns
    -------
    reward : float

    """
    if action.kind == QUERY:
        return -cfg.alpha
    return exact_match(action.text, golds) + token_f1(action.text, golds)


def discounted_return(rewards, gamma):
    """Sum of the rewards discounted by gamma.

    """
    if len(rewards) == 0:
        raise ContractError('Cannot compute the return of an empty episode.')
    total = 0.0
    factor = 1.0
    for r in rewards:
        total += factor * r
        factor *= gamma
    return total
