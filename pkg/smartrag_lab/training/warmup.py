# -*- coding: utf-8 -*-
# -----------------------------------------------------------------------------
# Copyright 2024 by SmartRAG Lab Authors, see AUTHORS for more details.
#
# Distributed under the terms of the BSD license.
#
# The full license is in the file LICENCE, distributed with this software.
# -----------------------------------------------------------------------------
"""Warm-up dataset and behavior cloning.

Three kinds of examples teach the output format before reinforcement:

- (i) the bare question is answered directly
- (ii) the bare question is turned into a query using the rewrite oracle
- (iii) the question plus the observation of that query is answered

The knowledge filtered variant keeps only (i) for the questions the base
model already answers well (memory F1 >= 0.2) and only (ii) and (iii) for
the others. Questions whose designated rewrite retrieves no candidate
reaching that F1 are answered directly as well.

"""
import logging

import numpy as np
from atom.api import Enum, Float, Int, Typed

from ..errors import ConfigurationError, ContractError, NumericError
from ..env.episode import allowed_action_kinds, apply_action, new_state
from ..env.records import ANSWER, QUERY, Action, Record, State
from ..metrics import token_f1
from ..policy.candidates import enumerate_candidates
from ..policy.features import Featurizer
from ..policy.heads import (Choice, KIND_INDEX, accumulate_gradients,
                            evaluate_choice, mask_of, new_gradients)
from ..policy.templates import apply_template, make_templates
from .optim import clip_gradients, make_optimizer

logger = logging.getLogger(__name__)

#: Memory F1 above which a question is considered known by the base model.
KNOWN_F1 = 0.2

PI0 = 'pi0'

PI0_STAR = 'pi0_star'


class SftExample(Record):
    """Supervised target for one state.

    """
    state = Typed(State)

    target_kind = Enum(ANSWER, QUERY)

    #: Template id, present iff the target kind is Query.
    target_template = Typed(int)

    #: Candidate text, present iff the target kind is Answer.
    target_candidate_text = Typed(str)

    #: Example type (1, 2 or 3).
    kind = Int()

    def __init__(self, **kwargs):
        query = kwargs.get('target_kind') == QUERY
        if query != (kwargs.get('target_template') is not None) or \
                query == (kwargs.get('target_candidate_text') is not None):
            raise ContractError('A query example needs a template, an '
                                'answer example a candidate text.')
        super(SftExample, self).__init__(**kwargs)


class RewriteOracle(Record):
    """Scripted rewriter returning the designated template with probability q.

    Otherwise a different template is drawn uniformly.

    """
    #: question id -> designated template id.
    oracle_map = Typed(dict)

    q = Float(0.7)

    n_templates = Int(4)

    def choose(self, question_id, rng):
        """Template id proposed for a question.

        """
        try:
            designated = self.oracle_map[question_id]
        except KeyError as e:
            msg = 'The rewrite oracle knows no template for question {}'
            raise ConfigurationError(msg.format(question_id)) from e
        designated = min(designated, self.n_templates - 1)
        others = [t for t in range(self.n_templates) if t != designated]
        if not others or rng.random() < self.q:
            return designated
        return others[int(rng.integers(len(others)))]


def best_candidate_text(state, memory, golds):
    """Text of the candidate closest to the golds (first one on ties).

    """
    candidates = enumerate_candidates(state, memory)
    scores = [token_f1(c.text, golds) for c in candidates]
    return candidates[int(np.argmax(scores))].text


def is_known(question, memory):
    """Whether the memory answer of a question reaches the known F1.

    """
    claimed = memory.lookup(question.id) if memory is not None else None
    return bool(claimed) and token_f1(claimed, question.gold_answers) >= \
        KNOWN_F1


def retrieval_helps(question, retriever, rewrite_oracle, memory, env_cfg):
    """Whether the designated rewrite of a question retrieves a good answer.

    """
    designated = min(rewrite_oracle.oracle_map.get(question.id, 0),
                     rewrite_oracle.n_templates - 1)
    template = make_templates(rewrite_oracle.n_templates)[designated]
    query = apply_template(template, question.text)
    s1 = apply_action(new_state(question), Action.query(query, designated),
                      retriever, env_cfg).next_state
    best = best_candidate_text(s1, memory, question.gold_answers)
    return token_f1(best, question.gold_answers) >= KNOWN_F1


def build_warmup_dataset(questions, retriever, rewrite_oracle, memory,
                         variant, env_cfg, rng):
    """Build the supervised warm-up examples.

    Parameters
    ----------
    questions : list of Question
        Training questions.

    retriever : BaseRetriever
        Backend producing the observations of type (iii) examples.

    rewrite_oracle : RewriteOracle
        Source of the query templates.

    memory : Memory
        Parametric knowledge of the base model.

    variant : {'pi0', 'pi0_star'}
        Initial policy variant.

    env_cfg : EnvConfig
        Episode parameters (top_k and quota).

    rng : numpy.random.Generator
        Stream used by the rewrite oracle.

    Returns
    -------
    examples : list of SftExample

    """
    if variant not in (PI0, PI0_STAR):
        raise ConfigurationError('Unknown warm-up variant {}'.format(variant),
                                 'train.variant')
    templates = make_templates(rewrite_oracle.n_templates)
    examples = []
    for question in questions:
        s0 = new_state(question)
        golds = question.gold_answers
        direct = is_known(question, memory)
        if variant == PI0_STAR and not direct and env_cfg.quota >= 1:
            direct = not retrieval_helps(question, retriever, rewrite_oracle,
                                         memory, env_cfg)
        if variant == PI0 or direct:
            examples.append(SftExample(
                state=s0, target_kind=ANSWER, kind=1,
                target_candidate_text=best_candidate_text(s0, memory, golds)))
        if variant == PI0_STAR and direct:
            continue
        if env_cfg.quota < 1:
            continue
        template = rewrite_oracle.choose(question.id, rng)
        query = apply_template(templates[template], question.text)
        examples.append(SftExample(state=s0, target_kind=QUERY,
                                   target_template=template, kind=2))
        outcome = apply_action(s0, Action.query(query, template), retriever,
                               env_cfg)
        s1 = outcome.next_state
        examples.append(SftExample(
            state=s1, target_kind=ANSWER, kind=3,
            target_candidate_text=best_candidate_text(s1, memory, golds)))
    logger.info('Built %d warm-up examples (%s) for %d questions',
                len(examples), variant, len(questions))
    return examples


def example_choice(example, featurizer, memory, env_cfg):
    """Head indices of the target of an example.

    """
    state = example.state
    inputs = featurizer.inputs(state, memory)
    allowed = mask_of(allowed_action_kinds(state, env_cfg))
    if example.target_kind == QUERY:
        sub = example.target_template
    else:
        texts = [c.text for c in inputs.candidates]
        sub = texts.index(example.target_candidate_text)
    return Choice(inputs=inputs, allowed=allowed,
                  kind=KIND_INDEX[example.target_kind], sub=sub)


def bc_loss_and_grad(params, choices):
    """Mean negative log likelihood of the targets and its gradient.

    """
    n = len(choices)
    grads = new_gradients(params)
    loss = 0.0
    for choice in choices:
        ev, log_prob = evaluate_choice(params, choice)
        loss -= log_prob / n
        accumulate_gradients(params, ev, choice, grads, c_logp=-1.0 / n)
    if not np.isfinite(loss):
        raise NumericError('Non finite behavior cloning loss',
                           {'batch_size': n})
    return loss, grads


def bc_loss(params, choices):
    """Mean negative log likelihood of the targets.

    """
    return -sum(evaluate_choice(params, c)[1] for c in choices) / len(choices)


def behavior_clone(params, dataset, cfg, rng, memory, env_cfg, hash_seed,
                   max_grad_norm=0.0):
    """Fit the heads to the warm-up examples.

    Parameters
    ----------
    params : PolicyParams
        Initial weights (left untouched).

    dataset : list of SftExample
        Warm-up examples.

    cfg : BcConfig
        Learning rate, batch size, epochs and optimizer.

    rng : numpy.random.Generator
        Stream used to shuffle the examples.

    memory : Memory
        Parametric knowledge used to enumerate the candidates.

    env_cfg : EnvConfig
        Episode parameters defining the allowed kinds.

    hash_seed : int
        Key of the feature hashing.

    Returns
    -------
    params : PolicyParams
        Trained weights.

    """
    if not dataset:
        raise ContractError('Behavior cloning needs at least one example.')
    featurizer = Featurizer(params.dim, hash_seed)
    choices = [example_choice(e, featurizer, memory, env_cfg)
               for e in dataset]
    optimizer = make_optimizer(cfg.optimizer, cfg.lr)
    n = len(choices)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            batch = [choices[i] for i in order[start:start + cfg.batch_size]]
            loss, grads = bc_loss_and_grad(params, batch)
            total += loss * len(batch)
            params = optimizer.step(params, clip_gradients(grads,
                                                           max_grad_norm))
        logger.debug('Behavior cloning epoch %d: mean NLL %.4f', epoch,
                     total / n)
    logger.info('Behavior cloning done (%d examples, %d epochs)', n,
                cfg.epochs)
    return params
