# -*- coding: utf-8 -*-
# -----------------------------------------------------------------------------
# Copyright 2024 by SmartRAG Lab Authors, see AUTHORS for more details.
#
# Distributed under the terms of the BSD license.
#
# The full license is in the file LICENCE, distributed with this software.
# -----------------------------------------------------------------------------
"""Brute force search of the best action plan of every question.

Retrieval being deterministic, the return of a plan is known exactly. The
enumerated plans are a direct answer with any initial candidate, and a
query with any template followed by an answer with any candidate of the
resulting state.

"""
import logging

import numpy as np
from atom.api import Float, Str, Tuple, Typed

from ..errors import EnumerationError
from ..env.episode import apply_action, new_state, rollout
from ..env.records import Action, Record
from ..metrics import exact_match, step_reward, token_f1
from ..policy.base import BasePolicy, ParametricPolicy, PolicyDecision
from ..policy.candidates import enumerate_candidates
from ..policy.heads import SampleMode
from ..policy.templates import apply_template, make_templates

logger = logging.getLogger(__name__)

#: Maximal number of plans enumerated for one question.
MAX_PLANS = 10**4


class OraclePlan(Record):
    """Best plan of a question.

    """
    question_id = Str()

    actions = Tuple(Typed(Action))

    #: Discounted return of the plan.
    value = Float()

    #: Best exact match reachable by any plan.
    best_em = Float()

    #: Best F1 reachable by any plan.
    best_f1 = Float()

    @property
    def first_kind(self):
        return self.actions[0].kind


def _question_plan(question, retriever, memory, env_cfg, templates,
                   max_plans):
    golds = question.gold_answers
    reward_cfg = env_cfg.reward_config()
    s0 = new_state(question)
    direct = enumerate_candidates(s0, memory)
    n_plans = len(direct)

    best_actions, best_value = None, -np.inf
    best_em = best_f1 = 0.0
    for candidate in direct:
        action = Action.answer(candidate.text)
        value = step_reward(action, golds, reward_cfg)
        best_em = max(best_em, exact_match(action.text, golds))
        best_f1 = max(best_f1, token_f1(action.text, golds))
        if value > best_value:
            best_actions, best_value = (action,), value

    if env_cfg.quota >= 1:
        for template in templates:
            query = Action.query(apply_template(template, question.text),
                                 template.id)
            s1 = apply_action(s0, query, retriever, env_cfg).next_state
            candidates = enumerate_candidates(s1, memory)
            n_plans += len(candidates)
            if n_plans > max_plans:
                raise EnumerationError(
                    'Question {} has more than {} plans'
                    .format(question.id, max_plans))
            cost = step_reward(query, golds, reward_cfg)
            for candidate in candidates:
                action = Action.answer(candidate.text)
                reward = step_reward(action, golds, reward_cfg)
                value = cost + reward_cfg.gamma * reward
                best_em = max(best_em, exact_match(action.text, golds))
                best_f1 = max(best_f1, token_f1(action.text, golds))
                if value > best_value:
                    best_actions, best_value = (query, action), value

    return OraclePlan(question_id=question.id, actions=best_actions,
                      value=float(best_value), best_em=float(best_em),
                      best_f1=float(best_f1))


def brute_force_optimal(world, env_cfg, n_templates=4, retriever=None,
                        max_plans=MAX_PLANS):
    """Best plan of every question of a world.

    Ties go to the plan with fewer queries, then to the lower template and
    candidate indices.

    Parameters
    ----------
    world : World
        Questions, corpus and memory.

    env_cfg : EnvConfig
        Episode parameters (quota, top_k, alpha, gamma).

    n_templates : int, optional
        Number of rewrite templates available.

    retriever : BaseRetriever, optional
        Backend over the world corpus.

    max_plans : int, optional
        Guard on the number of plans per question.

    Returns
    -------
    plans : dict
        question id -> OraclePlan.

    """
    retriever = retriever or world.retriever()
    templates = make_templates(n_templates)
    plans = {q.id: _question_plan(q, retriever, world.memory, env_cfg,
                                  templates, max_plans)
             for q in world.questions}
    logger.debug('Enumerated the optimal plans of %d questions', len(plans))
    return plans


class PlanPolicy(BasePolicy):
    """Policy replaying fixed action plans.

    """
    def __init__(self, plans):
        self.plans = plans

    def decide(self, state, kinds, rng, mode):
        actions = self.plans[state.question.id].actions
        return PolicyDecision(action=actions[state.retrieve_count])


def replay_plans(world, plans, env_cfg, retriever=None):
    """Trajectories obtained by replaying plans through the episode loop.

    """
    retriever = retriever or world.retriever()
    policy = PlanPolicy(plans)
    mode = SampleMode.greedy()
    return [rollout(q, policy, retriever, env_cfg, np.random.default_rng(0),
                    mode) for q in world.questions]


def plan_agreement(trajectories, plans):
    """Percentage of episodes whose first action kind matches the plan.

    """
    if not trajectories:
        return 0.0
    agree = sum(1 for t in trajectories
                if t.steps[0].action.kind == plans[t.question_id].first_kind)
    return 100.0 * agree / len(trajectories)


def policy_agreement(params, world, plans, env_cfg, hash_seed,
                     retriever=None):
    """Agreement between the greedy policy and the optimal plans.

    """
    retriever = retriever or world.retriever()
    policy = ParametricPolicy(params, world.memory, hash_seed)
    mode = SampleMode.greedy()
    trajectories = [rollout(q, policy, retriever, env_cfg,
                            np.random.default_rng(0), mode)
                    for q in world.questions]
    return plan_agreement(trajectories, plans)
