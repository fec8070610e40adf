# -*- coding: utf-8 -*-
# -----------------------------------------------------------------------------
# Copyright 2024 by SmartRAG Lab Authors, see AUTHORS for more details.
#
# Distributed under the terms of the BSD license.
#
# The full license is in the file LICENCE, distributed with this software.
# -----------------------------------------------------------------------------
"""Evaluation of a policy on a world.

:Contains:
    EvalReport :
        Aggregated metrics of one evaluation.
    evaluate :
        One deterministic episode per question.
    threshold_sweep :
        Metrics as a function of the threshold on the Answer logit.
    transfer_report :
        Retrieval ratio of each knowledge category.
    ablation_replace_query, ablation_replace_generator :
        Evaluations with one of the trained heads neutralised.
    reference_points :
        No retrieval, full retrieval and unmodified greedy rows.

"""
import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from atom.api import Atom, Dict, Float, Int, Tuple, Value

from ..config import EvalConfig
from ..errors import ContractError
from ..env.episode import (allowed_action_kinds, collected_text, new_state,
                           rollout)
from ..metrics import discounted_return, exact_match, hit, token_f1
from ..policy.base import ParametricPolicy
from ..policy.heads import SampleMode, embed, log_softmax
from ..worlds.generation import CATEGORIES

logger = logging.getLogger(__name__)

#: Fields of a report written in tables.
REPORT_COLUMNS = ('em', 'f1', 'hit', 'retrieval_pct', 'mean_reward', 'n')


class EvalReport(Atom):
    """Metrics of one evaluation, EM, F1, hit and retrieval in percent.

    """
    em = Float()

    f1 = Float()

    #: None when no episode enters the hit denominator.
    hit = Value()

    retrieval_pct = Float()

    mean_reward = Float()

    n = Int()

    #: category -> retrieval percentage (None for empty categories).
    category_ratios = Dict()

    #: Description of the evaluation (mode, threshold, world).
    config = Dict()

    trajectories = Tuple()

    def to_row(self):
        return {name: getattr(self, name) for name in REPORT_COLUMNS}


def _rollouts(params, questions, retriever, memory, env_cfg, hash_seed, mode,
              workers):
    policy = ParametricPolicy(params, memory, hash_seed)

    def run(question):
        return rollout(question, policy, retriever, env_cfg,
                       np.random.default_rng(0), mode)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, questions))
    return [run(q) for q in questions]


def category_ratios(trajectories, categories):
    """Percentage of retrieving episodes within each category.

    """
    ratios = {}
    for category in CATEGORIES:
        selected = [t for t in trajectories
                    if categories.get(t.question_id) == category]
        if not selected:
            logger.warning('No question of category %s, its retrieval ratio '
                           'is undefined', category)
            ratios[category] = None
            continue
        ratios[category] = 100.0 * sum(1 for t in selected
                                       if t.n_queries) / len(selected)
    return ratios


def evaluate(params, world, env_cfg, hash_seed, mode=None, eval_cfg=None,
             retriever=None, questions=None, workers=1):
    """Run one episode per question and aggregate the metrics.

    Parameters
    ----------
    params : PolicyParams
        Evaluated policy.

    world : World
        Questions, corpus and memory.

    env_cfg : EnvConfig
        Episode parameters.

    hash_seed : int
        Key of the feature hashing.

    mode : SampleMode, optional
        Greedy decoding by default.

    eval_cfg : EvalConfig, optional
        Hit denominator option.

    retriever : BaseRetriever, optional
        Backend over the world corpus, built when omitted.

    questions : list of Question, optional
        Subset of the world questions.

    workers : int, optional
        Number of threads running episodes.

    Returns
    -------
    report : EvalReport

    """
    mode = mode or SampleMode.greedy()
    eval_cfg = eval_cfg or EvalConfig()
    retriever = retriever or world.retriever()
    questions = list(world.questions if questions is None else questions)
    if not questions:
        raise ContractError('Cannot evaluate a policy on no question.')
    trajectories = _rollouts(params, questions, retriever, world.memory,
                             env_cfg, hash_seed, mode, workers)

    ems, f1s, hits, returns = [], [], [], []
    for question, trajectory in zip(questions, trajectories):
        golds = question.gold_answers
        ems.append(exact_match(trajectory.final_answer, golds))
        f1s.append(token_f1(trajectory.final_answer, golds))
        returns.append(discounted_return(trajectory.rewards, env_cfg.gamma))
        if trajectory.n_queries:
            hits.append(hit(collected_text(trajectory), golds))
        elif eval_cfg.hit_all_episodes:
            hits.append(0)
    n = len(questions)
    retrieving = sum(1 for t in trajectories if t.n_queries)
    ratios = category_ratios(trajectories, world.category_map())
    return EvalReport(em=100.0 * float(np.mean(ems)),
                      f1=100.0 * float(np.mean(f1s)),
                      hit=100.0 * float(np.mean(hits)) if hits else None,
                      retrieval_pct=100.0 * retrieving / n,
                      mean_reward=float(np.mean(returns)), n=n,
                      category_ratios=ratios,
                      config={'mode': mode.kind, 'tau': mode.tau,
                              'threshold_on': mode.threshold_on,
                              'force_template': mode.force_template,
                              'world': world.name},
                      trajectories=tuple(trajectories))


def answer_statistics(params, world, env_cfg, hash_seed, threshold_on='logit'):
    """Thresholded quantity of every initial state allowing a query.

    """
    policy = ParametricPolicy(params, world.memory, hash_seed)
    stats = []
    for question in world.questions:
        state = new_state(question)
        if len(allowed_action_kinds(state, env_cfg)) < 2:
            continue
        logits = params.W_dec @ embed(params, policy.inputs(state).x)
        if threshold_on == 'logit':
            stats.append(float(logits[0]))
        else:
            stats.append(float(np.exp(log_softmax(logits))[0]))
    return stats


def default_thresholds(params, world, env_cfg, hash_seed, eval_cfg):
    """Evenly spaced thresholds covering the observed range.

    Logit grids span the initial Answer logits widened by 0.5 on both
    sides, probability grids span [0, 1].

    """
    n = eval_cfg.sweep_points
    if eval_cfg.threshold_on == 'probability':
        return list(np.linspace(0.0, 1.0, n))
    stats = answer_statistics(params, world, env_cfg, hash_seed) or [0.0]
    return list(np.linspace(min(stats) - 0.5, max(stats) + 0.5, n))


def threshold_sweep(params, world, env_cfg, hash_seed, taus=None,
                    eval_cfg=None, workers=1):
    """Evaluate the policy for a list of thresholds.

    Returns
    -------
    rows : list of dict
        {tau, retrieval_pct, em, f1, hit} sorted by increasing tau.

    """
    eval_cfg = eval_cfg or EvalConfig()
    if taus is None:
        taus = default_thresholds(params, world, env_cfg, hash_seed,
                                  eval_cfg)
    if len(taus) == 0:
        raise ContractError('A threshold sweep needs at least one value.')
    retriever = world.retriever()
    rows = []
    for tau in sorted(float(t) for t in taus):
        mode = SampleMode.threshold(tau, eval_cfg.threshold_on)
        report = evaluate(params, world, env_cfg, hash_seed, mode, eval_cfg,
                          retriever=retriever, workers=workers)
        rows.append({'tau': tau, 'retrieval_pct': report.retrieval_pct,
                     'em': report.em, 'f1': report.f1, 'hit': report.hit})
        logger.debug('Threshold %.4f: %s', tau, rows[-1])
    return rows


def transfer_report(params, world, env_cfg, hash_seed, eval_cfg=None,
                    workers=1):
    """Retrieval ratio of each category at a fixed Answer probability.

    Returns
    -------
    report : EvalReport
        Its category_ratios hold None for categories absent from the world.

    """
    eval_cfg = eval_cfg or EvalConfig()
    mode = SampleMode.threshold(eval_cfg.transfer_threshold, 'probability')
    return evaluate(params, world, env_cfg, hash_seed, mode, eval_cfg,
                    workers=workers)


def ablation_replace_query(params, world, env_cfg, hash_seed, eval_cfg=None,
                           mode=None, workers=1):
    """Evaluation in which every query is the bare question.

    """
    mode = mode or SampleMode.greedy()
    forced = SampleMode(kind=mode.kind, tau=mode.tau,
                        threshold_on=mode.threshold_on, force_template=0)
    return evaluate(params, world, env_cfg, hash_seed, forced, eval_cfg,
                    workers=workers)


def ablation_replace_generator(params_trained, params_warmup, world, env_cfg,
                               hash_seed, eval_cfg=None, mode=None,
                               workers=1):
    """Evaluation of the trained policy answering with the warm-up head.

    The decision and rewrite heads (hence the queries) are the trained ones.

    """
    params_trained.check_compatible(params_warmup)
    swapped = params_trained.replace(w_ans=params_warmup.w_ans)
    return evaluate(swapped, world, env_cfg, hash_seed, mode, eval_cfg,
                    workers=workers)


def reference_points(params, world, env_cfg, hash_seed, eval_cfg=None,
                     workers=1):
    """Rows bracketing the policy between never and always retrieving.

    Returns
    -------
    reports : dict
        'no_retrieval', 'full_retrieval' and 'policy' reports.

    """
    retriever = world.retriever()
    modes = {'no_retrieval': SampleMode.threshold(-np.inf),
             'full_retrieval': SampleMode.threshold(np.inf),
             'policy': SampleMode.greedy()}
    return {name: evaluate(params, world, env_cfg, hash_seed, mode,
                           eval_cfg, retriever=retriever, workers=workers)
            for name, mode in modes.items()}
