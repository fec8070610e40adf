# -*- coding: utf-8 -*-
# -----------------------------------------------------------------------------
# Copyright 2024 by SmartRAG Lab Authors, see AUTHORS for more details.
#
# Distributed under the terms of the BSD license.
#
# The full license is in the file LICENCE, distributed with this software.
# -----------------------------------------------------------------------------
"""Warm-up followed by PPO iterations.

Every stage draws from its own stream derived from the run seed so that two
runs sharing a seed produce identical checkpoints.

"""
import logging

from atom.api import Atom, List, Typed

from ..config import make_rng
from ..evaluation.harness import evaluate
from ..policy.params import PolicyParams, init_params
from .optim import make_optimizer
from .ppo import ppo_update
from .rollouts import collect_rollouts, compute_gae
from .warmup import RewriteOracle, behavior_clone, build_warmup_dataset

logger = logging.getLogger(__name__)

#: Columns of the per-iteration metrics log.
METRICS_COLUMNS = ('iter', 'mean_reward', 'kl', 'policy_loss', 'value_loss',
                   'entropy', 'eval_em', 'eval_f1', 'eval_hit',
                   'retrieval_pct')


class TrainingResult(Atom):
    """Outcome of a training run.

    """
    #: Policy at the end of the warm-up (reference of the KL penalty).
    warmup_params = Typed(PolicyParams)

    #: Policy after the last iteration.
    params = Typed(PolicyParams)

    #: Policy after the warm-up then after every iteration.
    checkpoints = List()

    #: One dict per row of the metrics log (warm-up first).
    metrics = List()


def warmup(world, config, retriever=None):
    """Initial policy obtained by behavior cloning.

    Parameters
    ----------
    world : World
        Training world (questions, corpus, memory, rewrite oracle).

    config : RunConfig
        Resolved run configuration (seed set).

    retriever : BaseRetriever, optional
        Backend over the world corpus, built when omitted.

    Returns
    -------
    params : PolicyParams

    """
    seed = config.seed
    retriever = retriever or world.retriever()
    params = init_params(config.policy, make_rng(seed, 'init'))
    oracle = RewriteOracle(oracle_map=dict(world.oracle_map),
                           q=config.train.oracle_q,
                           n_templates=config.policy.n_templates)
    dataset = build_warmup_dataset(world.questions, retriever, oracle,
                                   world.memory, config.train.variant,
                                   config.env, make_rng(seed, 'warmup-data'))
    if not config.bc.epochs:
        return params
    return behavior_clone(params, dataset, config.bc,
                          make_rng(seed, 'warmup'), world.memory, config.env,
                          config.policy.hash_seed, config.ppo.max_grad_norm)


def _eval_columns(report):
    return {'eval_em': report.em, 'eval_f1': report.f1,
            'eval_hit': report.hit, 'retrieval_pct': report.retrieval_pct}


def train(world, config, iterations=None, initial=None, eval_world=None):
    """Warm up a policy then improve it with PPO.

    Parameters
    ----------
    world : World
        Training world.

    config : RunConfig
        Resolved run configuration (seed set).

    iterations : int, optional
        Number of PPO iterations, config.train.iterations by default.

    initial : PolicyParams, optional
        Warm policy to start from instead of running the warm-up.

    eval_world : World, optional
        World used by the per-iteration evaluation (the training world by
        default).

    Returns
    -------
    result : TrainingResult

    """
    seed = config.seed
    iterations = config.train.iterations if iterations is None else \
        iterations
    retriever = world.retriever()
    eval_world = eval_world or world
    eval_retriever = retriever if eval_world is world else None
    hash_seed = config.policy.hash_seed

    def evaluation(params):
        return evaluate(params, eval_world, config.env, hash_seed,
                        eval_cfg=config.eval, retriever=eval_retriever)

    params = initial if initial is not None else warmup(world, config,
                                                        retriever)
    reference = params
    report = evaluation(params)
    row = dict.fromkeys(METRICS_COLUMNS)
    row.update(_eval_columns(report), iter=0, mean_reward=report.mean_reward)
    metrics = [row]
    checkpoints = [params]
    logger.info('Warm-up policy: EM %.2f F1 %.2f retrieval %.1f%%',
                report.em, report.f1, report.retrieval_pct)

    optimizer = make_optimizer(config.ppo.optimizer, config.ppo.lr)
    rollout_rng = make_rng(seed, 'rollouts')
    update_rng = make_rng(seed, 'ppo')
    workers = config.train.resolved_workers()
    for iteration in range(1, iterations + 1):
        batch = collect_rollouts(
            params, config.env, world.questions, retriever, world.memory,
            config.ppo.sampling_budget, rollout_rng, hash_seed,
            workers=workers, ref_params=reference,
            reward_cfg=config.reward_config())
        batch = compute_gae(batch, config.env.gamma, config.ppo.gae_lambda)
        params, stats = ppo_update(params, batch, config.ppo, update_rng,
                                   optimizer)
        report = evaluation(params)
        row = {'iter': iteration, 'mean_reward': stats['iteration_reward'],
               'kl': stats['kl'], 'policy_loss': stats['policy_loss'],
               'value_loss': stats['value_loss'],
               'entropy': stats['entropy']}
        row.update(_eval_columns(report))
        metrics.append(row)
        checkpoints.append(params)
        logger.info('Iteration %d: reward %.4f kl %.5f EM %.2f F1 %.2f '
                    'retrieval %.1f%%', iteration, row['mean_reward'],
                    row['kl'], report.em, report.f1, report.retrieval_pct)

    return TrainingResult(warmup_params=reference, params=params,
                          checkpoints=checkpoints, metrics=metrics)
