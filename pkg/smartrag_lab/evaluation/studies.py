# -*- coding: utf-8 -*-
# -----------------------------------------------------------------------------
# Copyright 2024 by SmartRAG Lab Authors, see AUTHORS for more details.
#
# Distributed under the terms of the BSD license.
#
# The full license is in the file LICENCE, distributed with this software.
# -----------------------------------------------------------------------------
"""Studies training several policies on the same world.

"""
import logging
from copy import deepcopy

from ..errors import ContractError
from ..training.pipeline import train, warmup
from ..training.warmup import PI0, PI0_STAR
from .harness import evaluate
from .reports import summarize_reports

logger = logging.getLogger(__name__)


def _copy_config(config):
    clone = type(config)()
    clone.update_members_from_preferences(
        deepcopy(config.preferences_from_members()))
    return clone


def retrieval_k_study(world, config, ks=(1, 4)):
    """Train one policy per number of retrieved snippets.

    Returns
    -------
    rows : list of dict
        {k, em, f1, hit, retrieval_pct} in the order of ks.

    """
    rows = []
    for k in ks:
        cfg = _copy_config(config)
        cfg.env.top_k = int(k)
        result = train(world, cfg)
        report = evaluate(result.params, world, cfg.env,
                          cfg.policy.hash_seed, eval_cfg=cfg.eval)
        rows.append({'k': int(k), 'em': report.em, 'f1': report.f1,
                     'hit': report.hit,
                     'retrieval_pct': report.retrieval_pct})
        logger.info('K=%d: %s', k, rows[-1])
    return rows


def initial_policy_study(world, config):
    """Compare the two warm-up variants before and after PPO.

    Returns
    -------
    rows : list of dict
        {variant, warmup_em, warmup_f1, final_em, final_f1}.

    """
    rows = []
    for variant in (PI0, PI0_STAR):
        cfg = _copy_config(config)
        cfg.train.variant = variant
        initial = warmup(world, cfg)
        before = evaluate(initial, world, cfg.env, cfg.policy.hash_seed,
                          eval_cfg=cfg.eval)
        result = train(world, cfg, initial=initial)
        after = evaluate(result.params, world, cfg.env, cfg.policy.hash_seed,
                         eval_cfg=cfg.eval)
        rows.append({'variant': variant, 'warmup_em': before.em,
                     'warmup_f1': before.f1, 'final_em': after.em,
                     'final_f1': after.f1})
        logger.info('Initial policy %s: %s', variant, rows[-1])
    return rows


def seed_suite(study, world, config, seeds, key):
    """Repeat a study under several run seeds and summarize its rows.

    Parameters
    ----------
    study : callable
        Study called as study(world, config), returning a list of dict.

    world : World
        World shared by every run.

    config : RunConfig
        Configuration whose seed is replaced by each seed in turn.

    seeds : iterable of int
        Run seeds.

    key : str
        Column labelling the rows (k or variant).

    Returns
    -------
    runs : list of list of dict
        Rows of every seed.

    summary : list of dict
        One row per label: the label and, for every other column, the
        seed summary (mean, std and n).

    """
    runs = []
    for seed in seeds:
        cfg = _copy_config(config)
        cfg.seed = int(seed)
        runs.append(study(world, cfg))
    summary = []
    for rows in zip(*runs):
        labels = {r[key] for r in rows}
        if len(labels) != 1:
            raise ContractError('Seed runs disagree on the {} rows'.format(
                key))
        values = [{k: v for k, v in r.items() if k != key} for r in rows]
        summary.append(dict(summarize_reports(values), **{key: rows[0][key]}))
    logger.info('Seed suite over %d seeds: %s', len(runs), summary)
    return runs, summary
