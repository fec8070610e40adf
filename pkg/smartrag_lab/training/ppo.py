# -*- coding: utf-8 -*-
# -----------------------------------------------------------------------------
# Copyright 2024 by SmartRAG Lab Authors, see AUTHORS for more details.
#
# Distributed under the terms of the BSD license.
#
# The full license is in the file LICENCE, distributed with this software.
# -----------------------------------------------------------------------------
"""Clipped surrogate objective of proximal policy optimisation.

loss = -mean(min(rho A, clip(rho, 1 - eps, 1 + eps) A))
       + value_coef mean((V - R)^2) - entropy_coef mean(H)

where rho is the ratio between the new and the old composite probabilities
of the recorded actions.

"""
import logging

import numpy as np

from ..errors import NumericError
from ..policy.heads import accumulate_gradients, evaluate_choice, new_gradients
from .optim import clip_gradients, make_optimizer

logger = logging.getLogger(__name__)

#: Keys of the statistics returned by ppo_update.
UPDATE_STATS = ('iteration_reward', 'kl', 'policy_loss', 'value_loss',
                'entropy')


def normalized_advantages(advantages, normalize):
    """Zero mean, unit variance advantages (when asked and possible).

    """
    advantages = np.asarray(advantages, dtype=float)
    if not normalize or len(advantages) < 2:
        return advantages
    return (advantages - advantages.mean()) / (advantages.std() + 1e-8)


def _surrogate(params, batch, cfg, with_grad):
    n = len(batch)
    advantages = batch.advantages
    grads = new_gradients(params) if with_grad else None
    policy_loss = value_loss = entropy = kl = 0.0
    max_ratio = 0.0
    low, high = 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps
    for i, choice in enumerate(batch.choices):
        ev, log_prob = evaluate_choice(params, choice)
        a = advantages[i]
        ratio = np.exp(log_prob - batch.old_log_probs[i])
        max_ratio = max(max_ratio, ratio)
        surr1 = ratio * a
        surr2 = min(max(ratio, low), high) * a
        policy_loss -= min(surr1, surr2) / n
        error = ev.value - batch.returns[i]
        value_loss += error * error / n
        entropy += ev.entropy / n
        kl += (batch.old_log_probs[i] - log_prob) / n
        if with_grad:
            c_logp = -ratio * a / n if surr1 <= surr2 else 0.0
            accumulate_gradients(params, ev, choice, grads, c_logp=c_logp,
                                 c_entropy=-cfg.entropy_coef / n,
                                 c_value=2.0 * cfg.value_coef * error / n)

    loss = policy_loss + cfg.value_coef * value_loss - \
        cfg.entropy_coef * entropy
    stats = {'policy_loss': float(policy_loss),
             'value_loss': float(value_loss),
             'entropy': float(entropy), 'approx_kl': float(kl),
             'mean_reward': float(np.mean(batch.rewards))}
    if not np.isfinite(loss):
        diagnostics = dict(stats, max_ratio=float(max_ratio), n_steps=n)
        raise NumericError('Non finite PPO loss', diagnostics)
    return float(loss), stats, grads


def ppo_surrogate_loss(params, batch, cfg):
    """Clipped surrogate loss of a batch holding advantages.

    Parameters
    ----------
    params : PolicyParams
        Current weights.

    batch : RolloutBatch
        Steps with their old log probabilities, advantages and returns.

    cfg : PpoConfig
        Clipping and coefficients. The advantages of the batch are used as
        they are, ppo_update normalises them beforehand.

    Returns
    -------
    loss : float

    stats : dict
        policy_loss, value_loss, entropy, approx_kl and mean_reward.

    """
    loss, stats, _ = _surrogate(params, batch, cfg, False)
    return loss, stats


def ppo_loss_and_grad(params, batch, cfg):
    """Surrogate loss, statistics and analytic gradient.

    """
    return _surrogate(params, batch, cfg, True)


def ppo_update(params, batch, cfg, rng, optimizer=None):
    """Descend the surrogate loss on shuffled mini-batches.

    Advantages are normalised once over the whole batch when requested, then
    the steps are shuffled. The final short mini-batch of an epoch is kept.

    Parameters
    ----------
    params : PolicyParams
        Weights which sampled the batch.

    batch : RolloutBatch
        Batch holding advantages.

    cfg : PpoConfig
        PPO parameters.

    rng : numpy.random.Generator
        Stream used to shuffle the steps.

    optimizer : Adam or SGD, optional
        Optimizer whose state persists across iterations, built from the
        configuration when omitted.

    Returns
    -------
    params : PolicyParams

    stats : dict
        Aggregates over the mini-batches (see UPDATE_STATS).

    """
    if optimizer is None:
        optimizer = make_optimizer(cfg.optimizer, cfg.lr)
    batch = batch.with_advantages(
        normalized_advantages(batch.advantages, cfg.normalize_advantages),
        batch.returns)
    n = len(batch)
    history = []
    for epoch in range(cfg.epochs_per_iter):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            mini = batch.subset(order[start:start + cfg.batch_size])
            _, stats, grads = ppo_loss_and_grad(params, mini, cfg)
            params = optimizer.step(params,
                                    clip_gradients(grads, cfg.max_grad_norm))
            history.append(stats)
            logger.debug('PPO mini-batch %d/%d: %s', epoch, start, stats)

    return params, {'iteration_reward': batch.mean_return,
                    'kl': float(np.mean([s['approx_kl'] for s in history])),
                    'policy_loss': float(np.mean([s['policy_loss']
                                                  for s in history])),
                    'value_loss': float(np.mean([s['value_loss']
                                                 for s in history])),
                    'entropy': float(np.mean([s['entropy'] for s in history]))}
