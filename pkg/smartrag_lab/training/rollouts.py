# -*- coding: utf-8 -*-
# -----------------------------------------------------------------------------
# Copyright 2024 by SmartRAG Lab Authors, see AUTHORS for more details.
#
# Distributed under the terms of the BSD license.
#
# The full license is in the file LICENCE, distributed with this software.
# -----------------------------------------------------------------------------
"""On-policy rollout collection and generalized advantage estimation.

"""
import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from atom.api import Float, Int, Tuple, Typed

from ..errors import ContractError
from ..env.episode import rollout
from ..env.records import Record
from ..metrics import discounted_return
from ..policy.base import ParametricPolicy
from ..policy.heads import SampleMode, evaluate_choice

logger = logging.getLogger(__name__)

#: Number of episodes seeded together before being run.
WAVE_SIZE = 64

#: Exclusive upper bound of the episode seeds.
SEED_BOUND = 2**62


def _frozen(array):
    array = np.asarray(array, dtype=float)
    array.flags.writeable = False
    return array


class RolloutBatch(Record):
    """Steps of several episodes flattened in collection order.

    """
    #: Head indices and inputs of every step.
    choices = Tuple()

    #: Composite log probabilities at sampling time.
    old_log_probs = Typed(np.ndarray)

    #: Value estimates at sampling time.
    values = Typed(np.ndarray)

    #: Rewards used for training (KL shaped when requested).
    rewards = Typed(np.ndarray)

    #: Whether a step closes its episode.
    dones = Typed(np.ndarray)

    #: Set by compute_gae.
    advantages = Typed(np.ndarray)

    #: Set by compute_gae.
    returns = Typed(np.ndarray)

    #: Collected episodes.
    trajectories = Tuple()

    #: Mean discounted return of the episodes (unshaped rewards).
    mean_return = Float()

    #: Mean log ratio between the sampling and the reference policies.
    ref_kl = Float()

    n_episodes = Int()

    def __len__(self):
        return len(self.choices)

    def with_advantages(self, advantages, returns):
        return RolloutBatch(
            choices=self.choices, old_log_probs=self.old_log_probs,
            values=self.values, rewards=self.rewards, dones=self.dones,
            advantages=_frozen(advantages), returns=_frozen(returns),
            trajectories=self.trajectories, mean_return=self.mean_return,
            ref_kl=self.ref_kl, n_episodes=self.n_episodes)

    def subset(self, indices):
        """Mini-batch made of the given step indices.

        """
        idx = np.asarray(indices, dtype=np.int64)

        def take(array):
            return None if array is None else _frozen(array[idx])

        return RolloutBatch(
            choices=tuple(self.choices[i] for i in idx),
            old_log_probs=take(self.old_log_probs), values=take(self.values),
            rewards=take(self.rewards), dones=self.dones[idx],
            advantages=take(self.advantages), returns=take(self.returns),
            n_episodes=self.n_episodes)


def collect_rollouts(params, env_cfg, questions, retriever, memory, budget,
                     rng, hash_seed, workers=1, ref_params=None,
                     reward_cfg=None):
    """Sample episodes with the current policy until the budget is reached.

    Episodes are seeded by waves: for each episode of a wave a question
    (uniformly, with replacement) and a private seed are drawn from rng,
    then the wave runs on the worker pool. The batch is therefore identical
    whatever the number of workers.

    Parameters
    ----------
    params : PolicyParams
        Sampling policy (read only).

    env_cfg : EnvConfig
        Episode parameters.

    questions : list of Question
        Pool of training questions.

    retriever : BaseRetriever
        Shared read only backend.

    memory : Memory
        Parametric knowledge of the policy.

    budget : int
        Minimal number of steps to collect.

    rng : numpy.random.Generator
        Stream seeding the episodes.

    hash_seed : int
        Key of the feature hashing.

    workers : int, optional
        Number of threads running episodes.

    ref_params : PolicyParams, optional
        Reference policy of the KL penalty.

    reward_cfg : RewardConfig, optional
        Reward parameters, the KL penalty coefficient is read from it.
        Defaults to the parameters of env_cfg without KL penalty.

    Returns
    -------
    batch : RolloutBatch

    """
    if budget < 1:
        raise ContractError('The sampling budget must be positive.')
    if not questions:
        raise ContractError('Rollouts need at least one question.')
    if reward_cfg is None:
        reward_cfg = env_cfg.reward_config()
    policy = ParametricPolicy(params, memory, hash_seed)
    mode = SampleMode.sample()

    def run(item):
        index, seed = item
        return rollout(questions[index], policy, retriever, env_cfg,
                       np.random.default_rng(seed), mode)

    trajectories = []
    n_steps = 0
    with ThreadPoolExecutor(max_workers=max(workers, 1)) as pool:
        while n_steps < budget:
            wave = [(int(rng.integers(len(questions))),
                     int(rng.integers(SEED_BOUND)))
                    for _ in range(WAVE_SIZE)]
            for trajectory in pool.map(run, wave):
                if n_steps >= budget:
                    break
                trajectories.append(trajectory)
                n_steps += len(trajectory.steps)

    steps = [s for t in trajectories for s in t.steps]
    rewards = np.array([s.reward for s in steps])
    old = np.array([s.log_prob for s in steps])
    ref_kl = 0.0
    if ref_params is not None:
        ref = np.array([evaluate_choice(ref_params, s.inputs)[1]
                        for s in steps])
        ref_kl = float(np.mean(old - ref))
        if reward_cfg.kl_beta:
            rewards = rewards - reward_cfg.kl_beta * (old - ref)
    dones = np.array([i == len(t.steps) - 1 for t in trajectories
                      for i in range(len(t.steps))])
    mean_return = float(np.mean([discounted_return(t.rewards, reward_cfg.gamma)
                                 for t in trajectories]))
    logger.debug('Collected %d steps in %d episodes', len(steps),
                 len(trajectories))
    return RolloutBatch(choices=tuple(s.inputs for s in steps),
                        old_log_probs=_frozen(old),
                        values=_frozen([s.value for s in steps]),
                        rewards=_frozen(rewards), dones=dones,
                        trajectories=tuple(trajectories),
                        mean_return=mean_return, ref_kl=ref_kl,
                        n_episodes=len(trajectories))


def compute_gae(batch, gamma, lam):
    """Generalized advantage estimates and returns of a batch.

    delta_t = r_t + gamma V_{t+1} (1 - done_t) - V_t and
    A_t = delta_t + gamma lam (1 - done_t) A_{t+1}, so that advantages never
    cross an episode boundary. Returns are A_t + V_t.

    """
    rewards, values, dones = batch.rewards, batch.values, batch.dones
    n = len(rewards)
    advantages = np.zeros(n)
    last = 0.0
    for t in range(n - 1, -1, -1):
        if dones[t]:
            next_value, last = 0.0, 0.0
        else:
            next_value = values[t + 1]
        delta = rewards[t] + gamma * next_value - values[t]
        last = delta + gamma * lam * last
        advantages[t] = last
    return batch.with_advantages(advantages, advantages + values)
