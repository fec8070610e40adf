# -*- coding: utf-8 -*-
# -----------------------------------------------------------------------------
# Copyright 2024 by SmartRAG Lab Authors, see AUTHORS for more details.
#
# Distributed under the terms of the BSD license.
#
# The full license is in the file LICENCE, distributed with this software.
# -----------------------------------------------------------------------------
"""Test the analytic gradients and the clipped PPO update.

The analytic gradients are compared to central finite differences on small
policies, with and without hidden layer.

"""
import numpy as np
import pytest

from smartrag_lab.config import EnvConfig, PolicyConfig, PpoConfig
from smartrag_lab.policy.params import init_params
from smartrag_lab.training.ppo import (UPDATE_STATS, normalized_advantages,
                                       ppo_loss_and_grad, ppo_surrogate_loss,
                                       ppo_update)
from smartrag_lab.training.rollouts import (RolloutBatch, collect_rollouts,
                                            compute_gae)
from smartrag_lab.training.warmup import bc_loss, bc_loss_and_grad

EPS = 1e-6


def random_params(hidden_units, seed=0):
    cfg = PolicyConfig(dim=16, hidden_units=hidden_units)
    rng = np.random.default_rng(seed)
    params = init_params(cfg, rng)
    return params.from_vector(rng.normal(0.0, 0.3,
                                         params.to_vector().size))


def grad_vector(params, grads):
    return np.concatenate([grads[name].ravel() for name in params.names])


def numeric_gradient(loss, params):
    vector = params.to_vector()
    out = np.zeros_like(vector)
    for i in range(vector.size):
        up, down = vector.copy(), vector.copy()
        up[i] += EPS
        down[i] -= EPS
        out[i] = (loss(params.from_vector(up)) -
                  loss(params.from_vector(down))) / (2 * EPS)
    return out


def sampled_batch(world, params, seed=0):
    batch = collect_rollouts(params, EnvConfig(quota=2), world.questions,
                             world.retriever(), world.memory, 12,
                             np.random.default_rng(seed), 0)
    return compute_gae(batch, 0.99, 0.95)


@pytest.mark.parametrize('hidden_units', [0, 4])
def test_bc_gradient(tiny_world, hidden_units):
    params = random_params(hidden_units)
    choices = sampled_batch(tiny_world, params).choices
    _, grads = bc_loss_and_grad(params, choices)
    expected = numeric_gradient(lambda p: bc_loss(p, choices), params)
    np.testing.assert_allclose(grad_vector(params, grads), expected,
                               rtol=1e-4, atol=1e-6)


@pytest.mark.parametrize('hidden_units', [0, 4])
def test_ppo_gradient(tiny_world, hidden_units):
    params = random_params(hidden_units, seed=1)
    batch = sampled_batch(tiny_world, params, seed=2)
    cfg = PpoConfig(entropy_coef=0.05, value_coef=0.5)
    _, _, grads = ppo_loss_and_grad(params, batch, cfg)
    expected = numeric_gradient(
        lambda p: ppo_surrogate_loss(p, batch, cfg)[0], params)
    np.testing.assert_allclose(grad_vector(params, grads), expected,
                               rtol=1e-4, atol=1e-6)


class TestClipping(object):

    def setup_method(self):
        self.cfg = PpoConfig(clip_eps=0.2, entropy_coef=0.0, value_coef=0.0,
                             normalize_advantages=False)

    def shifted_batch(self, world, params, shift):
        batch = sampled_batch(world, params)
        n = len(batch)
        return RolloutBatch(choices=batch.choices,
                            old_log_probs=batch.old_log_probs - shift,
                            values=batch.values, rewards=batch.rewards,
                            dones=batch.dones, advantages=np.ones(n),
                            returns=batch.values, n_episodes=1)

    def test_saturated_ratio_has_no_gradient(self, tiny_world):
        params = random_params(0)
        batch = self.shifted_batch(tiny_world, params, 1.0)
        loss, stats, grads = ppo_loss_and_grad(params, batch, self.cfg)
        assert loss == pytest.approx(-1.2)
        assert not grad_vector(params, grads).any()
        assert stats['approx_kl'] == pytest.approx(-1.0)

    def test_unit_ratio(self, tiny_world):
        params = random_params(0)
        batch = self.shifted_batch(tiny_world, params, 0.0)
        loss, stats = ppo_surrogate_loss(params, batch, self.cfg)
        assert loss == pytest.approx(-1.0)
        assert stats['approx_kl'] == pytest.approx(0.0, abs=1e-12)


class TestUpdate(object):

    def test_stats(self, tiny_world):
        params = random_params(0)
        batch = sampled_batch(tiny_world, params)
        cfg = PpoConfig(batch_size=5, lr=0.01)
        updated, stats = ppo_update(params, batch, cfg,
                                    np.random.default_rng(0))
        assert set(stats) == set(UPDATE_STATS)
        assert stats['iteration_reward'] == batch.mean_return
        assert all(np.isfinite(v) for v in stats.values())
        assert not np.array_equal(updated.to_vector(), params.to_vector())

    def test_null_learning_rate(self, tiny_world):
        params = random_params(4)
        batch = sampled_batch(tiny_world, params)
        updated, _ = ppo_update(params, batch, PpoConfig(lr=0.0),
                                np.random.default_rng(0))
        np.testing.assert_array_equal(updated.to_vector(),
                                      params.to_vector())

    def test_normalized_advantages(self):
        out = normalized_advantages([1.0, 2.0, 3.0], True)
        assert out.mean() == pytest.approx(0.0)
        assert out.std() == pytest.approx(1.0, abs=1e-6)
        np.testing.assert_array_equal(normalized_advantages([4.0], True),
                                      [4.0])

    def test_advantages_are_normalized_over_the_batch(self, tiny_world):
        params = random_params(0)
        batch = sampled_batch(tiny_world, params)
        normalized = batch.with_advantages(
            normalized_advantages(batch.advantages, True), batch.returns)
        cfg = PpoConfig(batch_size=1, lr=0.01, optimizer='sgd')
        raw_cfg = PpoConfig(batch_size=1, lr=0.01, optimizer='sgd',
                            normalize_advantages=False)
        first, _ = ppo_update(params, batch, cfg, np.random.default_rng(3))
        second, _ = ppo_update(params, normalized, raw_cfg,
                               np.random.default_rng(3))
        np.testing.assert_array_equal(first.to_vector(), second.to_vector())


@pytest.mark.slow
@pytest.mark.parametrize('seed', range(50))
def test_gradients_on_random_policies(tiny_world, seed):
    params = random_params(4 * (seed % 2), seed=seed)
    batch = sampled_batch(tiny_world, params, seed=seed + 100)
    _, grads = bc_loss_and_grad(params, batch.choices)
    expected = numeric_gradient(lambda p: bc_loss(p, batch.choices), params)
    np.testing.assert_allclose(grad_vector(params, grads), expected,
                               rtol=1e-4, atol=1e-6)
    cfg = PpoConfig(entropy_coef=0.01 * (seed % 5), value_coef=0.5)
    _, _, grads = ppo_loss_and_grad(params, batch, cfg)
    expected = numeric_gradient(
        lambda p: ppo_surrogate_loss(p, batch, cfg)[0], params)
    np.testing.assert_allclose(grad_vector(params, grads), expected,
                               rtol=1e-4, atol=1e-6)
