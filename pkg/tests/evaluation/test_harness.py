# -*- coding: utf-8 -*-
# -----------------------------------------------------------------------------
# Copyright 2024 by SmartRAG Lab Authors, see AUTHORS for more details.
#
# Distributed under the terms of the BSD license.
#
# The full license is in the file LICENCE, distributed with this software.
# -----------------------------------------------------------------------------
"""Test the evaluation harness on the two questions world.

With null weights every distribution is uniform: greedy decoding answers
directly and picks the first candidate (the memory when it knows something).

"""
import numpy as np
import pytest

from smartrag_lab.config import EnvConfig, EvalConfig, PolicyConfig
from smartrag_lab.errors import ConfigurationError, ContractError
from smartrag_lab.evaluation.harness import (REPORT_COLUMNS,
                                             ablation_replace_generator,
                                             ablation_replace_query,
                                             default_thresholds, evaluate,
                                             reference_points,
                                             threshold_sweep,
                                             transfer_report)
from smartrag_lab.policy.heads import SampleMode
from smartrag_lab.policy.params import init_params
from smartrag_lab.worlds.generation import (DIRECT_ANSWERABLE,
                                            NEEDS_RETRIEVAL, UNANSWERABLE)


class TestEvaluate(object):

    def setup_method(self):
        self.params = init_params(PolicyConfig(dim=32))
        self.env_cfg = EnvConfig()

    def test_greedy(self, tiny_world):
        report = evaluate(self.params, tiny_world, self.env_cfg, 0)
        assert report.n == 2
        assert report.em == 50.0
        assert report.f1 == 50.0
        assert report.retrieval_pct == 0.0
        assert report.hit is None
        assert report.mean_reward == pytest.approx(1.0)
        assert set(report.to_row()) == set(REPORT_COLUMNS)
        assert report.config['mode'] == 'greedy'

    def test_hit_over_all_episodes(self, tiny_world):
        report = evaluate(self.params, tiny_world, self.env_cfg, 0,
                          eval_cfg=EvalConfig(hit_all_episodes=True))
        assert report.hit == 0.0

    def test_full_retrieval(self, tiny_world):
        report = evaluate(self.params, tiny_world, self.env_cfg, 0,
                          SampleMode.threshold(np.inf))
        assert report.retrieval_pct == 100.0
        assert report.em == 100.0
        assert report.hit == 50.0
        assert report.mean_reward == pytest.approx(1.78)
        first = report.trajectories[0]
        assert first.steps[0].action.text == \
            'Who was the director of Balo Tika?'

    def test_category_ratios(self, tiny_world):
        report = evaluate(self.params, tiny_world, self.env_cfg, 0,
                          SampleMode.threshold(np.inf))
        assert report.category_ratios == {DIRECT_ANSWERABLE: 100.0,
                                          NEEDS_RETRIEVAL: 100.0,
                                          UNANSWERABLE: None}

    def test_subset_of_questions(self, tiny_world):
        report = evaluate(self.params, tiny_world, self.env_cfg, 0,
                          questions=tiny_world.questions[:1])
        assert report.n == 1
        assert report.em == 100.0

    def test_no_question(self, tiny_world):
        with pytest.raises(ContractError):
            evaluate(self.params, tiny_world, self.env_cfg, 0, questions=[])

    def test_workers(self, small_world):
        params = init_params(PolicyConfig(dim=32))
        first = evaluate(params, small_world, self.env_cfg, 0)
        second = evaluate(params, small_world, self.env_cfg, 0, workers=3)
        assert first.to_row() == second.to_row()


class TestSweeps(object):

    def setup_method(self):
        self.params = init_params(PolicyConfig(dim=32))
        self.env_cfg = EnvConfig()

    def test_sorted_rows(self, tiny_world):
        rows = threshold_sweep(self.params, tiny_world, self.env_cfg, 0,
                               taus=[1.0, -1.0])
        assert [r['tau'] for r in rows] == [-1.0, 1.0]
        assert [r['retrieval_pct'] for r in rows] == [0.0, 100.0]
        assert rows[0]['hit'] is None

    def test_retrieval_grows_with_threshold(self, small_world):
        rng = np.random.default_rng(1)
        params = self.params.from_vector(
            rng.normal(0.0, 0.5, self.params.to_vector().size))
        rows = threshold_sweep(params, small_world, self.env_cfg, 0,
                               eval_cfg=EvalConfig(sweep_points=9))
        pcts = [r['retrieval_pct'] for r in rows]
        assert pcts == sorted(pcts)
        assert (pcts[0], pcts[-1]) == (0.0, 100.0)

    def test_empty_sweep(self, tiny_world):
        with pytest.raises(ContractError):
            threshold_sweep(self.params, tiny_world, self.env_cfg, 0, taus=[])

    def test_default_thresholds(self, tiny_world):
        taus = default_thresholds(self.params, tiny_world, self.env_cfg, 0,
                                  EvalConfig(sweep_points=5))
        np.testing.assert_allclose(taus, [-0.5, -0.25, 0.0, 0.25, 0.5])
        taus = default_thresholds(self.params, tiny_world, self.env_cfg, 0,
                                  EvalConfig(threshold_on='probability'))
        assert len(taus) == 41
        assert (taus[0], taus[-1]) == (0.0, 1.0)

    def test_transfer_on_uniform_policy(self, tiny_world):
        report = transfer_report(self.params, tiny_world, self.env_cfg, 0)
        assert report.retrieval_pct == 100.0
        assert report.config['threshold_on'] == 'probability'

    def test_reference_points(self, tiny_world):
        points = reference_points(self.params, tiny_world, self.env_cfg, 0)
        assert set(points) == {'no_retrieval', 'full_retrieval', 'policy'}
        assert points['no_retrieval'].retrieval_pct == 0.0
        assert points['full_retrieval'].retrieval_pct == 100.0
        assert points['policy'].em == points['no_retrieval'].em


class TestAblations(object):

    def setup_method(self):
        self.env_cfg = EnvConfig()

    def test_replace_query(self, tiny_world):
        params = init_params(PolicyConfig(dim=32))
        params.W_rew[2, -1] = 5.0
        mode = SampleMode.threshold(np.inf)
        report = ablation_replace_query(params, tiny_world, self.env_cfg, 0,
                                        mode=mode)
        assert report.config['force_template'] == 0
        texts = [t.steps[0].action.text for t in report.trajectories]
        assert texts == [q.text for q in tiny_world.questions]

    def test_replace_generator(self, tiny_world):
        warm = init_params(PolicyConfig(dim=32))
        trained = warm.copy()
        trained.w_ans[0] = -5.0
        report = ablation_replace_generator(trained, warm, tiny_world,
                                            self.env_cfg, 0)
        assert report.em == evaluate(warm, tiny_world, self.env_cfg, 0).em
        assert trained.w_ans[0] == -5.0

    def test_incompatible_heads(self, tiny_world):
        with pytest.raises(ConfigurationError):
            ablation_replace_generator(init_params(PolicyConfig(dim=32)),
                                       init_params(PolicyConfig(dim=16)),
                                       tiny_world, self.env_cfg, 0)
