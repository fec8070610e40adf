# -*- coding: utf-8 -*-
# -----------------------------------------------------------------------------
# Copyright 2024 by SmartRAG Lab Authors, see AUTHORS for more details.
#
# Distributed under the terms of the BSD license.
#
# The full license is in the file LICENCE, distributed with this software.
# -----------------------------------------------------------------------------
"""Test the warm-up dataset and the behavior cloning.

"""
import numpy as np
import pytest

from smartrag_lab.config import BcConfig, EnvConfig, PolicyConfig
from smartrag_lab.env.records import ANSWER, QUERY, Question
from smartrag_lab.errors import ConfigurationError, ContractError
from smartrag_lab.policy.features import Featurizer
from smartrag_lab.policy.params import init_params
from smartrag_lab.training.warmup import (PI0, PI0_STAR, RewriteOracle,
                                          SftExample, bc_loss,
                                          behavior_clone,
                                          build_warmup_dataset,
                                          example_choice, is_known,
                                          retrieval_helps)
from smartrag_lab.worlds.generation import World


def dataset(world, variant, env_cfg=None, q=1.0):
    oracle = RewriteOracle(oracle_map=dict(world.oracle_map), q=q)
    return build_warmup_dataset(world.questions, world.retriever(), oracle,
                                world.memory, variant,
                                env_cfg or EnvConfig(),
                                np.random.default_rng(0))


class TestRewriteOracle(object):

    def test_always_designated(self):
        oracle = RewriteOracle(oracle_map={'q': 2}, q=1.0)
        rng = np.random.default_rng(0)
        assert {oracle.choose('q', rng) for _ in range(20)} == {2}

    def test_never_designated(self):
        oracle = RewriteOracle(oracle_map={'q': 2}, q=0.0)
        rng = np.random.default_rng(0)
        picks = {oracle.choose('q', rng) for _ in range(50)}
        assert 2 not in picks
        assert picks <= {0, 1, 3}

    def test_unknown_question(self):
        oracle = RewriteOracle(oracle_map={})
        with pytest.raises(ConfigurationError):
            oracle.choose('q', np.random.default_rng(0))


class TestDataset(object):

    def test_known(self, tiny_world):
        known, covered = tiny_world.questions
        assert is_known(known, tiny_world.memory)
        assert not is_known(covered, tiny_world.memory)

    def test_pi0(self, tiny_world):
        examples = dataset(tiny_world, PI0)
        assert [e.kind for e in examples] == [1, 2, 3, 1, 2, 3]
        assert examples[0].target_candidate_text == 'Rumo'
        assert examples[1].target_kind == QUERY
        assert examples[1].target_template == 0
        assert examples[2].state.retrieve_count == 1
        assert examples[5].target_candidate_text == 'Vadi'

    def test_pi0_star(self, tiny_world):
        examples = dataset(tiny_world, PI0_STAR)
        assert [(e.state.question.id, e.kind) for e in examples] == \
            [('known', 1), ('covered', 2), ('covered', 3)]

    def test_pi0_star_answers_when_retrieval_cannot_help(self, tiny_world):
        lost = Question(id='lost', text='Who was the composer of Rava Lune?',
                        gold_answers=['Tosi'])
        oracle_map = dict(tiny_world.oracle_map, lost=0)
        world = World(name='lost', questions=tiny_world.questions + (lost,),
                      corpus=tiny_world.corpus, memory=tiny_world.memory,
                      oracle_map=oracle_map)
        oracle = RewriteOracle(oracle_map=oracle_map)
        retriever = world.retriever()
        assert not retrieval_helps(lost, retriever, oracle, world.memory,
                                   EnvConfig())
        assert retrieval_helps(world.questions[1], retriever, oracle,
                               world.memory, EnvConfig())
        examples = dataset(world, PI0_STAR)
        assert [(e.state.question.id, e.kind) for e in examples] == \
            [('known', 1), ('covered', 2), ('covered', 3), ('lost', 1)]
        assert [e.kind for e in dataset(world, PI0)][-3:] == [1, 2, 3]

    def test_without_quota(self, tiny_world):
        examples = dataset(tiny_world, PI0, EnvConfig(quota=0))
        assert [e.kind for e in examples] == [1, 1]
        assert all(e.target_kind == ANSWER for e in examples)

    def test_unknown_variant(self, tiny_world):
        with pytest.raises(ConfigurationError):
            dataset(tiny_world, 'pi1')

    def test_inconsistent_example(self, tiny_world):
        examples = dataset(tiny_world, PI0)
        with pytest.raises(ContractError):
            SftExample(state=examples[0].state, target_kind=QUERY, kind=2)


class TestBehaviorCloning(object):

    def setup_method(self):
        self.env_cfg = EnvConfig()
        self.policy_cfg = PolicyConfig(dim=32)

    def choices(self, world, examples):
        featurizer = Featurizer(self.policy_cfg.dim, 0)
        return [example_choice(e, featurizer, world.memory, self.env_cfg)
                for e in examples]

    def test_loss_decreases(self, tiny_world):
        examples = dataset(tiny_world, PI0)
        params = init_params(self.policy_cfg)
        trained = behavior_clone(params, examples,
                                 BcConfig(lr=0.05, batch_size=2, epochs=30),
                                 np.random.default_rng(1), tiny_world.memory,
                                 self.env_cfg, 0)
        choices = self.choices(tiny_world, examples)
        assert bc_loss(trained, choices) < bc_loss(params, choices)
        assert not params.to_vector().any()

    def test_answer_targets_are_candidates(self, tiny_world):
        examples = dataset(tiny_world, PI0)
        for example, choice in zip(examples,
                                   self.choices(tiny_world, examples)):
            if example.target_kind == ANSWER:
                assert choice.inputs.candidates[choice.sub].text == \
                    example.target_candidate_text

    def test_empty_dataset(self, tiny_world):
        with pytest.raises(ContractError):
            behavior_clone(init_params(self.policy_cfg), [], BcConfig(),
                           np.random.default_rng(0), tiny_world.memory,
                           self.env_cfg, 0)
