# -*- coding: utf-8 -*-
# -----------------------------------------------------------------------------
# Copyright 2024 by SmartRAG Lab Authors, see AUTHORS for more details.
#
# Distributed under the terms of the BSD license.
#
# The full license is in the file LICENCE, distributed with this software.
# -----------------------------------------------------------------------------
"""Fixtures shared by the test suite.

"""
import pytest

from smartrag_lab.config import EnvConfig, RunConfig, WorldSpec
from smartrag_lab.env.records import Question
from smartrag_lab.policy.candidates import Memory
from smartrag_lab.retrieval.bm25 import Document
from smartrag_lab.worlds.generation import World, gen_world


def make_tiny_world():
    """Two questions: one known by the memory, one stated by the corpus.

    """
    questions = (
        Question(id='known', text='Who was the director of Balo Tika?',
                 gold_answers=['Rumo']),
        Question(id='covered', text='Who was the producer of Sefa Nobu?',
                 gold_answers=['Vadi']))
    corpus = (
        Document(id='d0', title='Sefa Nobu', text='Sefa Nobu producer Vadi',
                 answer_span='Vadi'),
        Document(id='d1', title='Sefa Nobu', text='Sefa Nobu director Kelo',
                 answer_span='Kelo'),
        Document(id='d2', title='Balo Tika', text='Balo Tika composer Mesu',
                 answer_span='Mesu'))
    return World(name='tiny', questions=questions, corpus=corpus,
                 memory=Memory(entries={'known': 'Rumo'}),
                 oracle_map={'known': 0, 'covered': 0})


@pytest.fixture
def tiny_world():
    return make_tiny_world()


@pytest.fixture
def env_cfg():
    return EnvConfig()


@pytest.fixture(scope='module')
def small_world():
    """Generated world small enough for quick training runs.

    """
    return gen_world(WorldSpec(n_questions=12, vocab_size=40, seed=5))


@pytest.fixture
def run_config():
    """Run configuration sized for fast tests.

    """
    config = RunConfig(seed=7)
    config.policy.dim = 64
    config.ppo.sampling_budget = 64
    config.train.iterations = 2
    config.train.workers = 2
    return config
