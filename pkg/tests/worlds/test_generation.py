# -*- coding: utf-8 -*-
# -----------------------------------------------------------------------------
# Copyright 2024 by SmartRAG Lab Authors, see AUTHORS for more details.
#
# Distributed under the terms of the BSD license.
#
# The full license is in the file LICENCE, distributed with this software.
# -----------------------------------------------------------------------------
"""Test the synthetic world generation.

"""
import pytest

from smartrag_lab.config import WorldSpec
from smartrag_lab.errors import ContractError, GenerationError
from smartrag_lab.policy.templates import apply_template, make_templates
from smartrag_lab.retrieval.bm25 import build_index
from smartrag_lab.worlds.generation import (CATEGORIES, DIRECT_ANSWERABLE,
                                            NEEDS_RETRIEVAL, UNANSWERABLE,
                                            compute_categories, gen_world,
                                            merge_worlds)


def world_content(world):
    return ([(q.id, q.text, q.gold_answers) for q in world.questions],
            [(d.id, d.title, d.text, d.answer_span) for d in world.corpus],
            world.memory.entries, world.oracle_map, world.category_map())


class TestGeneration(object):

    def test_deterministic(self):
        spec = WorldSpec(n_questions=15, vocab_size=30, seed=3)
        assert world_content(gen_world(spec)) == \
            world_content(gen_world(spec))

    def test_seed_matters(self):
        first = gen_world(WorldSpec(n_questions=5, vocab_size=20, seed=1))
        second = gen_world(WorldSpec(n_questions=5, vocab_size=20, seed=2))
        assert world_content(first) != world_content(second)

    def test_spec_echo(self, small_world):
        assert small_world.spec['n_questions'] == 12
        assert small_world.spec['seed'] == 5
        assert len(small_world.questions) == 12

    def test_categories_match_content(self, small_world):
        computed = compute_categories(small_world.questions,
                                      small_world.corpus, small_world.memory)
        assert computed == small_world.category_map()
        assert set(computed.values()) <= set(CATEGORIES)

    def test_documents(self, small_world):
        index = build_index(small_world.corpus)
        assert len(set(index.doc_lengths.values())) == 1
        for doc in small_world.corpus:
            assert doc.text.startswith(doc.title + ' ')
            assert doc.answer_span in doc.text

    def test_uncovered_world(self):
        world = gen_world(WorldSpec(n_questions=10, vocab_size=20,
                                    p_covered=0.0, seed=4))
        assert NEEDS_RETRIEVAL not in world.category_map().values()
        assert set(world.oracle_map.values()) == {0}

    def test_known_world(self):
        world = gen_world(WorldSpec(n_questions=6, vocab_size=10,
                                    p_known=1.0, p_known_wrong=0.0, seed=2))
        assert set(world.category_map().values()) == {DIRECT_ANSWERABLE}
        for q in world.questions:
            assert world.memory.lookup(q.id) == q.gold_answers[0]
        assert world.questions_in(UNANSWERABLE) == []

    def test_ambiguous_world(self):
        spec = WorldSpec(n_questions=9, vocab_size=20, p_known=0.0,
                         p_known_wrong=0.0, p_covered=1.0, p_ambiguous=1.0,
                         seed=6)
        world = gen_world(spec)
        retriever = world.retriever()
        templates = make_templates(4)
        assert set(world.category_map().values()) == {NEEDS_RETRIEVAL}
        ambiguous = [q for q in world.questions if world.oracle_map[q.id]]
        assert ambiguous
        for q in ambiguous:
            gold = q.gold_answers[0]
            designated = templates[world.oracle_map[q.id]]
            best = retriever.search(apply_template(designated, q.text),
                                    spec.top_k).snippets[0]
            assert best.answer_span == gold
            identity = retriever.search(q.text, spec.top_k)
            assert gold not in [s.answer_span for s in identity.snippets]

    def gold_ranks(self, world, spec):
        retriever = world.retriever()
        ranks = {}
        for q in world.questions:
            ranks[q.id] = set()
            for template in make_templates(4):
                spans = [s.answer_span for s in retriever.search(
                    apply_template(template, q.text), spec.top_k).snippets]
                gold = q.gold_answers[0]
                ranks[q.id].add(spans.index(gold) + 1 if gold in spans
                                else None)
        return ranks

    def test_buried_world(self):
        spec = WorldSpec(n_questions=12, vocab_size=30, p_known=0.0,
                         p_known_wrong=0.0, p_covered=1.0, p_ambiguous=0.0,
                         p_buried=1.0, seed=8)
        ranks = self.gold_ranks(gen_world(spec), spec)
        buried = [r for r in ranks.values() if r != {1}]
        assert buried
        for r in buried:
            assert len(r) == 1
            assert r.pop() in range(2, spec.top_k + 1)

    def test_unburied_world(self):
        spec = WorldSpec(n_questions=12, vocab_size=30, p_known=0.0,
                         p_known_wrong=0.0, p_covered=1.0, p_ambiguous=0.0,
                         p_buried=0.0, seed=8)
        ranks = self.gold_ranks(gen_world(spec), spec)
        assert all(r == {1} for r in ranks.values())


class TestInvalidSpecs(object):

    def test_missing_size(self):
        with pytest.raises(GenerationError):
            gen_world(WorldSpec())

    def test_small_vocabulary(self):
        with pytest.raises(GenerationError):
            gen_world(WorldSpec(n_questions=10, vocab_size=5))

    def test_too_few_distractors(self):
        with pytest.raises(GenerationError):
            gen_world(WorldSpec(n_questions=4, vocab_size=10,
                                distractors_per_question=2))


class TestMerge(object):

    def test_prefixed_ids(self, small_world, tiny_world):
        merged = merge_worlds([small_world, tiny_world])
        assert merged.name == 'world+tiny'
        assert len(merged.questions) == 14
        assert 'tiny/covered' in merged.category_map()
        assert merged.memory.lookup('tiny/known') == 'Rumo'
        ids = [d.id for d in merged.corpus]
        assert len(set(ids)) == len(ids)

    def test_duplicate_names(self, tiny_world):
        with pytest.raises(ContractError):
            merge_worlds([tiny_world, tiny_world])
