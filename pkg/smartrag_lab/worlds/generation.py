# -*- coding: utf-8 -*-
# -----------------------------------------------------------------------------
# Copyright 2024 by SmartRAG Lab Authors, see AUTHORS for more details.
#
# Distributed under the terms of the BSD license.
#
# The full license is in the file LICENCE, distributed with this software.
# -----------------------------------------------------------------------------
"""Synthetic question answering worlds.

Every question asks about a relation of its own two token entity and has a
single token gold answer. Whether the base model knows the answer (memory),
whether the corpus states it (coverage) and whether only a rewritten query
finds it (ambiguity) or only a top-K with K above one (burial) are drawn
from the world specification.

All the documents of a world have the same normalised length and the
documents about one entity share their title, so that BM25 ties between
them are broken by document id only. This makes the following constructions
exact, with E the entity, P the relation token, X the type hint token, S
the stopwords of the question, c a repetition count and g the gold answer:

- covered question: gold doc E P g (first id) and distractors E P' w
  stating other relations
- ambiguous, QuoteFocus designated: gold E g (first id) and blockers
  E P*c w
- ambiguous, KeywordsOnly designated: gold E P*2 g (last id) and blockers
  E P X*c S*c w
- ambiguous, TypeHint designated: gold E P X*2 g (last id) and blockers
  E P*2 S*c w
- buried question of target rank r: blockers E E*c P' w (first r - 1
  ids), then the gold E P g and the distractors
- uncovered question: distractors only

Ambiguous and buried questions are verified once the corpus is indexed, c
growing until the identity query misses the gold document while the
designated template ranks it first, or until every template ranks a buried
gold document at its target rank.

"""
import logging

import numpy as np
from atom.api import Atom, Dict, Str, Tuple, Typed

from ..errors import ContractError, GenerationError
from ..env.records import Question
from ..metrics import exact_match, hit, normalize_tokens
from ..policy.candidates import Memory
from ..policy.templates import (STOPWORDS, TYPE_HINTS, apply_template,
                                keywords, make_templates)
from ..retrieval.bm25 import BM25Retriever, Document, build_index, search

logger = logging.getLogger(__name__)

DIRECT_ANSWERABLE = 'DirectAnswerable'

NEEDS_RETRIEVAL = 'NeedsRetrieval'

UNANSWERABLE = 'Unanswerable'

CATEGORIES = (DIRECT_ANSWERABLE, NEEDS_RETRIEVAL, UNANSWERABLE)

COMMON = 'common'

DOCUMENTED = 'documented'

OBSCURE = 'obscure'

#: Relation token, wh-word and popularity tier.
RELATIONS = (
    ('producer', 'who', COMMON), ('director', 'who', COMMON),
    ('founded', 'when', COMMON), ('built', 'when', COMMON),
    ('born', 'where', COMMON), ('located', 'where', COMMON),
    ('author', 'who', DOCUMENTED), ('composer', 'who', DOCUMENTED),
    ('released', 'when', DOCUMENTED), ('opened', 'when', DOCUMENTED),
    ('buried', 'where', DOCUMENTED), ('filmed', 'where', DOCUMENTED),
    ('sponsor', 'who', OBSCURE), ('engraver', 'who', OBSCURE),
    ('restored', 'when', OBSCURE), ('consecrated', 'when', OBSCURE),
    ('minted', 'where', OBSCURE), ('printed', 'where', OBSCURE),
)

#: Tier of the relations asked about in each category.
CATEGORY_TIER = {DIRECT_ANSWERABLE: COMMON, NEEDS_RETRIEVAL: DOCUMENTED,
                 UNANSWERABLE: OBSCURE}

TIERS = (COMMON, DOCUMENTED, OBSCURE)

QUESTION_FORMS = {'who': 'Who was the {rel} of {entity}?',
                  'when': 'When was {entity} {rel}?',
                  'where': 'Where was {entity} {rel}?'}

#: Template ids of the rewrite templates used by the constructions.
IDENTITY, KEYWORDS_ONLY, TYPE_HINT, QUOTE_FOCUS = range(4)

#: Minimal normalised length of the documents.
MIN_DOC_LENGTH = 16

#: Initial repetition count of the blocking tokens.
INITIAL_REPEAT = 2

#: Maximal number of corpus rebuilds when verifying the retrieval ranks.
MAX_ATTEMPTS = 100

N_FILLERS = 200

_ONSETS = 'b d f g k l m n p r s t v z'.split()

_VOWELS = 'a e i o u'.split()

_RESERVED = (STOPWORDS | set(TYPE_HINTS.values()) |
             {r[0] for r in RELATIONS})


class World(Atom):
    """Questions, corpus and parametric knowledge of an experiment.

    """
    #: Name used to prefix ids when merging worlds.
    name = Str('world')

    questions = Tuple()

    corpus = Tuple()

    memory = Typed(Memory)

    #: question id -> template id finding the gold document.
    oracle_map = Dict()

    #: question id -> category (computed on demand when None).
    categories = Typed(dict)

    #: Echo of the specification which produced the world.
    spec = Dict()

    def category_map(self):
        """Category of every question, computing it if needed.

        """
        if self.categories is None:
            self.categories = compute_categories(self.questions, self.corpus,
                                                 self.memory)
        return self.categories

    def retriever(self):
        return BM25Retriever(self.corpus)

    def questions_in(self, category):
        cats = self.category_map()
        return [q for q in self.questions if cats[q.id] == category]


def compute_categories(questions, corpus, memory):
    """Category of every question from memory and corpus content.

    """
    texts = [d.title + ' ' + d.text for d in corpus]
    categories = {}
    for q in questions:
        claimed = memory.lookup(q.id) if memory is not None else None
        if claimed and exact_match(claimed, q.gold_answers):
            categories[q.id] = DIRECT_ANSWERABLE
        elif any(hit(t, q.gold_answers) for t in texts):
            categories[q.id] = NEEDS_RETRIEVAL
        else:
            categories[q.id] = UNANSWERABLE
    return categories


class _Vocabulary(object):
    """Source of unique synthetic words and years.

    """
    def __init__(self, rng):
        self.rng = rng
        self.used = set(_RESERVED)

    def word(self):
        while True:
            n = 2 + int(self.rng.integers(2))
            word = ''.join(_ONSETS[self.rng.integers(len(_ONSETS))] +
                           _VOWELS[self.rng.integers(len(_VOWELS))]
                           for _ in range(n))
            if word not in self.used:
                self.used.add(word)
                return word

    def year(self):
        for _ in range(100000):
            year = str(1000 + int(self.rng.integers(9000)))
            if year not in self.used:
                self.used.add(year)
                return year
        raise GenerationError('The pool of synthetic years is exhausted.')

    def answer(self, wh):
        return self.year() if wh == 'when' else self.word().capitalize()


class _Plan(object):
    """Random draws of one question, kept to rebuild its documents.

    """
    def __init__(self, **kwargs):
        self.__dict__.update(kwargs)

    @property
    def designated(self):
        return 1 + self.relation % 3 if self.ambiguous else IDENTITY


def _draw_plans(spec, rng, vocab):
    entities = [(vocab.word().capitalize(), vocab.word().capitalize())
                for _ in range(spec.vocab_size)]
    picked = rng.choice(spec.vocab_size, size=spec.n_questions, replace=False)
    plans = []
    for i in range(spec.n_questions):
        u = rng.random()
        if u < spec.p_known:
            memory = 'known'
        elif u < spec.p_known + spec.p_known_wrong:
            memory = 'wrong'
        else:
            memory = 'none'
        covered = bool(rng.random() < spec.p_covered)
        ambiguous = bool(covered and rng.random() < spec.p_ambiguous)
        buried = bool(covered and not ambiguous and spec.top_k > 1 and
                      rng.random() < spec.p_buried)
        gold_rank = int(rng.integers(2, spec.top_k + 1)) if buried else 1
        if memory == 'known':
            category = DIRECT_ANSWERABLE
        elif covered:
            category = NEEDS_RETRIEVAL
        else:
            category = UNANSWERABLE
        if rng.random() < spec.relation_skew:
            tier = CATEGORY_TIER[category]
        else:
            tier = TIERS[int(rng.integers(len(TIERS)))]
        choices = [k for k, r in enumerate(RELATIONS) if r[2] == tier]
        relation = int(choices[rng.integers(len(choices))])
        token, wh, _ = RELATIONS[relation]
        entity = entities[int(picked[i])]
        text = QUESTION_FORMS[wh].format(rel=token, entity=' '.join(entity))
        others = [k for k, r in enumerate(RELATIONS)
                  if r[1] == wh and k != relation]
        distractors = [(int(others[rng.integers(len(others))]),
                        vocab.answer(wh))
                       for _ in range(spec.distractors_per_question)]
        plans.append(_Plan(index=i, id='q{:05d}'.format(i), text=text,
                           entity=list(entity), relation=relation, wh=wh,
                           gold=vocab.answer(wh), memory=memory,
                           covered=covered, ambiguous=ambiguous,
                           buried=buried, gold_rank=gold_rank,
                           category=category, distractors=distractors))

    for plan in plans:
        if plan.memory != 'wrong':
            continue
        same = [p for p in plans if p is not plan and p.wh == plan.wh]
        pool = same or [p for p in plans if p is not plan]
        if pool:
            plan.claim = pool[int(rng.integers(len(pool)))].gold
        else:
            plan.claim = vocab.answer(plan.wh)
    return plans


def _stopword_tokens(text):
    kept = set(t.lower() for t in keywords(text))
    return [t for t in normalize_tokens(text) if t not in kept]


def _group_contents(plan, repeat):
    """Content tokens (without entity) of the gold and other documents.

    Returns
    -------
    contents : list of (tokens, answer, is_gold)
        In document id order.

    """
    rel = RELATIONS[plan.relation][0]
    hint = TYPE_HINTS[plan.wh]
    stop = _stopword_tokens(plan.text)
    others = [([RELATIONS[r][0]], answer, False)
              for r, answer in plan.distractors]
    if not plan.covered:
        return others
    if plan.buried:
        n_blockers = plan.gold_rank - 1
        blockers = [(plan.entity * repeat + tokens, answer, False)
                    for tokens, answer, _ in others[:n_blockers]]
        return blockers + [([rel], plan.gold, True)] + others[n_blockers:]
    if not plan.ambiguous:
        return [([rel], plan.gold, True)] + others

    c = repeat
    answers = [answer for _, answer in plan.distractors]
    if plan.designated == QUOTE_FOCUS:
        gold = ([], plan.gold, True)
        blockers = [([rel] * c, a, False) for a in answers]
        return [gold] + blockers
    if plan.designated == KEYWORDS_ONLY:
        gold = ([rel, rel], plan.gold, True)
        blockers = [([rel] + [hint] * c + stop * c, a, False)
                    for a in answers]
    else:
        gold = ([rel, hint, hint], plan.gold, True)
        blockers = [([rel, rel] + stop * c, a, False) for a in answers]
    return blockers + [gold]


def _build_corpus(plans, repeats, seed, fillers):
    groups = [_group_contents(p, repeats.get(p.index, INITIAL_REPEAT))
              for p in plans]
    longest = max((len(tokens) + 1 for g in groups for tokens, _, _ in g),
                  default=0)
    length = max(MIN_DOC_LENGTH, longest + 2)
    docs, gold_docs, number = [], {}, 0
    for plan, group in zip(plans, groups):
        title = ' '.join(plan.entity)
        for tokens, answer, is_gold in group:
            doc_id = 'd{:06d}'.format(number)
            filler_rng = np.random.default_rng([seed, number])
            n_fill = length - len(tokens) - 1
            padding = [fillers[k] for k in
                       filler_rng.integers(len(fillers), size=n_fill)]
            text = ' '.join(plan.entity + tokens + [answer] + padding)
            docs.append(Document(id=doc_id, title=title, text=text,
                                 answer_span=answer))
            if is_gold:
                gold_docs[plan.index] = doc_id
            number += 1
    return docs, gold_docs


def _verified(index, plan, gold_doc, top_k, templates):
    """Whether the retrieval ranks of a question match its construction.

    """
    for template in templates:
        query = apply_template(template, plan.text)
        ids = [s.doc_id for s in search(index, query, top_k).snippets]
        if plan.buried:
            rank = ids.index(gold_doc) + 1 if gold_doc in ids else None
            if rank != plan.gold_rank:
                return False
        elif template.id == plan.designated:
            if not ids or ids[0] != gold_doc:
                return False
        elif gold_doc in ids:
            return False
    return True


def gen_world(spec, name='world'):
    """Generate a world from its specification.

    Parameters
    ----------
    spec : WorldSpec
        Knobs of the world, the generation is a pure function of them.

    name : str, optional
        Name of the world.

    Returns
    -------
    world : World

    """
    test, traceback = spec.check()
    if not test:
        details = '; '.join('{}: {}'.format(k, v)
                            for k, v in sorted(traceback.items()))
        raise GenerationError('Infeasible world specification ({})'
                              .format(details))
    needs_blockers = spec.p_ambiguous > 0 or spec.p_buried > 0
    if needs_blockers and spec.distractors_per_question < spec.top_k:
        raise GenerationError('distractors_per_question must be at least '
                              'top_k ({}) when p_ambiguous or p_buried '
                              'is positive'
                              .format(spec.top_k))

    rng = np.random.default_rng(spec.seed)
    vocab = _Vocabulary(rng)
    plans = _draw_plans(spec, rng, vocab)
    fillers = [vocab.word() for _ in range(N_FILLERS)]
    templates = make_templates(4)

    repeats = {}
    checked = [p for p in plans if p.ambiguous or p.buried]
    failing = []
    for attempt in range(MAX_ATTEMPTS):
        docs, gold_docs = _build_corpus(plans, repeats, spec.seed, fillers)
        if not checked:
            break
        index = build_index(docs)
        failing = [p for p in checked
                   if not _verified(index, p, gold_docs[p.index],
                                    spec.top_k, templates)]
        if not failing:
            break
        for plan in failing:
            repeats[plan.index] = repeats.get(plan.index,
                                              INITIAL_REPEAT) + 1
    else:
        for plan in failing:
            logger.warning('Question %s could not be made %s after %d '
                           'attempts, keeping it as a plain covered '
                           'question', plan.id,
                           'buried' if plan.buried else 'ambiguous',
                           MAX_ATTEMPTS)
            plan.ambiguous = plan.buried = False
            plan.gold_rank = 1
        docs, gold_docs = _build_corpus(plans, repeats, spec.seed, fillers)

    questions = tuple(Question(id=p.id, text=p.text, gold_answers=[p.gold])
                      for p in plans)
    entries = {}
    for p in plans:
        if p.memory == 'known':
            entries[p.id] = p.gold
        elif p.memory == 'wrong':
            entries[p.id] = p.claim
    world = World(name=name, questions=questions, corpus=tuple(docs),
                  memory=Memory(entries=entries),
                  oracle_map={p.id: p.designated for p in plans},
                  categories={p.id: p.category for p in plans},
                  spec=dict(spec.preferences_from_members()))
    counts = {c: sum(1 for p in plans if p.category == c)
              for c in CATEGORIES}
    logger.info('Generated world %s: %d questions, %d documents, %d '
                'ambiguous, %d buried, categories %s', name, len(questions),
                len(docs), sum(1 for p in plans if p.ambiguous),
                sum(1 for p in plans if p.buried), counts)
    return world


def merge_worlds(worlds):
    """Merge several worlds for joint training.

    Question and document ids are prefixed by the world name.

    """
    names = [w.name for w in worlds]
    if len(set(names)) != len(names):
        raise ContractError('Merged worlds need distinct names, got {}'
                            .format(names))
    questions, corpus, entries, oracle, categories = [], [], {}, {}, {}
    for world in worlds:
        prefix = world.name + '/'
        for q in world.questions:
            questions.append(Question(id=prefix + q.id, text=q.text,
                                      gold_answers=q.gold_answers))
        for d in world.corpus:
            corpus.append(Document(id=prefix + d.id, title=d.title,
                                   text=d.text, answer_span=d.answer_span))
        entries.update({prefix + k: v
                        for k, v in world.memory.entries.items()})
        oracle.update({prefix + k: v for k, v in world.oracle_map.items()})
        categories.update({prefix + k: v
                           for k, v in world.category_map().items()})
    return World(name='+'.join(names), questions=tuple(questions),
                 corpus=tuple(corpus), memory=Memory(entries=entries),
                 oracle_map=oracle, categories=categories,
                 spec={'merged': names})
