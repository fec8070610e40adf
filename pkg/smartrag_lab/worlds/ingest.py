# -*- coding: utf-8 -*-
# -----------------------------------------------------------------------------
# Copyright 2024 by SmartRAG Lab Authors, see AUTHORS for more details.
#
# Distributed under the terms of the BSD license.
#
# The full license is in the file LICENCE, distributed with this software.
# -----------------------------------------------------------------------------
"""Loading external QA files and world bundles.

QA files hold one {id, question, answers} JSON object per line, corpus files
one {id, title, text, answer_span?} object per line. A world bundle is a
directory holding qa.jsonl, corpus.jsonl, memory.jsonl, oracle_map.jsonl,
categories.jsonl and a manifest.yaml echoing the specification.

"""
import os
import json
import logging

import yaml

from ..errors import ContractError, CorpusError, IngestError
from ..env.records import Question
from ..policy.candidates import Memory
from ..retrieval.bm25 import Document
from .generation import CATEGORIES, World

logger = logging.getLogger(__name__)

QA_FILE = 'qa.jsonl'

CORPUS_FILE = 'corpus.jsonl'

MEMORY_FILE = 'memory.jsonl'

ORACLE_FILE = 'oracle_map.jsonl'

CATEGORIES_FILE = 'categories.jsonl'

MANIFEST_FILE = 'manifest.yaml'


def _records(path, permissive):
    """Yield (line number, dict) for every non blank line of a file.

    """
    try:
        f = open(path, encoding='utf-8')
    except OSError as e:
        raise IngestError('Cannot open {}: {}'.format(path, e), path) from e
    with f:
        for number, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                if not isinstance(record, dict):
                    raise ValueError('expected a JSON object')
            except ValueError as e:
                if permissive:
                    logger.warning('Skipping %s:%d: %s', path, number, e)
                    continue
                raise IngestError('Malformed line ({})'.format(e), path,
                                  number) from e
            yield number, record


def _build(factory, path, number, permissive, **kwargs):
    try:
        return factory(**kwargs)
    except (ContractError, CorpusError, TypeError, KeyError,
            ValueError) as e:
        if permissive:
            logger.warning('Skipping %s:%d: %s', path, number, e)
            return None
        raise IngestError('Invalid record ({})'.format(e), path,
                          number) from e


def _question(record):
    answers = record['answers']
    if isinstance(answers, str) or not isinstance(answers, list):
        raise ValueError('answers must be a list of strings')
    return Question(id=str(record['id']), text=record['question'],
                    gold_answers=[str(a) for a in answers])


def _document(record, snippet_tokens=None):
    text = record['text']
    if snippet_tokens is not None:
        text = ' '.join(text.split()[:snippet_tokens])
    return Document(id=str(record['id']), title=record.get('title', ''),
                    text=text, answer_span=record.get('answer_span'))


def read_questions(path, permissive=False):
    """Questions of a QA file.

    """
    questions, ids = [], set()
    for number, record in _records(path, permissive):
        question = _build(_question, path, number, permissive, record=record)
        if question is None:
            continue
        if question.id in ids:
            raise IngestError('Duplicate question id {}'.format(question.id),
                              path, number)
        ids.add(question.id)
        questions.append(question)
    return questions


def read_corpus(path, snippet_tokens=None, permissive=False):
    """Documents of a corpus file, truncated to a number of tokens.

    """
    documents, ids = [], set()
    for number, record in _records(path, permissive):
        doc = _build(_document, path, number, permissive, record=record,
                     snippet_tokens=snippet_tokens)
        if doc is None:
            continue
        if doc.id in ids:
            raise IngestError('Duplicate document id {}'.format(doc.id),
                              path, number)
        ids.add(doc.id)
        documents.append(doc)
    return documents


def ingest(qa_path, corpus_path, snippet_tokens=64, permissive=False,
           name=None):
    """Build a world from external QA and corpus files.

    The memory is empty, every question uses the identity template and the
    categories are computed when first needed.

    Parameters
    ----------
    qa_path : str
        Line delimited QA file.

    corpus_path : str
        Line delimited corpus file.

    snippet_tokens : int, optional
        Number of whitespace tokens kept per document.

    permissive : bool, optional
        Skip malformed lines (with a warning) instead of failing.

    Returns
    -------
    world : World

    """
    questions = read_questions(qa_path, permissive)
    corpus = read_corpus(corpus_path, snippet_tokens, permissive)
    if name is None:
        name = os.path.splitext(os.path.basename(qa_path))[0]
    logger.info('Ingested %d questions and %d documents', len(questions),
                len(corpus))
    return World(name=name, questions=tuple(questions), corpus=tuple(corpus),
                 memory=Memory(entries={}),
                 oracle_map={q.id: 0 for q in questions},
                 spec={'qa_path': qa_path, 'corpus_path': corpus_path,
                       'snippet_tokens': snippet_tokens})


def _write_lines(path, records):
    with open(path, 'w', encoding='utf-8') as f:
        for record in records:
            f.write(json.dumps(record, sort_keys=True))
            f.write('\n')


def export_world(world, directory):
    """Write a world bundle in a directory (created if needed).

    """
    os.makedirs(directory, exist_ok=True)
    _write_lines(os.path.join(directory, QA_FILE),
                 ({'id': q.id, 'question': q.text,
                   'answers': list(q.gold_answers)} for q in world.questions))
    _write_lines(os.path.join(directory, CORPUS_FILE),
                 (d.to_record() for d in world.corpus))
    _write_lines(os.path.join(directory, MEMORY_FILE),
                 ({'id': k, 'answer': v}
                  for k, v in sorted(world.memory.entries.items())))
    _write_lines(os.path.join(directory, ORACLE_FILE),
                 ({'id': q.id, 'template': world.oracle_map.get(q.id, 0)}
                  for q in world.questions))
    categories = world.category_map()
    _write_lines(os.path.join(directory, CATEGORIES_FILE),
                 ({'id': q.id, 'category': categories[q.id]}
                  for q in world.questions))
    manifest = {'name': world.name, 'spec': dict(world.spec),
                'n_questions': len(world.questions),
                'n_documents': len(world.corpus),
                'categories': {c: sum(1 for v in categories.values()
                                      if v == c) for c in CATEGORIES}}
    with open(os.path.join(directory, MANIFEST_FILE), 'w') as f:
        yaml.safe_dump(manifest, f, default_flow_style=False,
                       sort_keys=False)
    logger.info('Exported world %s to %s', world.name, directory)


def load_world(directory):
    """Read a world bundle written by export_world.

    """
    try:
        with open(os.path.join(directory, MANIFEST_FILE)) as f:
            manifest = yaml.safe_load(f) or {}
    except (OSError, yaml.YAMLError) as e:
        raise IngestError('Cannot read the manifest of {}: {}'
                          .format(directory, e), directory) from e
    questions = read_questions(os.path.join(directory, QA_FILE))
    corpus = read_corpus(os.path.join(directory, CORPUS_FILE))
    try:
        memory = {r['id']: r['answer'] for _, r in
                  _records(os.path.join(directory, MEMORY_FILE), False)}
        oracle = {r['id']: int(r['template']) for _, r in
                  _records(os.path.join(directory, ORACLE_FILE), False)}
        categories = {r['id']: r['category'] for _, r in
                      _records(os.path.join(directory, CATEGORIES_FILE),
                               False)}
    except (KeyError, ValueError) as e:
        raise IngestError('Malformed bundle {}: {}'.format(directory, e),
                          directory) from e
    if set(categories) != set(q.id for q in questions):
        raise IngestError('The categories of {} do not match its questions'
                          .format(directory), directory)
    return World(name=manifest.get('name', 'world'),
                 questions=tuple(questions), corpus=tuple(corpus),
                 memory=Memory(entries=memory), oracle_map=oracle,
                 categories=categories, spec=manifest.get('spec') or {})

