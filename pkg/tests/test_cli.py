# -*- coding: utf-8 -*-
# -----------------------------------------------------------------------------
# Copyright 2024 by SmartRAG Lab Authors, see AUTHORS for more details.
#
# Distributed under the terms of the BSD license.
#
# The full license is in the file LICENCE, distributed with this software.
# -----------------------------------------------------------------------------
"""Test the command line entry point.

"""
import os
import json

import pytest
import yaml

from smartrag_lab.cli import EXIT_CONFIG, EXIT_RUNTIME, main
from smartrag_lab.config import SEED_ENV_VAR
from smartrag_lab.evaluation.reports import read_csv
from smartrag_lab.training.pipeline import METRICS_COLUMNS
from smartrag_lab.worlds.ingest import load_world

SMALL = ['--policy.dim=32', '--ppo.sampling_budget=16', '--train.workers=1']


def error_record(capsys):
    err = capsys.readouterr().err.strip().splitlines()[-1]
    return json.loads(err)


def gen_world(directory, *extra):
    return main(['gen-world', '--seed=1', '--world.n_questions=6',
                 '--world.vocab_size=20', '--out', directory] + list(extra),
                environ={})


@pytest.fixture
def bundle(tmpdir):
    directory = str(tmpdir.join('world'))
    assert gen_world(directory) == 0
    return directory


class TestErrors(object):

    def test_missing_seed(self, tmpdir, capsys):
        code = main(['gen-world', '--world.n_questions=4',
                     '--out', str(tmpdir)], environ={})
        assert code == EXIT_CONFIG
        record = error_record(capsys)
        assert record['error'] == 'config'
        assert record['field'] == 'seed'

    def test_seed_from_environment(self, tmpdir):
        code = main(['gen-world', '--world.n_questions=4',
                     '--world.vocab_size=10', '--out', str(tmpdir)],
                    environ={SEED_ENV_VAR: '4'})
        assert code == 0
        with open(os.path.join(str(tmpdir), 'config.yaml')) as f:
            assert yaml.safe_load(f)['seed'] == 4

    def test_missing_world_size(self, tmpdir, capsys):
        code = main(['gen-world', '--seed=1', '--out', str(tmpdir)],
                    environ={})
        assert code == EXIT_CONFIG
        assert error_record(capsys)['field'] == 'world.n_questions'

    def test_unknown_flag(self, tmpdir, capsys):
        code = main(['gen-world', '--seed=1', '--world.n_questions=4',
                     '--ppo.learning_rate=0.1', '--out', str(tmpdir)],
                    environ={})
        assert code == EXIT_CONFIG
        assert error_record(capsys)['error'] == 'config'

    def test_invalid_value(self, tmpdir):
        code = main(['gen-world', '--seed=1', '--world.n_questions=4',
                     '--ppo.lr=fast', '--out', str(tmpdir)], environ={})
        assert code == EXIT_CONFIG

    def test_invalid_check(self, tmpdir, capsys):
        code = main(['gen-world', '--seed=1', '--world.n_questions=4',
                     '--ppo.clip_eps=0', '--out', str(tmpdir)], environ={})
        assert code == EXIT_CONFIG
        assert error_record(capsys)['field'] == 'ppo.clip_eps'

    def test_missing_world_bundle(self, tmpdir, capsys):
        code = main(['eval', '--seed=1', '--world', str(tmpdir.join('none')),
                     '--checkpoint', str(tmpdir.join('none.h5')),
                     '--out', str(tmpdir.join('run'))], environ={})
        assert code == EXIT_RUNTIME
        assert error_record(capsys)['error'] == 'ingest'

    def test_mismatching_checkpoint(self, bundle, tmpdir):
        out = str(tmpdir.join('warmup'))
        assert main(['warmup', '--seed=1', '--world', bundle, '--out', out] +
                    SMALL, environ={}) == 0
        code = main(['eval', '--seed=1', '--world', bundle, '--checkpoint',
                     os.path.join(out, 'warmup.h5'), '--policy.dim=64',
                     '--out', str(tmpdir.join('eval'))], environ={})
        assert code == EXIT_CONFIG


class TestWorldCommands(object):

    def test_identical_bundles(self, tmpdir):
        first, second = str(tmpdir.join('a')), str(tmpdir.join('b'))
        assert gen_world(first) == 0
        assert gen_world(second) == 0
        names = sorted(os.listdir(first))
        assert names == sorted(os.listdir(second))
        assert 'manifest.yaml' in names
        for name in names:
            with open(os.path.join(first, name), 'rb') as f1, \
                    open(os.path.join(second, name), 'rb') as f2:
                assert f1.read() == f2.read()

    def test_bundle_is_loadable(self, bundle):
        world = load_world(bundle)
        assert len(world.questions) == 6

    def test_ingest(self, tmpdir):
        qa = tmpdir.join('qa.jsonl')
        qa.write(json.dumps({'id': 'a', 'question': 'When was Tower built?',
                             'answers': ['2004']}) + '\n')
        corpus = tmpdir.join('corpus.jsonl')
        corpus.write(json.dumps({'id': 'd', 'title': 'Tower',
                                 'text': 'Tower built in 2004'}) + '\n')
        out = str(tmpdir.join('bundle'))
        code = main(['ingest', '--seed=1', '--qa', str(qa), '--corpus',
                     str(corpus), '--out', out], environ={})
        assert code == 0
        assert [q.id for q in load_world(out).questions] == ['a']


class TestPolicyCommands(object):

    def test_warmup_and_eval(self, bundle, tmpdir):
        warm = str(tmpdir.join('warmup'))
        assert main(['warmup', '--seed=2', '--world', bundle, '--out', warm] +
                    SMALL, environ={}) == 0
        checkpoint = os.path.join(warm, 'warmup.h5')
        assert os.path.isfile(checkpoint)
        with open(os.path.join(warm, 'manifest.yaml')) as f:
            manifest = yaml.safe_load(f)
        assert manifest['command'] == 'warmup'
        assert manifest['seed'] == 2
        assert 'warmup.h5' in manifest['outputs']

        out = str(tmpdir.join('eval'))
        assert main(['eval', '--seed=2', '--world', bundle, '--checkpoint',
                     checkpoint, '--out', out] + SMALL, environ={}) == 0
        rows = read_csv(os.path.join(out, 'reference_points.csv'))
        assert [r['row'] for r in rows] == ['no_retrieval', 'full_retrieval',
                                            'policy']
        assert float(rows[1]['retrieval_pct']) == 100.0

        out = str(tmpdir.join('sweep'))
        assert main(['sweep', '--seed=2', '--world', bundle, '--checkpoint',
                     checkpoint, '--taus=1,-1', '--out', out] + SMALL,
                    environ={}) == 0
        rows = read_csv(os.path.join(out, 'sweep.csv'))
        assert [float(r['tau']) for r in rows] == [-1.0, 1.0]
        assert os.path.isfile(os.path.join(out, 'f1_vs_retrieval.dat'))

        out = str(tmpdir.join('ablate'))
        assert main(['ablate', '--seed=2', '--world', bundle, '--checkpoint',
                     checkpoint, '--warmup-checkpoint', checkpoint,
                     '--out', out] + SMALL, environ={}) == 0
        rows = read_csv(os.path.join(out, 'ablation.csv'))
        assert rows[0]['em'] == rows[2]['em']

    def test_transfer(self, bundle, tmpdir):
        warm = str(tmpdir.join('warmup'))
        assert main(['warmup', '--seed=2', '--world', bundle, '--out', warm] +
                    SMALL, environ={}) == 0
        out = str(tmpdir.join('transfer'))
        assert main(['transfer', '--seed=2', '--world', bundle,
                     '--checkpoint', os.path.join(warm, 'warmup.h5'),
                     '--out', out] + SMALL, environ={}) == 0
        with open(os.path.join(out, 'transfer.yaml')) as f:
            content = yaml.safe_load(f)
        assert content['threshold'] == 0.5
        assert set(content['ratios']) == {'DirectAnswerable',
                                          'NeedsRetrieval', 'Unanswerable'}

    def test_oracle_check(self, bundle, tmpdir, capsys):
        out = str(tmpdir.join('oracle'))
        assert main(['oracle-check', '--seed=1', '--world', bundle,
                     '--out', out], environ={}) == 0
        assert 'agreement: 100.00%' in capsys.readouterr().out
        with open(os.path.join(out, 'oracle.yaml')) as f:
            content = yaml.safe_load(f)
        assert len(content['plans']) == 6

    def test_train(self, bundle, tmpdir):
        out = str(tmpdir.join('train'))
        assert main(['train', '--seed=3', '--world', bundle,
                     '--train.iterations=1', '--out', out] + SMALL,
                    environ={}) == 0
        for name in ('warmup.h5', 'iter_000.h5', 'iter_001.h5', 'final.h5'):
            assert os.path.isfile(os.path.join(out, name))
        rows = read_csv(os.path.join(out, 'metrics.csv'))
        assert list(rows[0]) == list(METRICS_COLUMNS)
        assert [r['iter'] for r in rows] == ['0', '1']
        assert rows[0]['kl'] == ''

    def test_train_is_reproducible(self, bundle, tmpdir):
        outs = [str(tmpdir.join(name)) for name in ('first', 'second')]
        for out in outs:
            assert main(['train', '--seed=3', '--world', bundle,
                         '--train.iterations=1', '--out', out] + SMALL,
                        environ={}) == 0
        for name in ('warmup.h5', 'iter_001.h5', 'final.h5', 'metrics.csv'):
            contents = []
            for out in outs:
                with open(os.path.join(out, name), 'rb') as f:
                    contents.append(f.read())
            assert contents[0] == contents[1]

    def test_train_without_iterations(self, bundle, tmpdir):
        out = str(tmpdir.join('train'))
        assert main(['train', '--seed=3', '--world', bundle,
                     '--train.iterations=0', '--out', out] + SMALL,
                    environ={}) == 0
        rows = read_csv(os.path.join(out, 'metrics.csv'))
        assert [r['iter'] for r in rows] == ['0']

        warm = str(tmpdir.join('warmup'))
        assert main(['warmup', '--seed=3', '--world', bundle, '--out', warm] +
                    SMALL, environ={}) == 0
        evaluated = str(tmpdir.join('eval'))
        assert main(['eval', '--seed=3', '--world', bundle, '--checkpoint',
                     os.path.join(warm, 'warmup.h5'), '--out', evaluated] +
                    SMALL, environ={}) == 0
        report = read_csv(os.path.join(evaluated, 'report.csv'))[0]
        for column in ('em', 'f1', 'hit'):
            assert rows[0]['eval_' + column] == report[column]
        assert rows[0]['retrieval_pct'] == report['retrieval_pct']

    @pytest.mark.slow
    def test_k_study_over_seeds(self, bundle, tmpdir):
        out = str(tmpdir.join('k'))
        assert main(['k-study', '--seed=3', '--world', bundle, '--ks=1,2',
                     '--seeds=3,4', '--train.iterations=1', '--out', out] +
                    SMALL, environ={}) == 0
        rows = read_csv(os.path.join(out, 'k_study_seeds.csv'))
        assert {(r['k'], r['column']) for r in rows} == \
            {(k, c) for k in ('1', '2')
             for c in ('em', 'f1', 'hit', 'retrieval_pct')}
        assert {r['n'] for r in rows} == {'2'}
