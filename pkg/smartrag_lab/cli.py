# -*- coding: utf-8 -*-
# -----------------------------------------------------------------------------
# Copyright 2024 by SmartRAG Lab Authors, see AUTHORS for more details.
#
# Distributed under the terms of the BSD license.
#
# The full license is in the file LICENCE, distributed with this software.
# -----------------------------------------------------------------------------
"""Command line entry point.

Every command accepts a YAML configuration (--config), a named preset
(--preset) and one flag per configuration member (--ppo.lr=0.01). Values
are applied in this order: defaults, configuration file, preset, flags (the
last occurrence of a flag wins).

Exit codes: 0 on success, 2 on configuration or argument errors, 3 on any
other failure. Errors are reported on stderr as one JSON record.

"""
import os
import sys
import json
import logging
import argparse
from functools import partial

from atom.api import Bool, Enum, Float, Int

from .config import (PRESETS, RunConfig, apply_preset, dump_config,
                     load_config)
from .errors import ConfigurationError, LabError
from .evaluation.harness import (REPORT_COLUMNS, ablation_replace_generator,
                                 ablation_replace_query, evaluate,
                                 reference_points, threshold_sweep,
                                 transfer_report)
from .evaluation.oracle import (brute_force_optimal, plan_agreement,
                                policy_agreement, replay_plans)
from .evaluation.reports import (report_record, write_csv, write_curve,
                                 write_yaml)
from .evaluation.studies import (initial_policy_study, retrieval_k_study,
                                 seed_suite)
from .policy.heads import SampleMode
from .policy.params import load_checkpoint, save_checkpoint
from .training.pipeline import METRICS_COLUMNS, train, warmup
from .version import __version__
from .worlds.generation import gen_world
from .worlds.ingest import export_world, ingest, load_world

logger = logging.getLogger(__name__)

EXIT_CONFIG = 2

EXIT_RUNTIME = 3


class _Parser(argparse.ArgumentParser):
    """Parser turning argument errors into configuration errors.

    """
    def error(self, message):
        raise ConfigurationError(message)


def _to_bool(value):
    lowered = value.lower()
    if lowered in ('1', 'true', 'yes', 'on'):
        return True
    if lowered in ('0', 'false', 'no', 'off'):
        return False
    raise argparse.ArgumentTypeError('invalid boolean {!r}'.format(value))


def _add_config_flags(parser):
    group = parser.add_argument_group('configuration members')
    for path, member in RunConfig().iter_leaf_members():
        kwargs = {'dest': 'cfg:' + path, 'default': argparse.SUPPRESS,
                  'metavar': 'VALUE'}
        if isinstance(member, Bool):
            kwargs['type'] = _to_bool
        elif isinstance(member, Int):
            kwargs['type'] = int
        elif isinstance(member, Float):
            kwargs['type'] = float
        elif isinstance(member, Enum):
            kwargs['choices'] = member.items
            kwargs.pop('metavar')
        doc = ''
        if member.metadata and member.metadata.get('required'):
            doc = 'required'
        group.add_argument('--' + path, help=doc or None, **kwargs)


def _command(subparsers, name, help, world=True, checkpoint=False):
    parser = subparsers.add_parser(name, help=help, allow_abbrev=False)
    parser.add_argument('--config', help='YAML run configuration')
    parser.add_argument('--preset', choices=sorted(PRESETS),
                        help='named set of published values')
    parser.add_argument('--out', help='run directory (out_dir/<command> by '
                        'default)')
    if world:
        parser.add_argument('--world', required=True,
                            help='world bundle directory')
    if checkpoint:
        parser.add_argument('--checkpoint', required=True,
                            help='policy checkpoint (HDF5)')
    _add_config_flags(parser)
    return parser


def build_parser():
    """Argument parser of all the commands.

    """
    parser = _Parser(prog='smartrag-lab', allow_abbrev=False,
                     description='Desk scale retrieval decision laboratory.')
    parser.add_argument('--version', action='version', version=__version__)
    parser.add_argument('--log-level', default='INFO',
                        choices=('DEBUG', 'INFO', 'WARNING', 'ERROR'))
    subparsers = parser.add_subparsers(dest='command', metavar='command',
                                       parser_class=_Parser)
    subparsers.required = True

    _command(subparsers, 'gen-world', 'generate a synthetic world bundle',
             world=False)
    p = _command(subparsers, 'ingest', 'build a world bundle from QA and '
                 'corpus files', world=False)
    p.add_argument('--qa', required=True, help='line delimited QA file')
    p.add_argument('--corpus', required=True,
                   help='line delimited corpus file')
    _command(subparsers, 'warmup', 'behavior clone the initial policy')
    p = _command(subparsers, 'train', 'warm-up then PPO iterations')
    p.add_argument('--eval-world', help='world used by the per-iteration '
                   'evaluation')
    p = _command(subparsers, 'eval', 'evaluate a checkpoint',
                 checkpoint=True)
    p.add_argument('--tau', type=float,
                   help='threshold on the Answer logit (greedy if absent)')
    p = _command(subparsers, 'sweep', 'threshold sweep of a checkpoint',
                 checkpoint=True)
    p.add_argument('--taus', help='comma separated thresholds (default grid '
                   'when absent)')
    _command(subparsers, 'transfer', 'retrieval ratio per category',
             checkpoint=True)
    p = _command(subparsers, 'oracle-check', 'agreement with the brute '
                 'force optimal plans')
    p.add_argument('--checkpoint', help='policy checkpoint, the optimal '
                   'plans are replayed when absent')
    p = _command(subparsers, 'ablate', 'replace query and replace '
                 'generator ablations', checkpoint=True)
    p.add_argument('--warmup-checkpoint', required=True,
                   help='checkpoint providing the answer head')
    p = _command(subparsers, 'k-study', 'train one policy per number of '
                 'retrieved snippets')
    p.add_argument('--ks', default='1,4', help='comma separated values')
    p.add_argument('--seeds', help='comma separated run seeds to summarize')
    p = _command(subparsers, 'initial-study', 'compare the warm-up variants')
    p.add_argument('--seeds', help='comma separated run seeds to summarize')
    return parser


def resolve_config(args, environ=None):
    """Build and check the run configuration of parsed arguments.

    """
    config = RunConfig()
    if args.config:
        load_config(args.config, config)
    if args.preset:
        apply_preset(config, args.preset)
    for key, value in vars(args).items():
        if key.startswith('cfg:'):
            config.set_dotted(key[4:], value)
    config.resolve_seed(environ)
    test, traceback = config.check(
        world_required=args.command == 'gen-world')
    if not test:
        field = sorted(traceback)[0]
        details = '; '.join('{}: {}'.format(k, traceback[k])
                            for k in sorted(traceback))
        raise ConfigurationError('Invalid configuration ({})'.format(details),
                                 field)
    return config


def _floats(text, name):
    try:
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError as e:
        raise ConfigurationError('Invalid {} list {!r}'.format(name, text),
                                 name) from e


class _Run(object):
    """Run directory of a command and its manifest.

    """
    def __init__(self, args, config):
        self.command = args.command
        self.config = config
        self.directory = args.out or os.path.join(config.out_dir,
                                                  args.command)
        self.inputs = {k: getattr(args, k) for k in
                       ('world', 'checkpoint', 'qa', 'corpus')
                       if getattr(args, k, None)}
        self.outputs = []
        os.makedirs(self.directory, exist_ok=True)
        dump_config(config, self.path('config.yaml'))

    def path(self, name):
        return os.path.join(self.directory, name)

    def output(self, name):
        self.outputs.append(name)
        return self.path(name)

    def checkpoint(self, name, params):
        echo = json.loads(json.dumps(self.config.preferences_from_members()))
        save_checkpoint(self.output(name), params, echo)

    def close(self, extra=None):
        manifest = {'command': self.command, 'version': __version__,
                    'seed': self.config.seed, 'inputs': self.inputs,
                    'outputs': sorted(self.outputs)}
        manifest.update(extra or {})
        write_yaml(self.path('manifest.yaml'), manifest)


def _load_params(path, config):
    params, _ = load_checkpoint(path, expected=config.policy)
    return params


def cmd_gen_world(args, config):
    run = _Run(args, config)
    world = gen_world(config.world, name='world')
    # The bundle manifest doubles as the run manifest.
    export_world(world, run.directory)
    return world


def cmd_ingest(args, config):
    run = _Run(args, config)
    world = ingest(args.qa, args.corpus, config.ingest.snippet_tokens,
                   config.ingest.permissive)
    export_world(world, run.directory)
    return world


def _write_report(run, report, name):
    write_yaml(run.output(name + '.yaml'), report_record(report))


def cmd_warmup(args, config):
    run = _Run(args, config)
    world = load_world(args.world)
    params = warmup(world, config)
    run.checkpoint('warmup.h5', params)
    report = evaluate(params, world, config.env, config.policy.hash_seed,
                      eval_cfg=config.eval,
                      workers=config.train.resolved_workers())
    _write_report(run, report, 'eval')
    run.close()
    return report


def cmd_train(args, config):
    run = _Run(args, config)
    world = load_world(args.world)
    eval_world = load_world(args.eval_world) if args.eval_world else None
    result = train(world, config, eval_world=eval_world)
    run.checkpoint('warmup.h5', result.warmup_params)
    for i, params in enumerate(result.checkpoints):
        run.checkpoint('iter_{:03d}.h5'.format(i), params)
    run.checkpoint('final.h5', result.params)
    write_csv(run.output('metrics.csv'), result.metrics, METRICS_COLUMNS)
    run.close()
    return result


def cmd_eval(args, config):
    run = _Run(args, config)
    world = load_world(args.world)
    params = _load_params(args.checkpoint, config)
    if args.tau is None:
        mode = SampleMode.greedy()
    else:
        mode = SampleMode.threshold(args.tau, config.eval.threshold_on)
    report = evaluate(params, world, config.env, config.policy.hash_seed,
                      mode, config.eval,
                      workers=config.train.resolved_workers())
    _write_report(run, report, 'report')
    write_csv(run.output('report.csv'), [report.to_row()], REPORT_COLUMNS)
    references = reference_points(params, world, config.env,
                                  config.policy.hash_seed, config.eval)
    rows = [dict(r.to_row(), row=name) for name, r in references.items()]
    write_csv(run.output('reference_points.csv'), rows,
              ('row',) + REPORT_COLUMNS)
    run.close()
    return report


def cmd_sweep(args, config):
    run = _Run(args, config)
    world = load_world(args.world)
    params = _load_params(args.checkpoint, config)
    taus = _floats(args.taus, 'taus') if args.taus else None
    rows = threshold_sweep(params, world, config.env,
                           config.policy.hash_seed, taus, config.eval,
                           workers=config.train.resolved_workers())
    write_csv(run.output('sweep.csv'), rows,
              ('tau', 'retrieval_pct', 'em', 'f1', 'hit'))
    xs = [r['retrieval_pct'] for r in rows]
    write_curve(run.output('f1_vs_retrieval.dat'), xs,
                [r['f1'] for r in rows], 'retrieval_pct f1')
    write_curve(run.output('em_vs_retrieval.dat'), xs,
                [r['em'] for r in rows], 'retrieval_pct em')
    run.close()
    return rows


def cmd_transfer(args, config):
    run = _Run(args, config)
    world = load_world(args.world)
    params = _load_params(args.checkpoint, config)
    report = transfer_report(params, world, config.env,
                             config.policy.hash_seed, config.eval,
                             workers=config.train.resolved_workers())
    write_yaml(run.output('transfer.yaml'),
               {'threshold': config.eval.transfer_threshold,
                'ratios': dict(report.category_ratios),
                'report': report_record(report)})
    run.close()
    return report


def cmd_oracle_check(args, config):
    run = _Run(args, config)
    world = load_world(args.world)
    retriever = world.retriever()
    plans = brute_force_optimal(world, config.env, config.policy.n_templates,
                                retriever)
    if args.checkpoint:
        params = _load_params(args.checkpoint, config)
        rate = policy_agreement(params, world, plans, config.env,
                                config.policy.hash_seed, retriever)
    else:
        rate = plan_agreement(replay_plans(world, plans, config.env,
                                           retriever), plans)
    records = [{'question_id': p.question_id,
                'actions': [[a.kind, a.text] for a in p.actions],
                'value': p.value, 'best_em': p.best_em,
                'best_f1': p.best_f1} for p in plans.values()]
    write_yaml(run.output('oracle.yaml'), {'agreement': rate,
                                           'plans': records})
    print('agreement: {:.2f}%'.format(rate))
    run.close({'agreement': rate})
    return rate


def cmd_ablate(args, config):
    run = _Run(args, config)
    world = load_world(args.world)
    params = _load_params(args.checkpoint, config)
    initial = _load_params(args.warmup_checkpoint, config)
    hash_seed = config.policy.hash_seed
    workers = config.train.resolved_workers()
    reports = {
        'unmodified': evaluate(params, world, config.env, hash_seed,
                               eval_cfg=config.eval, workers=workers),
        'replace_query': ablation_replace_query(
            params, world, config.env, hash_seed, config.eval,
            workers=workers),
        'replace_generator': ablation_replace_generator(
            params, initial, world, config.env, hash_seed, config.eval,
            workers=workers)}
    rows = [dict(r.to_row(), row=name) for name, r in reports.items()]
    write_csv(run.output('ablation.csv'), rows, ('row',) + REPORT_COLUMNS)
    run.close()
    return reports


SUMMARY_COLUMNS = ('column', 'mean', 'std', 'n')


def _seed_summary(run, name, study, world, config, args, key):
    seeds = [int(s) for s in _floats(args.seeds, 'seeds')]
    _, summary = seed_suite(study, world, config, seeds, key)
    rows = [dict(stats, **{key: row[key], 'column': column})
            for row in summary for column, stats in sorted(row.items())
            if column != key]
    write_csv(run.output(name), rows, (key,) + SUMMARY_COLUMNS)
    return summary


def cmd_k_study(args, config):
    run = _Run(args, config)
    world = load_world(args.world)
    ks = [int(k) for k in _floats(args.ks, 'ks')]
    rows = retrieval_k_study(world, config, ks)
    write_csv(run.output('k_study.csv'), rows,
              ('k', 'em', 'f1', 'hit', 'retrieval_pct'))
    if args.seeds:
        _seed_summary(run, 'k_study_seeds.csv',
                      partial(retrieval_k_study, ks=ks), world, config,
                      args, 'k')
    run.close()
    return rows


def cmd_initial_study(args, config):
    run = _Run(args, config)
    world = load_world(args.world)
    rows = initial_policy_study(world, config)
    write_csv(run.output('initial_study.csv'), rows,
              ('variant', 'warmup_em', 'warmup_f1', 'final_em', 'final_f1'))
    if args.seeds:
        _seed_summary(run, 'initial_study_seeds.csv', initial_policy_study,
                      world, config, args, 'variant')
    run.close()
    return rows


COMMANDS = {'gen-world': cmd_gen_world, 'ingest': cmd_ingest,
            'warmup': cmd_warmup, 'train': cmd_train, 'eval': cmd_eval,
            'sweep': cmd_sweep, 'transfer': cmd_transfer,
            'oracle-check': cmd_oracle_check, 'ablate': cmd_ablate,
            'k-study': cmd_k_study, 'initial-study': cmd_initial_study}


def _report_error(error, code):
    record = {'error': getattr(error, 'kind', type(error).__name__),
              'message': str(error), 'field': getattr(error, 'field', None)}
    sys.stderr.write(json.dumps(record) + '\n')
    return code


def main(argv=None, environ=None):
    """Run a command and return its exit code.

    """
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=args.log_level,
                            format='%(asctime)s %(levelname)s %(name)s: '
                            '%(message)s')
        config = resolve_config(args, environ)
        COMMANDS[args.command](args, config)
    except ConfigurationError as e:
        return _report_error(e, EXIT_CONFIG)
    except LabError as e:
        logger.debug('Command failed', exc_info=True)
        return _report_error(e, EXIT_RUNTIME)
    return 0


if __name__ == '__main__':
    sys.exit(main())
