# -*- coding: utf-8 -*-
# -----------------------------------------------------------------------------
# Copyright 2024 by SmartRAG Lab Authors, see AUTHORS for more details.
#
# Distributed under the terms of the BSD license.
#
# The full license is in the file LICENCE, distributed with this software.
# -----------------------------------------------------------------------------
"""Configuration sections shared by all the stages of an experiment.

Every section is a `PrefAtom`: members tagged with ``pref=True`` are written
to and read from the YAML run configuration and can be overridden from the
command line using their dotted path (``--ppo.lr=0.01``).

"""
import os
import zlib
import logging
from collections import OrderedDict

import numpy as np
import yaml
from atom.api import (Atom, Bool, Enum, Float, Int, Str, Typed)

from .errors import ConfigurationError

logger = logging.getLogger(__name__)

#: Environment variable used when no seed is found in the configuration.
SEED_ENV_VAR = 'SMARTRAG_LAB_SEED'


def _ordered_members(cls):
    """Members of an atom class in declaration order.

    """
    return sorted(cls.members().values(), key=lambda m: m.index)


class PrefAtom(Atom):
    """Atom whose tagged members can be saved to and restored from a dict.

    """
    def preferences_from_members(self):
        """Collect the values of all the members tagged with pref.

        Returns
        -------
        prefs : OrderedDict
            Nested sections are themselves converted to OrderedDict.

        """
        prefs = OrderedDict()
        for member in _ordered_members(type(self)):
            if not member.metadata or not member.metadata.get('pref'):
                continue
            value = getattr(self, member.name)
            if isinstance(value, PrefAtom):
                value = value.preferences_from_members()
            prefs[member.name] = value
        return prefs

    def update_members_from_preferences(self, prefs, path=''):
        """Update the members values using a (nested) dict.

        Parameters
        ----------
        prefs : dict
            Values to assign, unknown keys are rejected.

        path : str, optional
            Dotted prefix used to report errors.

        """
        for name, value in prefs.items():
            full = path + name
            member = self.get_member(name)
            if (member is None or not member.metadata or
                    not member.metadata.get('pref')):
                raise ConfigurationError('Unknown configuration entry '
                                         '{}'.format(full), full)
            current = getattr(self, name)
            if isinstance(current, PrefAtom):
                if not isinstance(value, dict):
                    msg = 'Section {} expects a mapping, got {!r}'
                    raise ConfigurationError(msg.format(full, value), full)
                current.update_members_from_preferences(value, full + '.')
                continue
            try:
                setattr(self, name, value)
            except (TypeError, ValueError) as e:
                msg = 'Invalid value {!r} for {}: {}'
                raise ConfigurationError(msg.format(value, full, e),
                                         full) from e

    def set_dotted(self, dotted, value):
        """Assign a value given a dotted path relative to this section.

        """
        head, _, rest = dotted.partition('.')
        if rest:
            section = getattr(self, head, None)
            if not isinstance(section, PrefAtom):
                raise ConfigurationError('Unknown configuration entry '
                                         '{}'.format(dotted), dotted)
            try:
                section.set_dotted(rest, value)
            except ConfigurationError as e:
                raise ConfigurationError(str(e), head + '.' + rest) from e
        else:
            self.update_members_from_preferences({head: value})

    def iter_leaf_members(self, path=''):
        """Iterate over (dotted path, member) for every non section entry.

        """
        for member in _ordered_members(type(self)):
            if not member.metadata or not member.metadata.get('pref'):
                continue
            value = getattr(self, member.name)
            if isinstance(value, PrefAtom):
                for item in value.iter_leaf_members(path + member.name + '.'):
                    yield item
            else:
                yield path + member.name, member

    def check(self, path=''):
        """Check that the values make sense.

        Returns
        -------
        test : bool
            Whether all the checks passed.

        traceback : dict
            Dotted member path -> error message.

        """
        test, traceback = True, {}
        for member in _ordered_members(type(self)):
            value = getattr(self, member.name)
            if isinstance(value, PrefAtom):
                t, tb = value.check(path + member.name + '.')
                test &= t
                traceback.update(tb)
        return test, traceback

    def _fail(self, traceback, path, name, msg):
        traceback[path + name] = msg
        return False


class EnvConfig(PrefAtom):
    """Parameters of the retrieve-or-answer episode.

    """
    #: Maximal number of Query actions in one episode.
    quota = Int(1).tag(pref=True)

    #: Number of snippets concatenated into one observation.
    top_k = Int(4).tag(pref=True)

    #: Penalty paid for every Query action.
    alpha = Float(0.2).tag(pref=True)

    #: Discount factor of the return.
    gamma = Float(0.99).tag(pref=True)

    def check(self, path=''):
        test, traceback = super(EnvConfig, self).check(path)
        if self.quota < 0:
            test = self._fail(traceback, path, 'quota',
                              'The retrieval quota cannot be negative.')
        if self.top_k < 1:
            test = self._fail(traceback, path, 'top_k',
                              'At least one snippet must be retrieved.')
        if self.alpha < 0:
            test = self._fail(traceback, path, 'alpha',
                              'The retrieval penalty cannot be negative.')
        if not 0 < self.gamma <= 1:
            test = self._fail(traceback, path, 'gamma',
                              'The discount must lie in (0, 1].')
        return test, traceback

    def reward_config(self, kl_beta=0.0):
        """Reward parameters of the episodes run with this configuration.

        """
        return RewardConfig(alpha=self.alpha, gamma=self.gamma,
                            kl_beta=kl_beta)


class RewardConfig(Atom):
    """Parameters of the per-step reward.

    """
    #: Penalty paid for every Query action.
    alpha = Float(0.2)

    #: Discount factor of the return.
    gamma = Float(0.99)

    #: Coefficient of the optional per-step KL penalty.
    kl_beta = Float(0.0)


class PolicyConfig(PrefAtom):
    """Shape of the parametric policy.

    """
    #: Dimension of the hashed state features.
    dim = Int(1024).tag(pref=True)

    #: Number of rewrite templates offered to the rewrite head (at most 4).
    n_templates = Int(4).tag(pref=True)

    #: Width of the optional tanh hidden layer (0 means linear heads).
    hidden_units = Int(0).tag(pref=True)

    #: Seed of the 64 bits feature hashing.
    hash_seed = Int(0x5EED5EED).tag(pref=True)

    #: Standard deviation scale of the hidden layer initialisation.
    init_scale = Float(1.0).tag(pref=True)

    def check(self, path=''):
        test, traceback = super(PolicyConfig, self).check(path)
        if self.dim < 8:
            test = self._fail(traceback, path, 'dim',
                              'The feature dimension must be at least 8.')
        if not 1 <= self.n_templates <= 4:
            test = self._fail(traceback, path, 'n_templates',
                              'Between 1 and 4 templates are available.')
        if self.hidden_units < 0:
            test = self._fail(traceback, path, 'hidden_units',
                              'The hidden width cannot be negative.')
        if not 0 <= self.hash_seed < 2**64:
            test = self._fail(traceback, path, 'hash_seed',
                              'The hashing seed must fit on 64 bits.')
        return test, traceback


class BcConfig(PrefAtom):
    """Behavior cloning (warm-up) parameters.

    """
    #: Learning rate.
    lr = Float(0.05).tag(pref=True)

    #: Number of examples per gradient step.
    batch_size = Int(8).tag(pref=True)

    #: Number of passes over the warm-up dataset.
    epochs = Int(1).tag(pref=True)

    #: Update rule.
    optimizer = Enum('adam', 'sgd').tag(pref=True)

    def check(self, path=''):
        test, traceback = super(BcConfig, self).check(path)
        if self.lr < 0:
            test = self._fail(traceback, path, 'lr',
                              'The learning rate cannot be negative.')
        if self.batch_size < 1:
            test = self._fail(traceback, path, 'batch_size',
                              'The batch size must be positive.')
        if self.epochs < 0:
            test = self._fail(traceback, path, 'epochs',
                              'The number of epochs cannot be negative.')
        return test, traceback


class PpoConfig(PrefAtom):
    """Proximal policy optimisation parameters.

    The discount is shared with the episode configuration.

    """
    #: Half width of the ratio clipping interval.
    clip_eps = Float(0.2).tag(pref=True)

    #: Exponential weight of the generalized advantage estimation.
    gae_lambda = Float(0.95).tag(pref=True)

    #: Learning rate.
    lr = Float(0.02).tag(pref=True)

    #: Number of steps per gradient step.
    batch_size = Int(32).tag(pref=True)

    #: Number of passes over each rollout batch.
    epochs_per_iter = Int(1).tag(pref=True)

    #: Weight of the value regression term.
    value_coef = Float(0.5).tag(pref=True)

    #: Weight of the entropy bonus.
    entropy_coef = Float(0.01).tag(pref=True)

    #: Coefficient of the per-step KL penalty against the reference policy.
    kl_beta = Float(0.0).tag(pref=True)

    #: Whether advantages are standardised per batch.
    normalize_advantages = Bool(True).tag(pref=True)

    #: Minimal number of steps collected per iteration.
    sampling_budget = Int(5120).tag(pref=True)

    #: Update rule.
    optimizer = Enum('adam', 'sgd').tag(pref=True)

    #: Global gradient norm clipping (0 disables it).
    max_grad_norm = Float(0.0).tag(pref=True)

    def check(self, path=''):
        test, traceback = super(PpoConfig, self).check(path)
        if self.clip_eps <= 0:
            test = self._fail(traceback, path, 'clip_eps',
                              'The clipping half width must be positive.')
        if not 0 <= self.gae_lambda <= 1:
            test = self._fail(traceback, path, 'gae_lambda',
                              'Lambda must lie in [0, 1].')
        if self.lr < 0:
            test = self._fail(traceback, path, 'lr',
                              'The learning rate cannot be negative.')
        if self.batch_size < 1:
            test = self._fail(traceback, path, 'batch_size',
                              'The batch size must be positive.')
        if self.epochs_per_iter < 1:
            test = self._fail(traceback, path, 'epochs_per_iter',
                              'At least one epoch per iteration is needed.')
        if self.sampling_budget < 1:
            test = self._fail(traceback, path, 'sampling_budget',
                              'The sampling budget must be positive.')
        for name in ('value_coef', 'entropy_coef', 'kl_beta',
                     'max_grad_norm'):
            if getattr(self, name) < 0:
                test = self._fail(traceback, path, name,
                                  'The value cannot be negative.')
        return test, traceback


class TrainConfig(PrefAtom):
    """Orchestration of warm-up and PPO iterations.

    """
    #: Initial policy variant (all example types or knowledge filtered).
    variant = Enum('pi0', 'pi0_star').tag(pref=True)

    #: Number of PPO iterations following the warm-up.
    iterations = Int(20).tag(pref=True)

    #: Probability that the rewrite oracle returns the designated template.
    oracle_q = Float(0.7).tag(pref=True)

    #: Number of rollout workers (0 means one per core).
    workers = Int(0).tag(pref=True)

    def check(self, path=''):
        test, traceback = super(TrainConfig, self).check(path)
        if self.iterations < 0:
            test = self._fail(traceback, path, 'iterations',
                              'The number of iterations cannot be negative.')
        if not 0 <= self.oracle_q <= 1:
            test = self._fail(traceback, path, 'oracle_q',
                              'The oracle probability must lie in [0, 1].')
        if self.workers < 0:
            test = self._fail(traceback, path, 'workers',
                              'The number of workers cannot be negative.')
        return test, traceback

    def resolved_workers(self):
        """Number of workers to actually use.

        """
        return self.workers or (os.cpu_count() or 1)


class EvalConfig(PrefAtom):
    """Evaluation options.

    """
    #: Quantity compared to the threshold in threshold mode.
    threshold_on = Enum('logit', 'probability').tag(pref=True)

    #: Whether episodes without retrieval count in the hit denominator.
    hit_all_episodes = Bool(False).tag(pref=True)

    #: Number of thresholds of the default sweep grid.
    sweep_points = Int(41).tag(pref=True)

    #: Probability threshold used by transfer reports.
    transfer_threshold = Float(0.5).tag(pref=True)

    def check(self, path=''):
        test, traceback = super(EvalConfig, self).check(path)
        if self.sweep_points < 2:
            test = self._fail(traceback, path, 'sweep_points',
                              'A sweep needs at least two points.')
        if not 0 < self.transfer_threshold < 1:
            test = self._fail(traceback, path, 'transfer_threshold',
                              'The threshold must lie in (0, 1).')
        return test, traceback


class IngestConfig(PrefAtom):
    """Options used when loading external QA and corpus files.

    """
    #: Maximal number of tokens kept per document.
    snippet_tokens = Int(64).tag(pref=True)

    #: Skip malformed lines instead of failing.
    permissive = Bool(False).tag(pref=True)

    def check(self, path=''):
        test, traceback = super(IngestConfig, self).check(path)
        if self.snippet_tokens < 1:
            test = self._fail(traceback, path, 'snippet_tokens',
                              'The snippet budget must be positive.')
        return test, traceback


class WorldSpec(PrefAtom):
    """Knobs of a synthetic QA world.

    """
    #: Number of questions.
    n_questions = Int(-1).tag(pref=True, required=True)

    #: Fraction of questions whose memory entry is correct.
    p_known = Float(0.3).tag(pref=True)

    #: Fraction of questions whose memory entry is wrong.
    p_known_wrong = Float(0.2).tag(pref=True)

    #: Fraction of questions whose answer appears in the corpus.
    p_covered = Float(0.7).tag(pref=True)

    #: Fraction of covered questions only found through one rewrite.
    p_ambiguous = Float(0.3).tag(pref=True)

    #: Fraction of the other covered questions whose gold document ranks
    #: between 2 and top_k under every rewrite.
    p_buried = Float(0.25).tag(pref=True)

    #: Number of distractor documents sharing a question entity.
    distractors_per_question = Int(6).tag(pref=True)

    #: Number of synthetic entities to draw names from.
    vocab_size = Int(2000).tag(pref=True)

    #: Probability that the relation asked about follows the category.
    relation_skew = Float(0.8).tag(pref=True)

    #: Number of snippets used when verifying ambiguous and buried questions.
    top_k = Int(4).tag(pref=True)

    #: Seed of the generation.
    seed = Int(0).tag(pref=True)

    def check(self, path=''):
        test, traceback = super(WorldSpec, self).check(path)
        if self.n_questions < 1:
            test = self._fail(traceback, path, 'n_questions',
                              'The number of questions is required and '
                              'must be positive.')
        for name in ('p_known', 'p_known_wrong', 'p_covered', 'p_ambiguous',
                     'p_buried', 'relation_skew'):
            if not 0 <= getattr(self, name) <= 1:
                test = self._fail(traceback, path, name,
                                  'Fractions must lie in [0, 1].')
        if self.p_known + self.p_known_wrong > 1 + 1e-12:
            test = self._fail(traceback, path, 'p_known_wrong',
                              'p_known + p_known_wrong cannot exceed 1.')
        if self.distractors_per_question < 0:
            test = self._fail(traceback, path, 'distractors_per_question',
                              'The number of distractors cannot be '
                              'negative.')
        if self.vocab_size < self.n_questions:
            test = self._fail(traceback, path, 'vocab_size',
                              'Each question needs its own entity.')
        if self.top_k < 1:
            test = self._fail(traceback, path, 'top_k',
                              'At least one snippet must be retrieved.')
        return test, traceback


class RunConfig(PrefAtom):
    """Complete configuration of a run.

    """
    #: Root seed of the run (-1 means taken from the environment).
    seed = Int(-1).tag(pref=True, required=True)

    #: Directory under which the outputs are written.
    out_dir = Str('runs').tag(pref=True)

    world = Typed(WorldSpec, ()).tag(pref=True)

    env = Typed(EnvConfig, ()).tag(pref=True)

    policy = Typed(PolicyConfig, ()).tag(pref=True)

    bc = Typed(BcConfig, ()).tag(pref=True)

    ppo = Typed(PpoConfig, ()).tag(pref=True)

    train = Typed(TrainConfig, ()).tag(pref=True)

    eval = Typed(EvalConfig, ()).tag(pref=True)

    ingest = Typed(IngestConfig, ()).tag(pref=True)

    def check(self, path='', world_required=False):
        """Check all the sections.

        Parameters
        ----------
        world_required : bool, optional
            Whether the world section must be complete (generation).

        """
        test, traceback = super(RunConfig, self).check(path)
        if not world_required:
            for key in [k for k in traceback if k.startswith('world.')]:
                del traceback[key]
            test = not traceback
        if self.seed < 0:
            test = self._fail(traceback, path, 'seed',
                              'A non negative seed is required (set it in '
                              'the configuration or in {}).'
                              .format(SEED_ENV_VAR))
        return test, traceback

    def resolve_seed(self, environ=None):
        """Use the environment fallback when no seed was configured.

        """
        environ = os.environ if environ is None else environ
        if self.seed < 0 and environ.get(SEED_ENV_VAR):
            try:
                self.seed = int(environ[SEED_ENV_VAR])
            except ValueError as e:
                msg = '{} must be an integer'.format(SEED_ENV_VAR)
                raise ConfigurationError(msg, 'seed') from e
        return self.seed

    def reward_config(self):
        """Reward parameters derived from the env and ppo sections.

        """
        return self.env.reward_config(self.ppo.kl_beta)


#: Learning rates published for billion parameter policies.
PRESETS = {
    'published': {'bc': {'lr': 3e-4, 'batch_size': 8, 'epochs': 1},
                  'ppo': {'lr': 2e-6, 'batch_size': 32, 'epochs_per_iter': 1,
                          'sampling_budget': 5120},
                  'env': {'quota': 1, 'top_k': 4, 'alpha': 0.2}},
}


def apply_preset(config, name):
    """Apply a named preset to a run configuration.

    """
    try:
        preset = PRESETS[name]
    except KeyError as e:
        msg = 'Unknown preset {}, known presets are {}'
        raise ConfigurationError(msg.format(name, sorted(PRESETS)),
                                 'preset') from e
    config.update_members_from_preferences(preset)
    return config


def load_config(path, config=None):
    """Load a YAML configuration file into a RunConfig.

    """
    config = config if config is not None else RunConfig()
    try:
        with open(path) as f:
            content = yaml.safe_load(f) or {}
    except (OSError, yaml.YAMLError) as e:
        msg = 'Failed to read the configuration file {}: {}'
        raise ConfigurationError(msg.format(path, e)) from e
    if not isinstance(content, dict):
        raise ConfigurationError('The configuration file {} must contain a '
                                 'mapping'.format(path))
    config.update_members_from_preferences(content)
    return config


def _to_builtin(value):
    if isinstance(value, dict):
        return {k: _to_builtin(v) for k, v in value.items()}
    return value


def dump_config(config, path):
    """Write the resolved configuration (defaults expanded) as YAML.

    """
    with open(path, 'w') as f:
        yaml.safe_dump(_to_builtin(config.preferences_from_members()), f,
                       default_flow_style=False, sort_keys=False)


def derive_seed(seed, stage):
    """Derive the seed of a stage from the root seed.

    The stage name is hashed with CRC32 and used as spawn key of a numpy
    SeedSequence whose first 64 bits of state form the derived seed. Two
    stages with different names get independent streams while each stage
    stays reproducible on its own.

    """
    key = zlib.crc32(stage.encode('utf-8'))
    seq = np.random.SeedSequence(int(seed), spawn_key=(key,))
    low, high = seq.generate_state(2, dtype=np.uint32)
    return int(high) << 32 | int(low)


def make_rng(seed, stage):
    """Random generator of a given stage.

    """
    return np.random.default_rng(derive_seed(seed, stage))