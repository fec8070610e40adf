# -*- coding: utf-8 -*-
# -----------------------------------------------------------------------------
# Copyright 2024 by SmartRAG Lab Authors, see AUTHORS for more details.
#
# Distributed under the terms of the BSD license.
#
# The full license is in the file LICENCE, distributed with this software.
# -----------------------------------------------------------------------------
"""
This module defines the policies driving the episodes.

:Contains:
    PolicyDecision :
        Action picked by a policy with the quantities recorded for training.
    BasePolicy :
        Base class for all policies.
    ParametricPolicy :
        Policy backed by the trainable heads.

"""
from inspect import cleandoc
from textwrap import fill

from atom.api import Float, Str, Typed, Value

from ..env.records import Action, Record
from .features import Featurizer
from .heads import sample_action
from .params import PolicyParams
from .templates import make_templates


class PolicyDecision(Record):
    """Action picked by a policy.

    """
    action = Typed(Action)

    #: Composite log probability of the action.
    log_prob = Float()

    #: Value estimate of the state.
    value = Float()

    #: Digest of the features of the state.
    digest = Str()

    #: Head indices and features kept for training.
    inputs = Value()


class BasePolicy(object):
    """Base class for all policies.

    A policy only sees the state (question text and observations) and its
    own memory. Gold answers are never passed to it.

    """
    def decide(self, state, kinds, rng, mode):
        """Pick the next action.

        Parameters
        ----------
        state : State
            Current state.

        kinds : frozenset
            Allowed action kinds.

        rng : numpy.random.Generator
            Random stream of the episode.

        mode : SampleMode
            Decoding mode.

        Returns
        -------
        decision : PolicyDecision

        """
        message = fill(cleandoc(
            '''This method is used to pick an action and should be
            implemented by classes subclassing BasePolicy'''),
            80)
        raise NotImplementedError(message)


class ParametricPolicy(BasePolicy):
    """Policy made of the featurizer and the four heads.

    Parameters
    ----------
    params : PolicyParams
        Weights of the heads, read only while the policy is used.

    memory : Memory
        Parametric knowledge of the base model.

    hash_seed : int
        Key of the feature hashing.

    """
    def __init__(self, params, memory, hash_seed):
        if not isinstance(params, PolicyParams):
            raise TypeError('Expected PolicyParams, got {}'
                            .format(type(params).__name__))
        self.params = params
        self.memory = memory
        self.featurizer = Featurizer(params.dim, hash_seed)
        self.templates = make_templates(params.n_templates)

    def inputs(self, state):
        return self.featurizer.inputs(state, self.memory)

    def decide(self, state, kinds, rng, mode):
        inputs = self.inputs(state)
        action, log_prob, value, choice = sample_action(
            self.params, inputs, kinds, rng, mode, self.templates,
            state.question.text)
        return PolicyDecision(action=action, log_prob=log_prob, value=value,
                              digest=inputs.digest, inputs=choice)
