# -*- coding: utf-8 -*-
# -----------------------------------------------------------------------------
# Copyright 2024 by SmartRAG Lab Authors, see AUTHORS for more details.
#
# Distributed under the terms of the BSD license.
#
# The full license is in the file LICENCE, distributed with this software.
# -----------------------------------------------------------------------------
"""Retrieve-or-answer episode loop.

A policy is asked for an action until it answers. Once the retrieval quota
is exhausted only the Answer kind is allowed, which forces the policy to
answer using what it gathered so far.

"""
import json
import logging

from ..errors import InvariantError, QuotaViolation
from ..metrics import step_reward
from .records import (ANSWER, QUERY, Continue, Done, Observation, State,
                      Step, Trajectory)

logger = logging.getLogger(__name__)


def new_state(question):
    """Initial state of an episode: the bare question.

    """
    return State(question=question, observations=(), retrieve_count=0)


def allowed_action_kinds(state, cfg):
    """Kinds of action the policy may pick in a given state.

    Parameters
    ----------
    state : State
        Current state.

    cfg : EnvConfig
        Episode parameters (only the quota is used).

    Returns
    -------
    kinds : frozenset

    """
    if state.retrieve_count > cfg.quota:
        msg = 'State of question {} issued {} queries for a quota of {}.'
        raise InvariantError(msg.format(state.question.id,
                                        state.retrieve_count, cfg.quota))
    if state.retrieve_count < cfg.quota:
        return frozenset((ANSWER, QUERY))
    return frozenset((ANSWER,))


def apply_action(state, action, retriever, cfg):
    """Apply an action and return the outcome.

    Returns
    -------
    outcome : Continue or Done
        A query leads to a new state holding the extra observation, an
        answer ends the episode.

    """
    if action.kind not in allowed_action_kinds(state, cfg):
        msg = '{} is not allowed after {} queries (quota {}).'
        raise QuotaViolation(msg.format(action.kind, state.retrieve_count,
                                        cfg.quota))
    if action.kind == ANSWER:
        return Done(final_answer=action.text)

    observation = retriever.search(action.text, cfg.top_k)
    return Continue(next_state=state.with_observation(observation),
                    observation=observation)


def rollout(question, policy, retriever, cfg, rng, mode):
    """Run one complete episode.

    Parameters
    ----------
    question : Question
        Question to answer.

    policy : BasePolicy
        Policy deciding the actions.

    retriever : BaseRetriever
        Search backend.

    cfg : EnvConfig
        Episode parameters.

    rng : numpy.random.Generator
        Private random stream of the episode.

    mode : SampleMode
        Decoding mode of the policy.

    Returns
    -------
    trajectory : Trajectory

    """
    state = new_state(question)
    reward_cfg = cfg.reward_config()
    steps = []
    while True:
        kinds = allowed_action_kinds(state, cfg)
        decision = policy.decide(state, kinds, rng, mode)
        action = decision.action
        outcome = apply_action(state, action, retriever, cfg)
        reward = step_reward(action, question.gold_answers, reward_cfg)
        observation = None if outcome.terminal else outcome.observation
        steps.append(Step(state_digest=decision.digest, action=action,
                          log_prob=decision.log_prob, value=decision.value,
                          reward=reward, observation=observation,
                          inputs=decision.inputs))
        if outcome.terminal:
            return Trajectory(question_id=question.id, steps=tuple(steps),
                              final_answer=outcome.final_answer,
                              terminal=True)
        state = outcome.next_state


def replay_actions(question, actions, retriever, cfg):
    """Apply a fixed sequence of actions and return the observations.

    """
    state = new_state(question)
    observations = []
    for action in actions:
        outcome = apply_action(state, action, retriever, cfg)
        if outcome.terminal:
            break
        observations.append(outcome.observation)
        state = outcome.next_state
    return observations


def collected_text(trajectory):
    """Concatenated text of all the observations of an episode.

    """
    return Observation.from_snippets(
        '', [s for o in trajectory.observations for s in o.snippets]
        ).concatenated_text


def write_trajectories(path, trajectories, gamma):
    """Write trajectories as line-delimited JSON.

    """
    with open(path, 'w') as f:
        for trajectory in trajectories:
            f.write(json.dumps(trajectory.to_record(gamma), sort_keys=True))
            f.write('\n')
    logger.debug('Wrote %d trajectories to %s', len(trajectories), path)
