# -*- coding: utf-8 -*-
# -----------------------------------------------------------------------------
# Copyright 2024 by SmartRAG Lab Authors, see AUTHORS for more details.
#
# Distributed under the terms of the BSD license.
#
# The full license is in the file LICENCE, distributed with this software.
# -----------------------------------------------------------------------------
"""Distributions of the policy heads, decoding modes and analytic gradients.

A composite action is made of a kind (Answer or Query) followed by a
sub-choice: a candidate index for an answer, a template id for a query. Its
log probability is log P(kind) + log P(sub-choice), the first term vanishing
when the kind is forced by the retrieval quota. The composite entropy is

    H = H_kind + P(Answer) H_answer + P(Query) H_rewrite

"""
import numpy as np
from atom.api import Bool, Enum, Float, Int, Tuple, Typed
from scipy.special import logsumexp

from ..env.records import ANSWER, KINDS, QUERY, Action, Record
from .features import PolicyInputs
from .templates import apply_template

#: Position of each kind in the decision head.
KIND_INDEX = {ANSWER: 0, QUERY: 1}


class SampleMode(Record):
    """How actions are decoded from the head distributions.

    """
    #: Draw from the distributions, take their argmax or threshold the
    #: Answer logit.
    kind = Enum('sample', 'greedy', 'threshold')

    #: Threshold compared to the Answer logit (or probability).
    tau = Float(0.0)

    #: Quantity compared to tau in threshold mode.
    threshold_on = Enum('logit', 'probability')

    #: Template used for every query instead of the rewrite head (-1 none).
    force_template = Int(-1)

    @classmethod
    def sample(cls):
        return cls(kind='sample')

    @classmethod
    def greedy(cls, force_template=-1):
        return cls(kind='greedy', force_template=force_template)

    @classmethod
    def threshold(cls, tau, threshold_on='logit', force_template=-1):
        return cls(kind='threshold', tau=float(tau),
                   threshold_on=threshold_on, force_template=force_template)


class Choice(Record):
    """A composite action expressed as head indices.

    """
    inputs = Typed(PolicyInputs)

    #: Allowed flag of each kind, in head order.
    allowed = Tuple(Bool())

    #: Index of the kind (0 Answer, 1 Query).
    kind = Int()

    #: Candidate index or template id.
    sub = Int()


def log_softmax(z):
    return z - logsumexp(z)


def masked_log_softmax(z, allowed):
    """Log softmax restricted to the allowed entries (-inf elsewhere).

    """
    allowed = np.asarray(allowed, dtype=bool)
    out = np.full(z.shape, -np.inf)
    out[allowed] = log_softmax(z[allowed])
    return out


def _entropy(logp):
    safe = np.where(np.isfinite(logp), logp, 0.0)
    return -float(np.sum(np.exp(logp) * safe))


def embed(params, x):
    """State embedding seen by the decision, rewrite and value heads.

    """
    if params.hidden_units:
        return np.tanh(params.W_hid @ x + params.b_hid)
    return x


def mask_of(kinds):
    """Allowed flags of a set of kinds, in head order.

    """
    return tuple(k in kinds for k in KINDS)


def decision_distribution(params, features, mask):
    """Probabilities over (Answer, Query) and the pre-mask logits.

    Parameters
    ----------
    params : PolicyParams
        Policy weights.

    features : numpy.ndarray
        State features.

    mask : set
        Allowed kinds, must not be empty.

    """
    logits = params.W_dec @ embed(params, features)
    return np.exp(masked_log_softmax(logits, mask_of(mask))), logits


def rewrite_distribution(params, features):
    """Probabilities over the rewrite templates.

    """
    return np.exp(log_softmax(params.W_rew @ embed(params, features)))


def answer_distribution(params, inputs):
    """Probabilities over the answer candidates of a state.

    """
    return np.exp(log_softmax(inputs.answer_scores(params.w_ans)))


def value_estimate(params, features):
    return float(params.w_val @ embed(params, features))


class HeadEvaluation(object):
    """Forward pass of all the heads for one state.

    """
    def __init__(self, params, inputs, allowed):
        self.inputs = inputs
        self.allowed = np.asarray(allowed, dtype=bool)
        self.e = embed(params, inputs.x)
        self.z_dec = params.W_dec @ self.e
        self.logp_dec = masked_log_softmax(self.z_dec, self.allowed)
        self.p_dec = np.exp(self.logp_dec)
        self.logp_rew = log_softmax(params.W_rew @ self.e)
        self.p_rew = np.exp(self.logp_rew)
        self.logp_ans = log_softmax(inputs.answer_scores(params.w_ans))
        self.p_ans = np.exp(self.logp_ans)
        self.value = float(params.w_val @ self.e)
        self.h_dec = _entropy(self.logp_dec)
        self.h_rew = _entropy(self.logp_rew)
        self.h_ans = _entropy(self.logp_ans)
        self.entropy = (self.h_dec + self.p_dec[0] * self.h_ans +
                        self.p_dec[1] * self.h_rew)

    def log_prob(self, kind, sub):
        """Composite log probability of an action.

        """
        sub_logp = self.logp_ans[sub] if kind == 0 else self.logp_rew[sub]
        return float(self.logp_dec[kind] + sub_logp)


def evaluate_choice(params, choice):
    """Forward pass for a recorded choice.

    Returns
    -------
    evaluation : HeadEvaluation

    log_prob : float
        Composite log probability of the choice.

    """
    ev = HeadEvaluation(params, choice.inputs, choice.allowed)
    return ev, ev.log_prob(choice.kind, choice.sub)


def new_gradients(params):
    return {name: np.zeros_like(array) for name, array in params.arrays()}


def accumulate_gradients(params, ev, choice, grads, c_logp=0.0,
                         c_entropy=0.0, c_value=0.0):
    """Add the gradient of c_logp log p + c_entropy H + c_value V.

    Parameters
    ----------
    params : PolicyParams
        Weights used for the forward pass.

    ev : HeadEvaluation
        Forward pass of the choice.

    choice : Choice
        Recorded action.

    grads : dict
        Gradients accumulated in place, by parameter name.

    """
    kind, sub = choice.kind, choice.sub
    allowed = ev.allowed
    safe_logp = np.where(allowed, ev.logp_dec, 0.0)
    onehot = np.zeros(2)
    onehot[kind] = 1.0

    g_z = c_logp * np.where(allowed, onehot - ev.p_dec, 0.0)
    if c_entropy:
        d_h = -ev.p_dec * (safe_logp + ev.h_dec)
        for i, h_sub in ((0, ev.h_ans), (1, ev.h_rew)):
            delta = np.zeros(2)
            delta[i] = 1.0
            d_h += h_sub * ev.p_dec[i] * (delta - ev.p_dec)
        g_z += c_entropy * np.where(allowed, d_h, 0.0)

    g_u = np.zeros_like(ev.p_rew)
    g_s = np.zeros_like(ev.p_ans)
    if kind == 1:
        g_u[sub] += c_logp
        g_u -= c_logp * ev.p_rew
    else:
        g_s[sub] += c_logp
        g_s -= c_logp * ev.p_ans
    if c_entropy:
        g_u += c_entropy * ev.p_dec[1] * (-ev.p_rew * (ev.logp_rew +
                                                       ev.h_rew))
        g_s += c_entropy * ev.p_dec[0] * (-ev.p_ans * (ev.logp_ans +
                                                       ev.h_ans))

    e = ev.e
    grads['W_dec'] += np.outer(g_z, e)
    grads['W_rew'] += np.outer(g_u, e)
    grads['w_val'] += c_value * e
    grads['w_ans'] += choice.inputs.answer_grad(g_s, params.dim)
    if params.hidden_units:
        d_e = params.W_dec.T @ g_z + params.W_rew.T @ g_u + \
            c_value * params.w_val
        d_pre = d_e * (1.0 - e * e)
        grads['W_hid'] += np.outer(d_pre, choice.inputs.x)
        grads['b_hid'] += d_pre
    return grads


def _inverse_cdf(probs, u):
    index = int(np.searchsorted(np.cumsum(probs), u, side='right'))
    return min(index, len(probs) - 1)


def _pick_kind(ev, rng, mode):
    allowed = ev.allowed
    if allowed.sum() == 1:
        return int(np.flatnonzero(allowed)[0])
    if mode.kind == 'sample':
        return _inverse_cdf(ev.p_dec, rng.random())
    if mode.kind == 'greedy':
        return int(np.argmax(ev.logp_dec))
    if mode.threshold_on == 'logit':
        stat = ev.z_dec[0]
    else:
        stat = np.exp(log_softmax(ev.z_dec))[0]
    return 0 if stat > mode.tau else 1


def sample_action(params, inputs, mask, rng, mode, templates, question_text):
    """Decode an action from the heads.

    Parameters
    ----------
    params : PolicyParams
        Policy weights.

    inputs : PolicyInputs
        Featurised state.

    mask : set
        Allowed kinds.

    rng : numpy.random.Generator
        Random stream, only used in sample mode.

    mode : SampleMode
        Decoding mode.

    templates : tuple of RewriteTemplate
        Templates indexed by the rewrite head.

    question_text : str
        Question rewritten by the chosen template.

    Returns
    -------
    action : Action

    log_prob : float
        Composite log probability of the action.

    value : float
        Value estimate of the state.

    choice : Choice
        Head indices of the action.

    """
    allowed = mask_of(mask)
    ev = HeadEvaluation(params, inputs, allowed)
    kind = _pick_kind(ev, rng, mode)
    if kind == 1:
        if mode.force_template >= 0:
            sub = mode.force_template
        elif mode.kind == 'sample':
            sub = _inverse_cdf(ev.p_rew, rng.random())
        else:
            sub = int(np.argmax(ev.logp_rew))
        action = Action.query(apply_template(templates[sub], question_text),
                              template=sub)
    else:
        if mode.kind == 'sample':
            sub = _inverse_cdf(ev.p_ans, rng.random())
        else:
            sub = int(np.argmax(ev.logp_ans))
        action = Action.answer(inputs.candidates[sub].text)
    choice = Choice(inputs=inputs, allowed=allowed, kind=kind, sub=sub)
    return action, ev.log_prob(kind, sub), ev.value, choice
